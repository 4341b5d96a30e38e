#include "prs3/kinematics.hpp"

#include <cmath>
#include <sstream>

#include "prs3/errors.hpp"
#include "prs3/rotation.hpp"

namespace prs3 {

Eigen::Matrix3d rotation_from_tilt(double theta_x, double theta_y, double torsion) {
  return rot_x(theta_x) * rot_y(theta_y) * rot_z(torsion);
}

ChartAngles chart_angles(const Eigen::Matrix3d& R) {
  ChartAngles out;
  out.theta_x = std::atan2(-R(1, 2), R(2, 2));
  out.theta_y = std::atan2(R(0, 2), std::hypot(R(0, 0), R(0, 1)));
  out.torsion = std::atan2(-R(0, 1), R(0, 0));
  return out;
}

std::array<double, 3> closure_residuals(const Eigen::Vector3d& p, const Eigen::Matrix3d& R,
                                        const LimbFrames& frames) {
  std::array<double, 3> r{};
  for (std::size_t i = 0; i < 3; ++i) {
    r[i] = frames[i].s2.dot(p + R * frames[i].a_home);
  }
  return r;
}

namespace {

double max_abs(const std::array<double, 3>& r) {
  return std::max({std::abs(r[0]), std::abs(r[1]), std::abs(r[2])});
}

// Fills d, l, a and residual from p and R.
void complete_limbs(Pose& pose, const LimbFrames& frames, const ManipulatorConfig& config) {
  const double L = config.link_length;
  const double sign = config.assembly_mode == AssemblyMode::elbow_below ? -1.0 : 1.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const LimbFrame& f = frames[i];
    pose.a[i] = pose.R * f.a_home;
    const Eigen::Vector3d c = pose.p + pose.a[i];
    const double e = (c - f.b).dot(f.radial);
    if (std::abs(e) >= L) {
      std::ostringstream msg;
      msg << "limb " << f.index << " unreachable: radial offset " << e
          << " m exceeds link length " << L << " m";
      throw UnreachableError(msg.str(), f.index);
    }
    pose.d[i] = c.z() + sign * std::sqrt(L * L - e * e);
    pose.l[i] = c - (f.b + pose.d[i] * f.s1);
  }
  pose.residual = max_abs(closure_residuals(pose.p, pose.R, frames));
}

}  // namespace

Pose assemble_pose(double theta_x, double theta_y, double z, const ParasiticState& parasitic,
                   const ManipulatorConfig& config) {
  Pose pose;
  pose.theta_x = theta_x;
  pose.theta_y = theta_y;
  pose.torsion = parasitic.torsion;
  pose.p = Eigen::Vector3d(parasitic.x, parasitic.y, z);
  pose.R = rotation_from_tilt(theta_x, theta_y, parasitic.torsion);
  complete_limbs(pose, limb_frames(config), config);
  return pose;
}

Pose assemble_pose(const Eigen::Vector3d& p, const Eigen::Matrix3d& R,
                   const ManipulatorConfig& config) {
  Pose pose;
  const ChartAngles chart = chart_angles(R);
  pose.theta_x = chart.theta_x;
  pose.theta_y = chart.theta_y;
  pose.torsion = chart.torsion;
  pose.p = p;
  pose.R = R;
  complete_limbs(pose, limb_frames(config), config);
  return pose;
}

Pose solve_closure(double theta_x, double theta_y, double z, const ManipulatorConfig& config,
                   const ClosureOptions& options) {
  if (!std::isfinite(theta_x) || !std::isfinite(theta_y) || !std::isfinite(z)) {
    throw GeometryError("closure inputs must be finite");
  }
  if (options.enforce_tilt_limit) {
    const double limit = config.tilt_limit * (1.0 + 1e-12);
    if (std::abs(theta_x) > limit || std::abs(theta_y) > limit) {
      std::ostringstream msg;
      msg << "tilt (" << rad2deg(theta_x) << ", " << rad2deg(theta_y)
          << ") deg outside the workspace limit of " << rad2deg(config.tilt_limit) << " deg";
      throw GeometryError(msg.str());
    }
  }

  const LimbFrames frames = limb_frames(config);
  const Eigen::Matrix3d tilt = rot_x(theta_x) * rot_y(theta_y);
  Eigen::Vector3d q = Eigen::Vector3d::Zero();
  if (options.initial_guess) {
    q = Eigen::Vector3d(options.initial_guess->x, options.initial_guess->y,
                        options.initial_guess->torsion);
  }

  auto residual_at = [&](const Eigen::Vector3d& q_) {
    return closure_residuals(Eigen::Vector3d(q_.x(), q_.y(), z), tilt * rot_z(q_.z()), frames);
  };

  std::array<double, 3> r = residual_at(q);
  int iterations = 0;
  while (max_abs(r) >= options.tolerance) {
    if (iterations == options.max_iterations) {
      std::ostringstream msg;
      msg << "closure did not converge in " << options.max_iterations
          << " iterations at tilt (" << rad2deg(theta_x) << ", " << rad2deg(theta_y)
          << ") deg; last residual " << max_abs(r) << " m";
      throw ClosureError(msg.str(), max_abs(r));
    }
    // d/dtorsion of R a_home is tilt * R_z(torsion) * (z x a_home).
    const Eigen::Matrix3d R = tilt * rot_z(q.z());
    Eigen::Matrix3d J;
    for (int i = 0; i < 3; ++i) {
      const LimbFrame& f = frames[i];
      J(i, 0) = f.s2.x();
      J(i, 1) = f.s2.y();
      J(i, 2) = f.s2.dot(R * Eigen::Vector3d::UnitZ().cross(f.a_home));
    }
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv(2) <= 0.0 || sv(0) / sv(2) > 1e12) {
      throw SingularityError(SingularityKind::closure,
                             "closure Jacobian singular (condition number > 1e12)");
    }
    q -= svd.solve(Eigen::Vector3d(r[0], r[1], r[2]));
    r = residual_at(q);
    ++iterations;
  }

  Pose pose = assemble_pose(theta_x, theta_y, z, ParasiticState{q.x(), q.y(), q.z()}, config);
  pose.iterations = iterations;
  return pose;
}

SphericalJointAngles spherical_joint_angles(const Pose& pose, std::size_t limb,
                                            const ManipulatorConfig& config) {
  if (limb >= 3) throw GeometryError("limb index out of range");
  const LimbFrame f = limb_frames(config)[limb];
  const Eigen::Vector3d& l = pose.l[limb];

  SphericalJointAngles out;
  // Elevation of the link about the revolute axis, measured from the prismatic axis.
  out.theta2 = std::atan2(l.dot(f.radial), l.dot(f.s1));
  out.R_F = rot_z(f.xi) * rot_y(out.theta2);
  out.relative = out.R_F.transpose() * pose.R;

  const Eigen::Matrix3d& M = out.relative;
  const double cos4 = std::hypot(M(1, 0), M(1, 1));
  if (cos4 < 1e-9) {
    std::ostringstream msg;
    msg << "spherical joint of limb " << f.index << " at gimbal lock (|cos theta4| = " << cos4
        << ")";
    throw DegenerateDecompositionError(msg.str());
  }
  out.theta4 = std::atan2(-M(1, 2), cos4);
  out.theta3 = std::atan2(M(0, 2), M(2, 2));
  out.theta5 = std::atan2(M(1, 0), M(1, 1));
  return out;
}

}  // namespace prs3

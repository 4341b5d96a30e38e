#pragma once

#include <array>
#include <optional>

#include <Eigen/Dense>

#include "prs3/config.hpp"

namespace prs3 {

/// Parasitic coordinates of the platform: in-plane translation and torsion.
struct ParasiticState {
  double x = 0.0;
  double y = 0.0;
  double torsion = 0.0;
};

/// A closed configuration of the manipulator.
struct Pose {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  double theta_x = 0.0;
  double theta_y = 0.0;
  double torsion = 0.0;
  std::array<double, 3> d{};
  std::array<Eigen::Vector3d, 3> l;
  /// R * a_home, i.e. platform center to spherical-joint center in base axes.
  std::array<Eigen::Vector3d, 3> a;
  /// max_i |s2_i . (p + a_i)| at the returned pose, m.
  double residual = 0.0;
  int iterations = 0;

  ParasiticState parasitic() const { return {p.x(), p.y(), torsion}; }
};

struct SphericalJointAngles {
  double theta2 = 0.0;  // link elevation from the prismatic axis
  double theta3 = 0.0;
  double theta4 = 0.0;
  double theta5 = 0.0;
  /// Frame of the spherical joint (prismatic + revolute chain) in base axes.
  Eigen::Matrix3d R_F = Eigen::Matrix3d::Identity();
  /// R_y(theta3) R_x(theta4) R_z(theta5) as extracted from the limb chain.
  Eigen::Matrix3d relative = Eigen::Matrix3d::Identity();
};

/// Orientation chart: R = R_x(theta_x) R_y(theta_y) R_z(torsion).
Eigen::Matrix3d rotation_from_tilt(double theta_x, double theta_y, double torsion);

struct ChartAngles {
  double theta_x = 0.0;
  double theta_y = 0.0;
  double torsion = 0.0;
};

/// Inverse of `rotation_from_tilt` on the branch |theta_y| < pi/2.
ChartAngles chart_angles(const Eigen::Matrix3d& R);

/// Limb-plane residuals s2_i . (p + R a_home_i).
std::array<double, 3> closure_residuals(const Eigen::Vector3d& p, const Eigen::Matrix3d& R,
                                        const LimbFrames& frames);

/// Builds a pose from explicit parasitic coordinates without solving anything.
/// Carriage heights and limb vectors follow from the elbow formula.
Pose assemble_pose(double theta_x, double theta_y, double z, const ParasiticState& parasitic,
                   const ManipulatorConfig& config);

/// Same as above with an arbitrary rotation; theta/torsion fields are read back
/// through the chart.
Pose assemble_pose(const Eigen::Vector3d& p, const Eigen::Matrix3d& R,
                   const ManipulatorConfig& config);

struct ClosureOptions {
  std::optional<ParasiticState> initial_guess;
  double tolerance = 1e-12;
  int max_iterations = 50;
  bool enforce_tilt_limit = true;
};

/// Newton solve of the three limb-plane constraints for (x, y, torsion).
Pose solve_closure(double theta_x, double theta_y, double z, const ManipulatorConfig& config,
                   const ClosureOptions& options = {});

/// Spherical-joint Euler angles (Y-X-Z) for limb 0..2.
SphericalJointAngles spherical_joint_angles(const Pose& pose, std::size_t limb,
                                            const ManipulatorConfig& config);

}  // namespace prs3

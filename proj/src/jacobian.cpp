#include "prs3/jacobian.hpp"

#include <cmath>
#include <sstream>

#include "prs3/errors.hpp"

namespace prs3 {

JacobianBundle inverse_jacobian(const Pose& pose, const ManipulatorConfig& config) {
  const LimbFrames frames = limb_frames(config);
  JacobianBundle out;
  for (int i = 0; i < 3; ++i) {
    const LimbFrame& f = frames[i];
    const Eigen::Vector3d& l = pose.l[i];
    const Eigen::Vector3d& a = pose.a[i];
    const double along = l.dot(f.s1);
    if (std::abs(along) < 1e-9) {
      std::ostringstream msg;
      msg << "actuation singularity: link of limb " << f.index << " is horizontal";
      throw SingularityError(SingularityKind::actuation, msg.str());
    }
    out.Gt.block<1, 3>(i, 0) = l.transpose() / along;
    out.Gt.block<1, 3>(i, 3) = a.cross(l).transpose() / along;
    out.Gt.block<1, 3>(3 + i, 0) = f.s2.transpose();
    out.Gt.block<1, 3>(3 + i, 3) = a.cross(f.s2).transpose();
  }
  const Matrix6d G = out.Gt.transpose();
  out.Ga = G.leftCols<3>();
  out.Gc = G.rightCols<3>();

  const ParasiticCoupling coupling = parasitic_coupling(pose, config);
  out.C1 = coupling.C1;
  out.C2 = coupling.C2;
  out.M = coupling.M;
  return out;
}

Eigen::Vector3d actuation_rates(const JacobianBundle& bundle, const Vector6d& twist) {
  const double violation = (bundle.Gc.transpose() * twist).cwiseAbs().maxCoeff();
  if (violation >= 1e-9) {
    std::ostringstream msg;
    msg << "twist is not constraint compatible (constraint residual " << violation << ")";
    throw ConstraintViolationError(msg.str(), violation);
  }
  return bundle.Ga.transpose() * twist;
}

Eigen::Vector3d actuation_rates(const Pose& pose, const Vector6d& twist,
                                const ManipulatorConfig& config) {
  return actuation_rates(inverse_jacobian(pose, config), twist);
}

Matrix6d projection_matrix(const Matrix63d& Gc) {
  Eigen::JacobiSVD<Matrix63d> svd(Gc, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sv = svd.singularValues();
  const double cutoff = 1e-10 * sv(0);
  if (!(sv(0) > 0.0) || sv(2) <= cutoff) {
    throw SingularityError(SingularityKind::constraint,
                           "constraint singularity: constraint wrenches lose rank");
  }
  // Gc Gc^+ = U_r U_r^T for the rank-3 column space.
  const Matrix63d U = svd.matrixU().leftCols<3>();
  return Matrix6d::Identity() - U * U.transpose();
}

ParasiticCoupling parasitic_coupling(const Eigen::Matrix3d& R, const ManipulatorConfig& config) {
  const LimbFrames frames = limb_frames(config);
  ParasiticCoupling out;
  for (int i = 0; i < 3; ++i) {
    const LimbFrame& f = frames[i];
    const Eigen::Vector3d a = R * f.a_home;
    const double c = std::cos(f.xi);
    const double s = std::sin(f.xi);
    // Constraint row i applied to a twist, with parasitic terms on the left:
    // -s v_x + c v_y + (a_x c + a_y s) w_z = a_z c w_x + a_z s w_y
    out.C1.row(i) << -s, c, a.x() * c + a.y() * s;
    out.C2.row(i) << a.z() * c, a.z() * s;
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(out.C1);
  const Eigen::Vector3d sv = svd.singularValues();
  if (!(sv(2) > 0.0) || sv(0) / sv(2) > 1e12) {
    throw SingularityError(SingularityKind::parasitic,
                           "parasitic coupling singular: C1 condition number > 1e12");
  }
  out.M.setZero();
  out.M.leftCols<2>() = out.C1.partialPivLu().solve(out.C2);
  return out;
}

ParasiticCoupling parasitic_coupling(const Pose& pose, const ManipulatorConfig& config) {
  return parasitic_coupling(pose.R, config);
}

ReshuffledJacobian reshuffle(const Matrix6d& Gt) {
  Matrix6d permuted;
  for (int c = 0; c < 6; ++c) permuted.col(c) = Gt.col(kParasiticOrder[c]);
  ReshuffledJacobian out;
  out.G_ad = permuted.topLeftCorner<3, 3>();
  out.G_af = permuted.topRightCorner<3, 3>();
  out.G_cd = permuted.bottomLeftCorner<3, 3>();
  out.G_cf = permuted.bottomRightCorner<3, 3>();
  return out;
}

Matrix6d ReshuffledJacobian::assembled() const {
  Matrix6d m;
  m << G_ad, G_af, G_cd, G_cf;
  return m;
}

Matrix6d unshuffle(const ReshuffledJacobian& blocks) {
  const Matrix6d permuted = blocks.assembled();
  Matrix6d Gt;
  for (int c = 0; c < 6; ++c) Gt.col(kParasiticOrder[c]) = permuted.col(c);
  return Gt;
}

}  // namespace prs3

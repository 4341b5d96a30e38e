#pragma once

#include <array>

#include <Eigen/Dense>

#include "prs3/config.hpp"
#include "prs3/kinematics.hpp"
#include "prs3/rotation.hpp"

namespace prs3 {

using Matrix63d = Eigen::Matrix<double, 6, 3>;
using Matrix32d = Eigen::Matrix<double, 3, 2>;

/// Inverse Jacobian of the 3-PRS platform.
///
/// Twists are ordered [v; w] with v the velocity of the platform center and w
/// the angular velocity, both in base axes. Rows 0..2 of `Gt` map a twist to
/// carriage rates; rows 3..5 are the limb constraint wrenches, which vanish on
/// every feasible twist.
///
/// Moment terms carry the sign that makes the rows exact derivatives of the
/// position-level kinematics: a spherical-joint center moves with v + w x a_i,
/// so the actuation row is [l_i | a_i x l_i] / (l_i . s1) and the constraint
/// row is [s2_i | a_i x s2_i]. Finite differences of `solve_closure` confirm
/// this convention (see the jacobian and acceptance tests).
struct JacobianBundle {
  Matrix6d Gt = Matrix6d::Zero();
  Matrix63d Ga = Matrix63d::Zero();  // actuation columns of G = Gt^T
  Matrix63d Gc = Matrix63d::Zero();  // constraint columns of G
  Eigen::Matrix3d C1 = Eigen::Matrix3d::Zero();
  Matrix32d C2 = Matrix32d::Zero();
  /// Maps (w_x, w_y, v_z) to the parasitic rates (v_x, v_y, w_z); third column is zero.
  Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
};

/// Column order (v_x, v_y, w_z | v_z, w_x, w_y): parasitic first, independent second.
inline constexpr std::array<int, 6> kParasiticOrder = {0, 1, 5, 2, 3, 4};

struct ReshuffledJacobian {
  Eigen::Matrix3d G_ad;  // actuation rows, parasitic columns
  Eigen::Matrix3d G_af;  // actuation rows, independent columns
  Eigen::Matrix3d G_cd;
  Eigen::Matrix3d G_cf;

  /// Stacked [[G_ad, G_af], [G_cd, G_cf]].
  Matrix6d assembled() const;
};

struct ParasiticCoupling {
  Eigen::Matrix3d C1;
  Matrix32d C2;
  Eigen::Matrix3d M;
};

JacobianBundle inverse_jacobian(const Pose& pose, const ManipulatorConfig& config);

/// Carriage rates for a feasible twist. Throws ConstraintViolationError when
/// the constraint rows do not annihilate the twist (tolerance 1e-9).
Eigen::Vector3d actuation_rates(const JacobianBundle& bundle, const Vector6d& twist);
Eigen::Vector3d actuation_rates(const Pose& pose, const Vector6d& twist,
                                const ManipulatorConfig& config);

/// P = I - Gc Gc^+ with an SVD pseudo-inverse (relative cutoff 1e-10).
Matrix6d projection_matrix(const Matrix63d& Gc);

/// C1 x_d = C2 x_i written for the three limbs, and M = [C1^-1 C2 | 0].
/// Depends only on the platform orientation through a_i = R a_home_i.
ParasiticCoupling parasitic_coupling(const Eigen::Matrix3d& R, const ManipulatorConfig& config);
ParasiticCoupling parasitic_coupling(const Pose& pose, const ManipulatorConfig& config);

ReshuffledJacobian reshuffle(const Matrix6d& Gt);

/// Undo `reshuffle`: back to (v, w) column order.
Matrix6d unshuffle(const ReshuffledJacobian& blocks);

}  // namespace prs3

#pragma once

#include <array>
#include <initializer_list>

#include <Eigen/Dense>

#include "prs3/config.hpp"
#include "prs3/jacobian.hpp"
#include "prs3/kinematics.hpp"
#include "prs3/rotation.hpp"

namespace prs3 {

/// Springs in series: 1/k = sum 1/k_j. Infinite entries are rigid.
/// Throws ParameterError for a nonpositive or NaN coefficient.
double series_stiffness(std::initializer_list<double> coefficients);

/// Carriage assembly coefficient for a carriage at height d (N/m). The
/// parametric model grows the lead-screw compliance linearly with the loaded
/// screw length `screw_length_offset + d`.
double carriage_stiffness(double d, const ManipulatorConfig& config);

/// Overall axial coefficient k_ai of one limb (carriage, revolute joint, limb body).
double limb_axial_stiffness(double d, const ManipulatorConfig& config);

/// R_F^T diag(k_six, k_siy, k_siz) R_F.
Eigen::Matrix3d spherical_stiffness(const Eigen::Matrix3d& R_F, const SphericalAxes& axes);

/// Overall torsional coefficient k_ci (N*m/rad) about the revolute axis of limb 0..2.
double limb_torsional_stiffness(const Pose& pose, std::size_t limb,
                                const ManipulatorConfig& config);

struct ComponentStiffness {
  std::array<double, 3> k_axial{};
  std::array<double, 3> k_torsional{};
  std::array<Eigen::Matrix3d, 3> K_s;
  /// diag(k_a1, k_a2, k_a3, k_c1, k_c2, k_c3)
  Vector6d K_diag = Vector6d::Zero();
};

ComponentStiffness component_stiffness(const Pose& pose, const ManipulatorConfig& config);

/// Cartesian stiffness K mapping a platform deflection [dr; da] to a wrench
/// [f; m]. The blocks follow the [[K_a_par, K_a_perp], [K_c_par, K_c_perp]]
/// partition.
struct CartesianStiffness {
  Matrix6d K = Matrix6d::Zero();
  /// Reference point relative to the platform center, base axes, m.
  Eigen::Vector3d reference_offset = Eigen::Vector3d::Zero();

  Eigen::Matrix3d K_a_par() const { return K.topLeftCorner<3, 3>(); }
  Eigen::Matrix3d K_a_perp() const { return K.topRightCorner<3, 3>(); }
  Eigen::Matrix3d K_c_par() const { return K.bottomLeftCorner<3, 3>(); }
  Eigen::Matrix3d K_c_perp() const { return K.bottomRightCorner<3, 3>(); }
};

/// K = G diag(K_diag) G^T, with G = bundle.Gt^T.
CartesianStiffness assemble_cartesian_stiffness(const JacobianBundle& bundle,
                                                const ComponentStiffness& components);

/// Full pipeline at a closed pose. Applies characteristic-length scaling when
/// the config enables it.
CartesianStiffness assemble_cartesian_stiffness(const Pose& pose, const ManipulatorConfig& config);

/// 6x6 adjoint of a pure translation: a twist at the shifted point maps to the
/// platform center through [[I, [r]x], [0, I]].
Matrix6d translation_adjoint(const Eigen::Vector3d& offset);

/// K' = Ad^T K Ad, re-expressed at reference_offset + offset.
CartesianStiffness shift_reference(const CartesianStiffness& K, const Eigen::Vector3d& offset);

/// Rotational rows/cols divided by `length` so all blocks share N/m units.
Matrix6d scale_characteristic_length(const Matrix6d& K, double length);

struct DiagonalStiffness {
  double kpx = 0, kpy = 0, kpz = 0;
  double kax = 0, kay = 0, kaz = 0;

  std::array<double, 6> values() const { return {kpx, kpy, kpz, kax, kay, kaz}; }
};

DiagonalStiffness diagonal_stiffness(const Matrix6d& K);

/// K reordered as (v_x, v_y, w_z | v_z, w_x, w_y) on both sides.
struct ReorganizedStiffness {
  Eigen::Matrix3d K_dd;
  Eigen::Matrix3d K_df;
  Eigen::Matrix3d K_fd;
  Eigen::Matrix3d K_ff;
};

ReorganizedStiffness reorganize_by_parasitic(const Matrix6d& K);

}  // namespace prs3

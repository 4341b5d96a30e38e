#include "prs3/stiffness.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "prs3/errors.hpp"

namespace prs3 {

double series_stiffness(std::initializer_list<double> coefficients) {
  double compliance = 0.0;
  for (double k : coefficients) {
    if (!(k > 0.0)) {
      std::ostringstream msg;
      msg << "stiffness coefficient must be strictly positive, got " << k;
      throw ParameterError(msg.str());
    }
    compliance += 1.0 / k;
  }
  if (compliance == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / compliance;
}

double carriage_stiffness(double d, const ManipulatorConfig& config) {
  if (config.compliance_model == ComplianceModel::lumped) return config.axial.k_carriage;
  if (!config.parametric) throw ParameterError("parametric compliance model without parameters");
  const ParametricCompliance& pc = *config.parametric;
  const double screw_length = pc.screw_length_offset + d;
  if (screw_length < 0.0) {
    std::ostringstream msg;
    msg << "loaded lead-screw length " << screw_length << " m is negative (carriage height "
        << d << " m); raise parametric.screw_length_offset";
    throw ParameterError(msg.str());
  }
  const double compliance = screw_length / pc.ea_leadscrew + 1.0 / pc.k_guiderail + 1.0 / pc.k_slider;
  return 1.0 / compliance;
}

double limb_axial_stiffness(double d, const ManipulatorConfig& config) {
  const double k_limb_body = config.compliance_model == ComplianceModel::parametric && config.parametric
                                 ? config.parametric->ea_link / config.link_length
                                 : config.axial.k_limb_body;
  return series_stiffness({carriage_stiffness(d, config), config.axial.k_revolute, k_limb_body});
}

Eigen::Matrix3d spherical_stiffness(const Eigen::Matrix3d& R_F, const SphericalAxes& axes) {
  const Eigen::Vector3d diag(axes.k_six, axes.k_siy, axes.k_siz);
  return R_F.transpose() * diag.asDiagonal() * R_F;
}

namespace {

double torsional_from_frame(const Eigen::Matrix3d& K_s, const Eigen::Vector3d& s2,
                            const ManipulatorConfig& config) {
  const double k_si = s2.dot(K_s * s2);
  return series_stiffness({k_si, config.torsional.k_limb_body_t});
}

}  // namespace

double limb_torsional_stiffness(const Pose& pose, std::size_t limb,
                                const ManipulatorConfig& config) {
  const SphericalJointAngles angles = spherical_joint_angles(pose, limb, config);
  const Eigen::Matrix3d K_s = spherical_stiffness(angles.R_F, config.spherical_axes);
  return torsional_from_frame(K_s, limb_frames(config)[limb].s2, config);
}

ComponentStiffness component_stiffness(const Pose& pose, const ManipulatorConfig& config) {
  const LimbFrames frames = limb_frames(config);
  ComponentStiffness out;
  for (std::size_t i = 0; i < 3; ++i) {
    const SphericalJointAngles angles = spherical_joint_angles(pose, i, config);
    out.K_s[i] = spherical_stiffness(angles.R_F, config.spherical_axes);
    out.k_axial[i] = limb_axial_stiffness(pose.d[i], config);
    out.k_torsional[i] = torsional_from_frame(out.K_s[i], frames[i].s2, config);
    out.K_diag(i) = out.k_axial[i];
    out.K_diag(3 + i) = out.k_torsional[i];
  }
  return out;
}

CartesianStiffness assemble_cartesian_stiffness(const JacobianBundle& bundle,
                                                const ComponentStiffness& components) {
  CartesianStiffness out;
  out.K = bundle.Gt.transpose() * components.K_diag.asDiagonal() * bundle.Gt;
  return out;
}

CartesianStiffness assemble_cartesian_stiffness(const Pose& pose, const ManipulatorConfig& config) {
  CartesianStiffness out =
      assemble_cartesian_stiffness(inverse_jacobian(pose, config), component_stiffness(pose, config));
  if (config.characteristic_length > 0.0) {
    out.K = scale_characteristic_length(out.K, config.characteristic_length);
  }
  return out;
}

Matrix6d translation_adjoint(const Eigen::Vector3d& offset) {
  Matrix6d Ad = Matrix6d::Identity();
  Ad.topRightCorner<3, 3>() = skew(offset);
  return Ad;
}

CartesianStiffness shift_reference(const CartesianStiffness& K, const Eigen::Vector3d& offset) {
  const Matrix6d Ad = translation_adjoint(offset);
  const Matrix6d shifted = Ad.transpose() * K.K * Ad;
  CartesianStiffness out;
  out.K = 0.5 * (shifted + shifted.transpose());
  out.reference_offset = K.reference_offset + offset;
  return out;
}

Matrix6d scale_characteristic_length(const Matrix6d& K, double length) {
  if (!(length > 0.0)) throw ParameterError("characteristic length must be positive");
  Vector6d s;
  s << 1.0, 1.0, 1.0, 1.0 / length, 1.0 / length, 1.0 / length;
  return s.asDiagonal() * K * s.asDiagonal();
}

DiagonalStiffness diagonal_stiffness(const Matrix6d& K) {
  return {K(0, 0), K(1, 1), K(2, 2), K(3, 3), K(4, 4), K(5, 5)};
}

ReorganizedStiffness reorganize_by_parasitic(const Matrix6d& K) {
  Matrix6d permuted;
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) permuted(r, c) = K(kParasiticOrder[r], kParasiticOrder[c]);
  }
  return {permuted.topLeftCorner<3, 3>(), permuted.topRightCorner<3, 3>(),
          permuted.bottomLeftCorner<3, 3>(), permuted.bottomRightCorner<3, 3>()};
}

}  // namespace prs3

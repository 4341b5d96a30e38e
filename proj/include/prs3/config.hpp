#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace prs3 {

/// Torsional stiffness given per degree, expressed per radian.
constexpr double per_deg_to_per_rad(double k) { return k * (180.0 / 3.14159265358979323846); }

enum class ComplianceModel { lumped, parametric };

/// Sign of the square root used when recovering the carriage height.
enum class AssemblyMode { elbow_below, elbow_above };

/// Axial coefficients of the limb's series chain, N/m.
struct AxialStiffness {
  double k_carriage = 3.8e7;
  double k_revolute = 3.2e9;
  double k_limb_body = 976e6;

  bool operator==(const AxialStiffness&) const = default;
};

/// Torsional coefficients, stored in N*m/rad. Config files carry N*m/deg.
struct TorsionalStiffness {
  double k_spherical = per_deg_to_per_rad(8.9e5);
  double k_limb_body_t = per_deg_to_per_rad(7.8e5);

  bool operator==(const TorsionalStiffness&) const = default;
};

/// Diagonal of the spherical-joint stiffness in its own frame, N*m/rad.
struct SphericalAxes {
  double k_six = per_deg_to_per_rad(8.9e5);
  double k_siy = per_deg_to_per_rad(8.9e5);
  double k_siz = per_deg_to_per_rad(8.9e5);

  bool operator==(const SphericalAxes&) const = default;
};

/// Carriage and link built up from material data instead of lumped constants.
struct ParametricCompliance {
  double ea_leadscrew = 0.0;         // N
  double ea_link = 0.0;              // N
  double k_guiderail = 0.0;          // N/m
  double k_slider = 0.0;             // N/m
  double screw_length_offset = 0.0;  // m, loaded screw length at d = 0

  bool operator==(const ParametricCompliance&) const = default;
};

struct ManipulatorConfig {
  double r_base = 0.326923;
  double r_platform = 0.250;
  double link_length = 0.400;
  int limb_count = 3;
  double tilt_limit = 40.0 * 3.14159265358979323846 / 180.0;
  double heave = 0.39;
  AssemblyMode assembly_mode = AssemblyMode::elbow_below;

  AxialStiffness axial;
  TorsionalStiffness torsional;
  SphericalAxes spherical_axes;
  ComplianceModel compliance_model = ComplianceModel::lumped;
  std::optional<ParametricCompliance> parametric;

  /// When > 0, rotational rows/cols of K are divided by this length (m).
  double characteristic_length = 0.0;

  /// Table values of the reference machine.
  static ManipulatorConfig defaults();

  /// Throws ConfigError / GeometryError when an invariant fails.
  void validate() const;

  bool operator==(const ManipulatorConfig&) const = default;
};

struct LimbFrame {
  int index = 0;  // 1..3
  double xi = 0.0;
  Eigen::Vector3d b;
  Eigen::Vector3d a_home;
  Eigen::Vector3d s1;
  Eigen::Vector3d s2;
  /// Unit radial direction (cos xi, sin xi, 0).
  Eigen::Vector3d radial;
};

using LimbFrames = std::array<LimbFrame, 3>;

LimbFrames limb_frames(const ManipulatorConfig& config);

/// Parse a JSON document, apply `key=value` overrides (dotted paths allowed,
/// bare leaf names resolved when unambiguous), fill defaults and validate.
ManipulatorConfig load_config(std::string_view document,
                              const std::vector<std::string>& overrides = {});

ManipulatorConfig load_config_file(const std::filesystem::path& path,
                                   const std::vector<std::string>& overrides = {});

/// Defaults plus overrides, no document.
ManipulatorConfig load_default_config(const std::vector<std::string>& overrides = {});

/// Canonical JSON text. Reloading it reproduces the config bit-for-bit.
std::string serialize_config(const ManipulatorConfig& config);

std::string to_string(ComplianceModel m);
std::string to_string(AssemblyMode m);

}  // namespace prs3

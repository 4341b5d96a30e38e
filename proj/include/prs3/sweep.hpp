#pragma once

#include <array>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prs3/config.hpp"
#include "prs3/kinematics.hpp"
#include "prs3/rotation.hpp"

namespace prs3 {

/// Uniform (theta_x, theta_y) grid at fixed heave. Node (i, j) has index
/// i * resolution + j, with i walking theta_x and j walking theta_y.
struct OrientationGrid {
  std::vector<double> theta_x;
  std::vector<double> theta_y;
  double z = 0.0;
  int resolution = 0;

  /// resolution must be odd and >= 3 so that the zero-tilt node exists.
  static OrientationGrid uniform(double tilt_limit, int resolution, double z);

  std::size_t size() const { return theta_x.size() * theta_y.size(); }
  std::size_t center_index() const { return size() / 2; }
};

enum class StiffnessColumn { kpx = 0, kpy, kpz, kax, kay, kaz };

inline constexpr std::array<const char*, 6> kStiffnessColumnNames = {"kpx", "kpy", "kpz",
                                                                     "kax", "kay", "kaz"};

struct SurfaceSample {
  double theta_x = 0.0;
  double theta_y = 0.0;
  double x_par = 0.0;
  double y_par = 0.0;
  double torsion = 0.0;
  double residual = 0.0;
  std::array<double, 6> k{std::numeric_limits<double>::quiet_NaN(),
                          std::numeric_limits<double>::quiet_NaN(),
                          std::numeric_limits<double>::quiet_NaN(),
                          std::numeric_limits<double>::quiet_NaN(),
                          std::numeric_limits<double>::quiet_NaN(),
                          std::numeric_limits<double>::quiet_NaN()};
  /// Full K at the node, only populated by `stiffness_surfaces`.
  Matrix6d K = Matrix6d::Constant(std::numeric_limits<double>::quiet_NaN());
  bool converged = false;
  std::string error;

  double value(StiffnessColumn c) const { return k[static_cast<std::size_t>(c)]; }
};

struct SweepOptions {
  /// 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
  /// Seed each node's Newton solve with the previous node of its row.
  bool warm_start = true;
};

/// Closure at every node. Failed nodes are flagged, never fatal.
std::vector<SurfaceSample> parasitic_map(const OrientationGrid& grid, const ManipulatorConfig& config,
                                         const SweepOptions& options = {});

/// Closure, Jacobian and Cartesian stiffness at every node. Each sample holds
/// both orientation and parasitic coordinates.
std::vector<SurfaceSample> stiffness_surfaces(const OrientationGrid& grid,
                                              const ManipulatorConfig& config,
                                              const SweepOptions& options = {});

struct SurfaceExtremum {
  std::size_t argmax = 0;
  std::size_t argmin = 0;
  double max = 0.0;
  double min = 0.0;
};

/// Over converged samples only; first occurrence wins on exact ties.
SurfaceExtremum surface_extremum(const std::vector<SurfaceSample>& samples, StiffnessColumn column);

/// Every converged node whose value is within `rel_tol * |extremum|` of the
/// surface maximum (or minimum).
std::vector<std::size_t> extremum_nodes(const std::vector<SurfaceSample>& samples,
                                        StiffnessColumn column, bool maximum,
                                        double rel_tol = 1e-12);

/// Bounding extent of the converged parasitic coordinates, m.
struct ParasiticFootprint {
  double x_min = 0.0, x_max = 0.0;
  double y_min = 0.0, y_max = 0.0;

  double x_span() const { return x_max - x_min; }
  double y_span() const { return y_max - y_min; }
};

ParasiticFootprint parasitic_footprint(const std::vector<SurfaceSample>& samples);

/// Nearest-neighbour resampling of one surface onto a regular (x_par, y_par)
/// grid spanning the footprint. Cells whose nearest sample is farther than one
/// cell diagonal are NaN.
struct RegularSurface {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> values;  // row-major, index ix * y.size() + iy
};

RegularSurface regrid_nearest(const std::vector<SurfaceSample>& samples, StiffnessColumn column,
                              int resolution);

/// Commanded independent tilt as a function of time.
struct TiltPath {
  std::string name;
  double duration = 0.0;
  std::function<Eigen::Vector2d(double)> angles;
  std::function<Eigen::Vector2d(double)> rates;

  static TiltPath hold(const Eigen::Vector2d& tilt, double duration);
  /// Linear ramp from zero to `target`.
  static TiltPath ramp(const Eigen::Vector2d& target, double duration);
  /// theta(t) = target (1 - cos(2 pi t / T)) / 2: out to `target` and back.
  static TiltPath out_and_back(const Eigen::Vector2d& target, double duration);
  /// Circle of `radius` around zero tilt, starting at (radius, 0).
  static TiltPath circle(double radius, double duration);
};

struct TrajectoryPoint {
  double t = 0.0;
  double theta_x = 0.0;
  double theta_y = 0.0;
  double x = 0.0;
  double y = 0.0;
  double torsion = 0.0;
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  /// max_i |s2_i . (p + R a_home_i)|, m.
  double residual = 0.0;
};

struct TrajectoryResult {
  std::vector<TrajectoryPoint> points;
  std::string method = "rk4-munthe-kaas-so3";
  double step = 0.0;
};

/// Constraint-compatible twist [v; w] at platform state (p, R) when the tilt
/// follows `path` at time t. Parasitic rates come from the coupling map M.
Vector6d constrained_twist(double t, const Eigen::Vector3d& p, const Eigen::Matrix3d& R,
                           const TiltPath& path, const ManipulatorConfig& config);

/// Classical RK4 on (x, y) with Munthe-Kaas stages on the rotation, starting
/// from the closed pose at path.angles(0). Throws IntegrationError when the
/// limb-plane residual exceeds 1e-7 m.
TrajectoryResult integrate_trajectory(const TiltPath& path, double z, double step,
                                      const ManipulatorConfig& config);

}  // namespace prs3

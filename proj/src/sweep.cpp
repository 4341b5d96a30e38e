#include "prs3/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "prs3/errors.hpp"
#include "prs3/jacobian.hpp"
#include "prs3/stiffness.hpp"

namespace prs3 {

OrientationGrid OrientationGrid::uniform(double tilt_limit, int resolution, double z) {
  if (resolution < 3 || resolution % 2 == 0) {
    throw ParameterError("grid resolution must be odd and >= 3, got " + std::to_string(resolution));
  }
  if (!(tilt_limit > 0.0)) throw ParameterError("grid tilt limit must be positive");
  OrientationGrid g;
  g.z = z;
  g.resolution = resolution;
  const int half = resolution / 2;
  g.theta_x.resize(resolution);
  for (int i = 0; i < resolution; ++i) {
    // Symmetric construction keeps the center node at exactly zero.
    g.theta_x[i] = tilt_limit * static_cast<double>(i - half) / static_cast<double>(half);
  }
  g.theta_y = g.theta_x;
  return g;
}

namespace {

enum class SweepKind { parasitic, stiffness };

void evaluate_row(const OrientationGrid& grid, const ManipulatorConfig& config,
                  const SweepOptions& options, SweepKind kind, std::size_t row,
                  std::vector<SurfaceSample>& out) {
  std::optional<ParasiticState> guess;
  const std::size_t n = grid.theta_y.size();
  for (std::size_t j = 0; j < n; ++j) {
    SurfaceSample& s = out[row * n + j];
    s.theta_x = grid.theta_x[row];
    s.theta_y = grid.theta_y[j];
    try {
      ClosureOptions co;
      if (options.warm_start) co.initial_guess = guess;
      const Pose pose = solve_closure(s.theta_x, s.theta_y, grid.z, config, co);
      s.x_par = pose.p.x();
      s.y_par = pose.p.y();
      s.torsion = pose.torsion;
      s.residual = pose.residual;
      guess = pose.parasitic();
      if (kind == SweepKind::stiffness) {
        const CartesianStiffness K = assemble_cartesian_stiffness(pose, config);
        s.K = K.K;
        s.k = diagonal_stiffness(K.K).values();
      }
      s.converged = true;
    } catch (const Error& e) {
      s.converged = false;
      s.error = e.what();
      guess.reset();
    }
  }
}

std::vector<SurfaceSample> run_sweep(const OrientationGrid& grid, const ManipulatorConfig& config,
                                     const SweepOptions& options, SweepKind kind) {
  std::vector<SurfaceSample> out(grid.size());
  const std::size_t rows = grid.theta_x.size();
  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::clamp<unsigned>(threads, 1u, static_cast<unsigned>(rows));

  // Rows are independent units of work; the warm start never crosses a row,
  // so the result does not depend on scheduling.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t row = next++; row < rows; row = next++) {
      evaluate_row(grid, config, options, kind, row, out);
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return out;
}

}  // namespace

std::vector<SurfaceSample> parasitic_map(const OrientationGrid& grid, const ManipulatorConfig& config,
                                         const SweepOptions& options) {
  return run_sweep(grid, config, options, SweepKind::parasitic);
}

std::vector<SurfaceSample> stiffness_surfaces(const OrientationGrid& grid,
                                              const ManipulatorConfig& config,
                                              const SweepOptions& options) {
  return run_sweep(grid, config, options, SweepKind::stiffness);
}

SurfaceExtremum surface_extremum(const std::vector<SurfaceSample>& samples, StiffnessColumn column) {
  SurfaceExtremum e;
  bool first = true;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const SurfaceSample& s = samples[i];
    const double v = s.value(column);
    if (!s.converged || !std::isfinite(v)) continue;
    if (first || v > e.max) {
      e.max = v;
      e.argmax = i;
    }
    if (first || v < e.min) {
      e.min = v;
      e.argmin = i;
    }
    first = false;
  }
  if (first) throw Error("no converged samples with stiffness values");
  return e;
}

std::vector<std::size_t> extremum_nodes(const std::vector<SurfaceSample>& samples,
                                        StiffnessColumn column, bool maximum, double rel_tol) {
  const SurfaceExtremum e = surface_extremum(samples, column);
  const double target = maximum ? e.max : e.min;
  const double tol = rel_tol * std::abs(target);
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const SurfaceSample& s = samples[i];
    if (s.converged && std::abs(s.value(column) - target) <= tol) nodes.push_back(i);
  }
  return nodes;
}

ParasiticFootprint parasitic_footprint(const std::vector<SurfaceSample>& samples) {
  ParasiticFootprint f;
  bool first = true;
  for (const SurfaceSample& s : samples) {
    if (!s.converged) continue;
    if (first) {
      f = {s.x_par, s.x_par, s.y_par, s.y_par};
      first = false;
      continue;
    }
    f.x_min = std::min(f.x_min, s.x_par);
    f.x_max = std::max(f.x_max, s.x_par);
    f.y_min = std::min(f.y_min, s.y_par);
    f.y_max = std::max(f.y_max, s.y_par);
  }
  return f;
}

RegularSurface regrid_nearest(const std::vector<SurfaceSample>& samples, StiffnessColumn column,
                              int resolution) {
  if (resolution < 2) throw ParameterError("regrid resolution must be >= 2");
  const ParasiticFootprint f = parasitic_footprint(samples);
  RegularSurface out;
  auto axis = [resolution](double lo, double hi) {
    std::vector<double> v(resolution);
    for (int i = 0; i < resolution; ++i) v[i] = lo + (hi - lo) * i / (resolution - 1);
    return v;
  };
  out.x = axis(f.x_min, f.x_max);
  out.y = axis(f.y_min, f.y_max);
  const double dx = f.x_span() / (resolution - 1);
  const double dy = f.y_span() / (resolution - 1);
  const double reach2 = dx * dx + dy * dy;

  out.values.assign(out.x.size() * out.y.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t ix = 0; ix < out.x.size(); ++ix) {
    for (std::size_t iy = 0; iy < out.y.size(); ++iy) {
      double best = std::numeric_limits<double>::infinity();
      double value = std::numeric_limits<double>::quiet_NaN();
      for (const SurfaceSample& s : samples) {
        if (!s.converged) continue;
        const double ddx = s.x_par - out.x[ix];
        const double ddy = s.y_par - out.y[iy];
        const double d2 = ddx * ddx + ddy * ddy;
        if (d2 < best) {
          best = d2;
          value = s.value(column);
        }
      }
      if (best <= reach2) out.values[ix * out.y.size() + iy] = value;
    }
  }
  return out;
}

TiltPath TiltPath::hold(const Eigen::Vector2d& tilt, double duration) {
  return {"hold", duration, [tilt](double) { return tilt; },
          [](double) { return Eigen::Vector2d::Zero().eval(); }};
}

TiltPath TiltPath::ramp(const Eigen::Vector2d& target, double duration) {
  return {"ramp", duration, [=](double t) { return (target * (t / duration)).eval(); },
          [=](double) { return (target / duration).eval(); }};
}

TiltPath TiltPath::out_and_back(const Eigen::Vector2d& target, double duration) {
  const double w = 2.0 * kPi / duration;
  return {"out_and_back", duration,
          [=](double t) { return (target * (0.5 * (1.0 - std::cos(w * t)))).eval(); },
          [=](double t) { return (target * (0.5 * w * std::sin(w * t))).eval(); }};
}

TiltPath TiltPath::circle(double radius, double duration) {
  const double w = 2.0 * kPi / duration;
  return {"circle", duration,
          [=](double t) { return Eigen::Vector2d(radius * std::cos(w * t), radius * std::sin(w * t)); },
          [=](double t) {
            return Eigen::Vector2d(-radius * w * std::sin(w * t), radius * w * std::cos(w * t));
          }};
}

Vector6d constrained_twist(double t, const Eigen::Vector3d& /*p*/, const Eigen::Matrix3d& R,
                           const TiltPath& path, const ManipulatorConfig& config) {
  const ChartAngles chart = chart_angles(R);
  const Eigen::Vector2d rate = path.rates(t);
  const Eigen::Matrix3d M = parasitic_coupling(R, config).M;

  // Chart angular velocity: w = dtx e_x + dty R_x e_y + dpsi R_x R_y e_z.
  const Eigen::Matrix3d Rx = rot_x(chart.theta_x);
  const Eigen::Vector3d ey = Rx * Eigen::Vector3d::UnitY();
  const Eigen::Vector3d ez = Rx * rot_y(chart.theta_y) * Eigen::Vector3d::UnitZ();
  const Eigen::Vector3d w_tilt = rate.x() * Eigen::Vector3d::UnitX() + rate.y() * ey;

  // The torsion rate is whatever makes w_z satisfy the parasitic coupling.
  const double denom = ez.z() - M(2, 0) * ez.x() - M(2, 1) * ez.y();
  if (std::abs(denom) < 1e-12) {
    throw SingularityError(SingularityKind::parasitic, "torsion rate undetermined by coupling");
  }
  const double torsion_rate = (M(2, 0) * w_tilt.x() + M(2, 1) * w_tilt.y() - w_tilt.z()) / denom;
  const Eigen::Vector3d w = w_tilt + torsion_rate * ez;

  Vector6d twist;
  twist << M(0, 0) * w.x() + M(0, 1) * w.y(), M(1, 0) * w.x() + M(1, 1) * w.y(), 0.0, w;
  return twist;
}

TrajectoryResult integrate_trajectory(const TiltPath& path, double z, double step,
                                      const ManipulatorConfig& config) {
  if (!(step > 0.0)) throw ParameterError("integration step must be positive");
  if (!(path.duration >= 0.0)) throw ParameterError("path duration must be >= 0");

  const LimbFrames frames = limb_frames(config);
  const Eigen::Vector2d start = path.angles(0.0);
  const Pose initial = solve_closure(start.x(), start.y(), z, config);

  TrajectoryResult result;
  result.step = step;
  auto record = [&](double t, const Eigen::Vector3d& p, const Eigen::Matrix3d& R) {
    const auto r = closure_residuals(p, R, frames);
    TrajectoryPoint pt;
    const ChartAngles chart = chart_angles(R);
    pt.t = t;
    pt.theta_x = chart.theta_x;
    pt.theta_y = chart.theta_y;
    pt.torsion = chart.torsion;
    pt.x = p.x();
    pt.y = p.y();
    pt.R = R;
    pt.residual = std::max({std::abs(r[0]), std::abs(r[1]), std::abs(r[2])});
    result.points.push_back(pt);
    return pt.residual;
  };

  Eigen::Vector3d p = initial.p;
  Eigen::Matrix3d R = initial.R;
  record(0.0, p, R);

  const auto steps = static_cast<long>(std::ceil(path.duration / step - 1e-9));
  double t = 0.0;
  for (long n = 0; n < steps; ++n) {
    const double h = std::min(step, path.duration - t);
    auto f = [&](double ts, const Eigen::Vector3d& u, const Eigen::Vector3d& dp) {
      // Stage state: rotation exp(u) R, translation p + dp.
      const Eigen::Matrix3d Rs = so3_exp(u) * R;
      const Vector6d tw = constrained_twist(ts, p + dp, Rs, path, config);
      return std::pair<Eigen::Vector3d, Eigen::Vector3d>{tw.head<3>(),
                                                          so3_dexp_inv(u, tw.tail<3>())};
    };
    const Eigen::Vector3d zero = Eigen::Vector3d::Zero();
    const auto [v1, k1] = f(t, zero, zero);
    const auto [v2, k2] = f(t + 0.5 * h, 0.5 * h * k1, 0.5 * h * v1);
    const auto [v3, k3] = f(t + 0.5 * h, 0.5 * h * k2, 0.5 * h * v2);
    const auto [v4, k4] = f(t + h, h * k3, h * v3);

    p += (h / 6.0) * (v1 + 2.0 * v2 + 2.0 * v3 + v4);
    R = so3_exp((h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)) * R;
    t = (n + 1 == steps) ? path.duration : t + h;

    const double residual = record(t, p, R);
    if (residual > 1e-7) {
      std::ostringstream msg;
      msg << "integration left the constraint manifold at t = " << t << " s (residual "
          << residual << " m)";
      throw IntegrationError(msg.str(), t, residual);
    }
  }
  return result;
}

}  // namespace prs3

#include "prs3/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "prs3/config.hpp"
#include "prs3/errors.hpp"
#include "prs3/stiffness.hpp"
#include "prs3/sweep.hpp"

#ifndef PRS3_VERSION
#define PRS3_VERSION "0.0.0"
#endif

namespace prs3::cli {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

constexpr const char* kConfigEnv = "PRS3_CONFIG";
constexpr const char* kChart = "R = Rx(theta_x) * Ry(theta_y) * Rz(torsion)";

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = ".";
  std::string format = "csv";
  unsigned threads = 0;
  std::optional<double> z;
};

struct GridOptions {
  int grid = 41;
};

struct StiffnessOptions {
  std::string space = "both";
  int regrid = 0;
  std::vector<double> reference;
};

struct TrajectoryOptions {
  std::string shape = "ramp";
  double amplitude_deg = 30.0;
  double direction_deg = 0.0;
  double duration = 1.0;
  double step = 1e-3;
  int every = 1;
};

/// Fixed-point text with negative zero folded to zero.
std::string fixed(double v, int decimals) {
  if (!std::isfinite(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s(buf);
  if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string sci(double v, int decimals) {
  if (!std::isfinite(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", decimals, v);
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Write to a sibling temp file, then rename over the target.
void atomic_write(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out.flush()) throw Error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

ManipulatorConfig resolve_config(const CommonOptions& opts) {
  std::string path = opts.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnv)) path = env;
  }
  return path.empty() ? load_default_config(opts.overrides)
                      : load_config_file(path, opts.overrides);
}

ordered_json manifest(const std::string& command, const std::vector<std::string>& argv,
                      const ManipulatorConfig& config, ordered_json parameters,
                      const std::vector<fs::path>& outputs) {
  ordered_json m;
  m["tool"] = "prs3";
  m["version"] = PRS3_VERSION;
  m["command"] = command;
  m["argv"] = argv;
  m["timestamp"] = utc_timestamp();
  m["config"] = ordered_json::parse(serialize_config(config));
  m["parameters"] = std::move(parameters);
  m["orientation_chart"] = kChart;
  std::vector<std::string> paths;
  for (const auto& p : outputs) paths.push_back(p.string());
  m["outputs"] = paths;
  return m;
}

/// A table that renders either as CSV text or as a JSON document.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string csv() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
    os << '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
      os << '\n';
    }
    return os.str();
  }

  ordered_json json_rows() const {
    ordered_json out = ordered_json::array();
    for (const auto& row : rows) {
      ordered_json r = ordered_json::array();
      for (const auto& cell : row) {
        if (cell.empty()) {
          r.push_back(nullptr);
        } else {
          r.push_back(std::stod(cell));
        }
      }
      out.push_back(std::move(r));
    }
    return out;
  }
};

/// Writes `<stem>.csv` + `<stem>.meta.json`, or a single `<stem>.json`.
std::vector<fs::path> emit(const CommonOptions& opts, const std::string& stem, const Table& table,
                           const std::string& command, const std::vector<std::string>& argv,
                           const ManipulatorConfig& config, const ordered_json& parameters,
                           const ordered_json& extra) {
  const fs::path dir(opts.out_dir);
  std::vector<fs::path> outputs;
  if (opts.format == "csv") {
    outputs = {dir / (stem + ".csv"), dir / (stem + ".meta.json")};
    ordered_json meta = {{"manifest", manifest(command, argv, config, parameters, outputs)}};
    meta["columns"] = table.columns;
    for (const auto& [k, v] : extra.items()) meta[k] = v;
    atomic_write(outputs[0], table.csv());
    atomic_write(outputs[1], meta.dump(2) + "\n");
  } else {
    outputs = {dir / (stem + ".json")};
    ordered_json doc = {{"manifest", manifest(command, argv, config, parameters, outputs)}};
    doc["columns"] = table.columns;
    for (const auto& [k, v] : extra.items()) doc[k] = v;
    doc["rows"] = table.json_rows();
    atomic_write(outputs[0], doc.dump(2) + "\n");
  }
  return outputs;
}

int report_failures(const std::vector<SurfaceSample>& samples, std::ostream& err) {
  std::size_t failed = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const SurfaceSample& s = samples[i];
    if (s.converged) continue;
    ++failed;
    err << "node " << i << " (theta_x=" << rad2deg(s.theta_x) << " deg, theta_y="
        << rad2deg(s.theta_y) << " deg): " << s.error << '\n';
  }
  if (failed) {
    err << failed << " of " << samples.size() << " nodes failed\n";
    return kComputationFailure;
  }
  return kSuccess;
}

int cmd_parasitic(const CommonOptions& opts, const GridOptions& grid_opts,
                  const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  const ManipulatorConfig config = resolve_config(opts);
  const double z = opts.z.value_or(config.heave);
  const OrientationGrid grid = OrientationGrid::uniform(config.tilt_limit, grid_opts.grid, z);
  const auto samples = parasitic_map(grid, config, {opts.threads, true});

  Table table;
  table.columns = {"theta_x_deg", "theta_y_deg", "x_par_mm", "y_par_mm", "torsion_deg", "converged"};
  for (const SurfaceSample& s : samples) {
    table.rows.push_back({fixed(rad2deg(s.theta_x), 9), fixed(rad2deg(s.theta_y), 9),
                          s.converged ? fixed(s.x_par * 1e3, 9) : "",
                          s.converged ? fixed(s.y_par * 1e3, 9) : "",
                          s.converged ? fixed(rad2deg(s.torsion), 9) : "", s.converged ? "1" : "0"});
  }
  const ordered_json params = {{"grid", grid_opts.grid}, {"z_m", z}, {"tilt_limit_deg", rad2deg(config.tilt_limit)}};
  const ordered_json extra = {
      {"units", {{"theta_x_deg", "deg"}, {"theta_y_deg", "deg"}, {"x_par_mm", "mm"},
                 {"y_par_mm", "mm"}, {"torsion_deg", "deg"}, {"converged", "flag"}}}};
  const auto outputs = emit(opts, "parasitic", table, "parasitic", argv, config, params, extra);
  out << "wrote " << outputs.front().string() << " (" << samples.size() << " nodes)\n";
  return report_failures(samples, err);
}

int cmd_stiffness(const CommonOptions& opts, const GridOptions& grid_opts,
                  const StiffnessOptions& st, const std::vector<std::string>& argv,
                  std::ostream& out, std::ostream& err) {
  const ManipulatorConfig config = resolve_config(opts);
  const double z = opts.z.value_or(config.heave);
  const OrientationGrid grid = OrientationGrid::uniform(config.tilt_limit, grid_opts.grid, z);
  auto samples = stiffness_surfaces(grid, config, {opts.threads, true});

  Eigen::Vector3d reference = Eigen::Vector3d::Zero();
  if (!st.reference.empty()) {
    reference = Eigen::Vector3d(st.reference[0], st.reference[1], st.reference[2]);
    for (SurfaceSample& s : samples) {
      if (!s.converged) continue;
      CartesianStiffness K;
      K.K = s.K;
      s.K = shift_reference(K, reference).K;
      s.k = diagonal_stiffness(s.K).values();
    }
  }

  const bool orientation = st.space != "parasitic";
  const bool parasitic = st.space != "orientation";
  Table table;
  table.columns = {"theta_x_deg", "theta_y_deg", "x_par_mm", "y_par_mm", "kpx", "kpy", "kpz",
                   "kax", "kay", "kaz"};
  for (const SurfaceSample& s : samples) {
    std::vector<std::string> row;
    row.push_back(orientation ? fixed(rad2deg(s.theta_x), 9) : "");
    row.push_back(orientation ? fixed(rad2deg(s.theta_y), 9) : "");
    row.push_back(parasitic && s.converged ? fixed(s.x_par * 1e3, 9) : "");
    row.push_back(parasitic && s.converged ? fixed(s.y_par * 1e3, 9) : "");
    for (double k : s.k) row.push_back(s.converged ? sci(k, 9) : "");
    table.rows.push_back(std::move(row));
  }

  ordered_json summary = ordered_json::object();
  out << "column  argmax(theta_x, theta_y) deg          max            argmin(theta_x, theta_y) deg          min\n";
  for (std::size_t c = 0; c < 6; ++c) {
    const auto col = static_cast<StiffnessColumn>(c);
    const SurfaceExtremum e = surface_extremum(samples, col);
    const SurfaceSample& hi = samples[e.argmax];
    const SurfaceSample& lo = samples[e.argmin];
    auto node = [](const SurfaceSample& s, std::size_t idx) {
      return ordered_json{{"index", idx}, {"theta_x_deg", rad2deg(s.theta_x)},
                          {"theta_y_deg", rad2deg(s.theta_y)}, {"x_par_mm", s.x_par * 1e3},
                          {"y_par_mm", s.y_par * 1e3}};
    };
    summary[kStiffnessColumnNames[c]] = {{"max", e.max}, {"argmax", node(hi, e.argmax)},
                                         {"min", e.min}, {"argmin", node(lo, e.argmin)}};
    char line[256];
    std::snprintf(line, sizeof line, "%-6s  (%8.3f, %8.3f)  %16.9e    (%8.3f, %8.3f)  %16.9e\n",
                  kStiffnessColumnNames[c], rad2deg(hi.theta_x), rad2deg(hi.theta_y), e.max,
                  rad2deg(lo.theta_x), rad2deg(lo.theta_y), e.min);
    out << line;
  }

  const std::string rot_unit = config.characteristic_length > 0.0 ? "N/m (scaled)" : "N*m/rad";
  const ordered_json params = {{"grid", grid_opts.grid},
                               {"z_m", z},
                               {"space", st.space},
                               {"tilt_limit_deg", rad2deg(config.tilt_limit)},
                               {"reference_offset_m", {reference.x(), reference.y(), reference.z()}}};
  ordered_json extra = {
      {"units",
       {{"theta_x_deg", "deg"}, {"theta_y_deg", "deg"}, {"x_par_mm", "mm"}, {"y_par_mm", "mm"},
        {"kpx", "N/m"}, {"kpy", "N/m"}, {"kpz", "N/m"}, {"kax", rot_unit}, {"kay", rot_unit},
        {"kaz", rot_unit}}},
      {"stiffness_entries", "diagonal of K = G diag(k_a, k_c) G^T, twist order [v; w]"},
      {"reference_point", reference.isZero() ? "platform center O'" : "platform center O' + reference_offset_m"},
      {"summary", summary}};
  const auto outputs = emit(opts, "stiffness", table, "stiffness", argv, config, params, extra);
  out << "wrote " << outputs.front().string() << " (" << samples.size() << " nodes)\n";

  if (st.regrid > 0 && parasitic) {
    Table grid_table;
    grid_table.columns = {"x_par_mm", "y_par_mm", "kpx", "kpy", "kpz", "kax", "kay", "kaz"};
    std::array<RegularSurface, 6> surfaces;
    for (std::size_t c = 0; c < 6; ++c) {
      surfaces[c] = regrid_nearest(samples, static_cast<StiffnessColumn>(c), st.regrid);
    }
    const RegularSurface& ref = surfaces[0];
    for (std::size_t ix = 0; ix < ref.x.size(); ++ix) {
      for (std::size_t iy = 0; iy < ref.y.size(); ++iy) {
        std::vector<std::string> row = {fixed(ref.x[ix] * 1e3, 9), fixed(ref.y[iy] * 1e3, 9)};
        for (const auto& s : surfaces) row.push_back(sci(s.values[ix * ref.y.size() + iy], 9));
        grid_table.rows.push_back(std::move(row));
      }
    }
    ordered_json grid_params = params;
    grid_params["regrid"] = st.regrid;
    emit(opts, "stiffness_parasitic_grid", grid_table, "stiffness", argv, config, grid_params,
         {{"note", "nearest-neighbour resampling; cells outside the footprint are empty"}});
  }
  return report_failures(samples, err);
}

int cmd_trajectory(const CommonOptions& opts, const TrajectoryOptions& tr,
                   const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  const ManipulatorConfig config = resolve_config(opts);
  const double z = opts.z.value_or(config.heave);
  const double amp = deg2rad(tr.amplitude_deg);
  const double dir = deg2rad(tr.direction_deg);
  const Eigen::Vector2d target(amp * std::cos(dir), amp * std::sin(dir));

  TiltPath path;
  if (tr.shape == "ramp") {
    path = TiltPath::ramp(target, tr.duration);
  } else if (tr.shape == "out-and-back") {
    path = TiltPath::out_and_back(target, tr.duration);
  } else if (tr.shape == "circle") {
    path = TiltPath::circle(amp, tr.duration);
  } else {
    path = TiltPath::hold(target, tr.duration);
  }

  TrajectoryResult result;
  try {
    result = integrate_trajectory(path, z, tr.step, config);
  } catch (const IntegrationError& e) {
    err << "integration failed at t = " << e.time() << " s: " << e.what() << '\n';
    return kComputationFailure;
  }

  Table table;
  table.columns = {"t", "theta_x_deg", "theta_y_deg", "x_par_mm", "y_par_mm", "torsion_deg", "residual_m"};
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    if (i % static_cast<std::size_t>(tr.every) != 0 && i + 1 != result.points.size()) continue;
    const TrajectoryPoint& p = result.points[i];
    table.rows.push_back({fixed(p.t, 9), fixed(rad2deg(p.theta_x), 9), fixed(rad2deg(p.theta_y), 9),
                          fixed(p.x * 1e3, 9), fixed(p.y * 1e3, 9), fixed(rad2deg(p.torsion), 9),
                          sci(p.residual, 3)});
  }
  const ordered_json params = {{"shape", tr.shape},       {"amplitude_deg", tr.amplitude_deg},
                               {"direction_deg", tr.direction_deg}, {"duration_s", tr.duration},
                               {"step_s", tr.step},       {"every", tr.every},
                               {"z_m", z}};
  const ordered_json extra = {
      {"integrator", {{"method", result.method}, {"step_s", result.step}}},
      {"units", {{"t", "s"}, {"theta_x_deg", "deg"}, {"theta_y_deg", "deg"}, {"x_par_mm", "mm"},
                 {"y_par_mm", "mm"}, {"torsion_deg", "deg"}, {"residual_m", "m"}}}};
  const auto outputs = emit(opts, "trajectory", table, "trajectory", argv, config, params, extra);
  out << "wrote " << outputs.front().string() << " (" << table.rows.size() << " rows)\n";
  return kSuccess;
}

void add_common(CLI::App& app, CommonOptions& o) {
  app.add_option("--config", o.config_path, "JSON config file (default: $PRS3_CONFIG, else built-in)");
  app.add_option("--set", o.overrides, "Override a config key, e.g. --set axial.k_carriage=4e7")
      ->take_all();
  app.add_option("--z", o.z, "Heave of the platform center, m (default: config heave)");
  app.add_option("--out", o.out_dir, "Output directory");
  app.add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--threads", o.threads, "Worker threads for sweeps (0 = all cores)");
}

void add_grid(CLI::App& app, GridOptions& g) {
  app.add_option("--grid", g.grid, "Samples per tilt axis (odd, >= 3)")
      ->check(CLI::Validator(
          [](const std::string& s) -> std::string {
            try {
              std::size_t pos = 0;
              const int v = std::stoi(s, &pos);
              if (pos == s.size() && v >= 3 && v % 2 == 1) return {};
            } catch (const std::exception&) {
            }
            return "grid must be an odd integer >= 3";
          },
          "ODD>=3"));
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kinematics and stiffness maps of a 3-PRS parallel head", "prs3"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PRS3_VERSION);

  CommonOptions common;
  GridOptions grid;
  StiffnessOptions st;
  TrajectoryOptions tr;

  auto* par = app.add_subcommand("parasitic", "Parasitic motion map over the tilt grid");
  add_common(*par, common);
  add_grid(*par, grid);

  auto* stiff = app.add_subcommand("stiffness", "Diagonal Cartesian stiffness surfaces");
  add_common(*stiff, common);
  add_grid(*stiff, grid);
  stiff->add_option("--space", st.space, "Coordinates to emit")
      ->check(CLI::IsMember({"orientation", "parasitic", "both"}));
  stiff->add_option("--regrid", st.regrid, "Also resample parasitic space onto an N x N grid")
      ->check(CLI::Range(2, 10001));
  stiff->add_option("--reference", st.reference, "Reference point offset dx dy dz, m")
      ->expected(3);

  auto* traj = app.add_subcommand("trajectory", "Integrate the parasitic motion along a tilt path");
  add_common(*traj, common);
  traj->add_option("--shape", tr.shape, "Tilt path shape")
      ->check(CLI::IsMember({"ramp", "out-and-back", "circle", "hold"}));
  traj->add_option("--amplitude-deg", tr.amplitude_deg, "Tilt amplitude, deg");
  traj->add_option("--direction-deg", tr.direction_deg, "Tilt direction in the (theta_x, theta_y) plane, deg");
  traj->add_option("--duration", tr.duration, "Path duration, s")->check(CLI::PositiveNumber);
  traj->add_option("--step", tr.step, "RK4 step, s")->check(CLI::PositiveNumber);
  traj->add_option("--every", tr.every, "Write every n-th step")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsageError;
  }

  std::vector<std::string> args(argv, argv + argc);
  try {
    if (*par) return cmd_parasitic(common, grid, args, out, err);
    if (*stiff) return cmd_stiffness(common, grid, st, args, out, err);
    return cmd_trajectory(common, tr, args, out, err);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kUsageError;
  } catch (const GeometryError& e) {
    err << "geometry error: " << e.what() << '\n';
    return kUsageError;
  } catch (const ParameterError& e) {
    err << "parameter error: " << e.what() << '\n';
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kComputationFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kComputationFailure;
  }
}

}  // namespace prs3::cli

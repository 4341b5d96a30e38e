#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "prs3/cli.hpp"
#include "prs3/kinematics.hpp"
#include "prs3/stiffness.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "prs3");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = prs3::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

struct ScratchDir {
  fs::path path;
  explicit ScratchDir(const std::string& name) : path(fs::temp_directory_path() / ("prs3_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("parasitic command writes the full grid") {
  ScratchDir dir("parasitic");
  const Run r = run_cli({"parasitic", "--grid", "41", "--out", dir.path.string(), "--threads", "2"});
  REQUIRE(r.code == 0);
  const auto rows = read_csv(dir.path / "parasitic.csv");
  REQUIRE(rows.size() == 1682);
  CHECK(rows[0] == std::vector<std::string>{"theta_x_deg", "theta_y_deg", "x_par_mm", "y_par_mm",
                                            "torsion_deg", "converged"});
  CHECK(rows[1][0] == "-40.000000000");
  CHECK(rows[1][1] == "-40.000000000");
  CHECK(rows[1681][0] == "40.000000000");
  CHECK(rows[1681][1] == "40.000000000");
  const auto& center = rows[1 + 840];
  CHECK(center == std::vector<std::string>{"0.000000000", "0.000000000", "0.000000000",
                                           "0.000000000", "0.000000000", "1"});

  // Spot check a node against the solver.
  const auto& node = rows[1 + 3 * 41 + 17];
  const double tx = std::stod(node[0]), ty = std::stod(node[1]);
  const prs3::Pose pose = prs3::solve_closure(oracle::deg(tx), oracle::deg(ty), 0.39,
                                              prs3::ManipulatorConfig::defaults());
  CHECK(std::stod(node[2]) == doctest::Approx(pose.p.x() * 1e3).epsilon(1e-9));
  CHECK(std::stod(node[3]) == doctest::Approx(pose.p.y() * 1e3).epsilon(1e-9));

  const auto meta = nlohmann::json::parse(slurp(dir.path / "parasitic.meta.json"));
  CHECK(meta["manifest"]["tool"] == "prs3");
  CHECK(meta["manifest"]["command"] == "parasitic");
  CHECK(meta["manifest"]["parameters"]["grid"] == 41);
  CHECK(meta["manifest"]["config"]["r_base"] == 0.326923);
  CHECK(meta["units"]["x_par_mm"] == "mm");
  CHECK_FALSE(fs::exists(dir.path / "parasitic.csv.tmp"));
}

TEST_CASE("reruns are byte-identical") {
  ScratchDir a("rerun_a"), b("rerun_b");
  REQUIRE(run_cli({"stiffness", "--grid", "9", "--out", a.path.string(), "--threads", "1"}).code == 0);
  REQUIRE(run_cli({"stiffness", "--grid", "9", "--out", b.path.string(), "--threads", "3"}).code == 0);
  CHECK(slurp(a.path / "stiffness.csv") == slurp(b.path / "stiffness.csv"));
}

TEST_CASE("stiffness command") {
  ScratchDir dir("stiffness");
  const Run r = run_cli({"stiffness", "--grid", "3", "--out", dir.path.string(), "--regrid", "5"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("kpx") != std::string::npos);
  const auto rows = read_csv(dir.path / "stiffness.csv");
  REQUIRE(rows.size() == 10);
  CHECK(rows[0].size() == 10);
  const auto& center = rows[5];
  CHECK(center[0] == "0.000000000");
  CHECK(std::stod(center[4]) == doctest::Approx(std::stod(center[5])).epsilon(1e-9));
  const auto grid_rows = read_csv(dir.path / "stiffness_parasitic_grid.csv");
  CHECK(grid_rows.size() == 26);
  const auto meta = nlohmann::json::parse(slurp(dir.path / "stiffness.meta.json"));
  CHECK(meta["summary"].contains("kaz"));
  CHECK(meta["units"]["kax"] == "N*m/rad");

  SUBCASE("parasitic space only") {
    ScratchDir d2("stiffness_par");
    REQUIRE(run_cli({"stiffness", "--grid", "3", "--space", "parasitic", "--out", d2.path.string()}).code == 0);
    const auto prow = read_csv(d2.path / "stiffness.csv");
    CHECK(prow[1][0].empty());
    CHECK_FALSE(prow[1][2].empty());
  }
  SUBCASE("shifted reference") {
    ScratchDir d3("stiffness_ref");
    REQUIRE(run_cli({"stiffness", "--grid", "3", "--reference", "0", "0", "0.1", "--out",
                     d3.path.string()})
                .code == 0);
    const auto srow = read_csv(d3.path / "stiffness.csv");
    // Translational diagonal is unchanged; the rotational one follows Ad^T K Ad.
    CHECK(srow[5][4] == center[4]);
    const prs3::ManipulatorConfig cfg = prs3::ManipulatorConfig::defaults();
    const prs3::Matrix6d K =
        prs3::assemble_cartesian_stiffness(prs3::solve_closure(0, 0, 0.39, cfg), cfg).K;
    prs3::Matrix6d Ad = prs3::Matrix6d::Identity();
    Ad(0, 4) = -0.1;
    Ad(1, 3) = 0.1;
    const prs3::Matrix6d S = Ad.transpose() * K * Ad;
    CHECK(std::stod(srow[5][7]) == doctest::Approx(S(3, 3)).epsilon(1e-9));
    CHECK(std::stod(srow[5][8]) == doctest::Approx(S(4, 4)).epsilon(1e-9));
  }
}

TEST_CASE("json output") {
  ScratchDir dir("json");
  REQUIRE(run_cli({"parasitic", "--grid", "3", "--format", "json", "--out", dir.path.string()}).code == 0);
  CHECK_FALSE(fs::exists(dir.path / "parasitic.csv"));
  const auto doc = nlohmann::json::parse(slurp(dir.path / "parasitic.json"));
  CHECK(doc["rows"].size() == 9);
  CHECK(doc["columns"][2] == "x_par_mm");
  CHECK(doc["rows"][4][2] == 0.0);
}

TEST_CASE("trajectory command") {
  ScratchDir dir("trajectory");
  const Run r = run_cli({"trajectory", "--shape", "ramp", "--amplitude-deg", "30", "--every", "100",
                         "--out", dir.path.string()});
  REQUIRE(r.code == 0);
  const auto rows = read_csv(dir.path / "trajectory.csv");
  REQUIRE(rows.size() == 12);
  const auto& last = rows.back();
  CHECK(last[0] == "1.000000000");
  const prs3::Pose pose =
      prs3::solve_closure(oracle::deg(30), 0.0, 0.39, prs3::ManipulatorConfig::defaults());
  CHECK(std::abs(std::stod(last[3]) - pose.p.x() * 1e3) < 1e-3);
  CHECK(std::stod(last[6]) < 1e-9);
  const auto meta = nlohmann::json::parse(slurp(dir.path / "trajectory.meta.json"));
  CHECK(meta["integrator"]["method"] == "rk4-munthe-kaas-so3");
}

TEST_CASE("configuration sources") {
  ScratchDir dir("config");
  const fs::path cfg = dir.path / "machine.json";
  {
    std::ofstream f(cfg);
    f << R"({"tilt_limit_deg": 20})";
  }
  REQUIRE(run_cli({"parasitic", "--grid", "3", "--config", cfg.string(), "--out", dir.path.string()}).code == 0);
  CHECK(read_csv(dir.path / "parasitic.csv")[1][0] == "-20.000000000");
  REQUIRE(run_cli({"parasitic", "--grid", "3", "--config", cfg.string(), "--set", "tilt_limit_deg=10",
                   "--out", dir.path.string()})
              .code == 0);
  CHECK(read_csv(dir.path / "parasitic.csv")[1][0] == "-10.000000000");
}

TEST_CASE("exit codes") {
  ScratchDir dir("exit");
  const std::string out = dir.path.string();
  CHECK(run_cli({"parasitic", "--grid", "4", "--out", out}).code == prs3::cli::kUsageError);
  CHECK(run_cli({"parasitic", "--nonsense"}).code == prs3::cli::kUsageError);
  CHECK(run_cli({}).code == prs3::cli::kUsageError);
  CHECK(run_cli({"--help"}).code == prs3::cli::kSuccess);
  CHECK(run_cli({"--version"}).code == prs3::cli::kSuccess);

  const Run bad_key = run_cli({"parasitic", "--grid", "3", "--set", "axial.k_carriage=-1", "--out", out});
  CHECK(bad_key.code == prs3::cli::kUsageError);
  CHECK(bad_key.err.find("axial.k_carriage") != std::string::npos);

  CHECK(run_cli({"parasitic", "--grid", "3", "--config", (dir.path / "missing.json").string(), "--out", out})
            .code == prs3::cli::kUsageError);

  // Unreachable nodes: written, reported, exit 1.
  const Run partial = run_cli({"parasitic", "--grid", "9", "--set", "link_length=0.1", "--out", out});
  CHECK(partial.code == prs3::cli::kComputationFailure);
  CHECK(partial.err.find("nodes failed") != std::string::npos);
  const auto rows = read_csv(dir.path / "parasitic.csv");
  CHECK(rows.size() == 82);
  CHECK(rows[1][5] == "0");
}

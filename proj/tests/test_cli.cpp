#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "doctest.h"
#include "experiment.hpp"
#include "json.hpp"

using namespace asymcoul;
using namespace asymcoul::cli;
namespace fs = std::filesystem;

namespace {

fs::path tmp_root() {
  const char* t = std::getenv("ASYMCOUL_TMP");
  fs::path p = t ? fs::path(t) : fs::temp_directory_path() / "asymcoul_cli_test";
  fs::create_directories(p);
  return p;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = tmp_root() / name;
  fs::remove_all(p);
  return p;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = tmp_root() / name;
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

using Table = std::vector<std::map<std::string, std::string>>;

Table read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::string> header;
  Table rows;
  const auto split = [](const std::string& l) {
    std::vector<std::string> out;
    std::stringstream ss(l);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!l.empty() && l.back() == ',') out.emplace_back();
    return out;
  };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header.empty()) {
      header = split(line);
      continue;
    }
    const auto cells = split(line);
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) row[header[i]] = cells[i];
    rows.push_back(row);
  }
  return rows;
}

int run_binary(const std::string& args) {
  const char* bin = std::getenv("ASYMCOUL_CLI");
  REQUIRE_MESSAGE(bin != nullptr, "ASYMCOUL_CLI is not set");
  const std::string cmd = std::string(bin) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmallScan = R"({
  "scenario": "residual-scan",
  "system": {"n": 3, "a0": 1.0},
  "scan": {"rays": 1, "points": 6, "envelope_samples": 2},
  "seed": 5
})";

}  // namespace

TEST_CASE("configuration parsing") {
  SUBCASE("indices are 1-based and chi defaults follow cluster size") {
    const auto cfg = parse_config(R"({"scenario": "residual-scan", "system": {"n": 5, "a0": 2.0},
                                      "clusters": [[1, 2], [3, 4, 5]]})");
    REQUIRE(cfg.clusters.size() == 2);
    CHECK(cfg.clusters[0] == std::vector<int>{0, 1});
    CHECK(cfg.clusters[1] == std::vector<int>{2, 3, 4});
    REQUIRE(cfg.chi.size() == 2);
    CHECK(cfg.chi[0].realization == "two_body_coulomb");
    CHECK(cfg.chi[1].realization == "bbk_product");
    CHECK(cfg.chi[1].a0 == 2.0);
    CHECK(cfg.n == 5);
  }
  SUBCASE("chi as a name") {
    const auto cfg = parse_config(
        R"({"scenario": "residual-scan", "system": {"n": 3}, "clusters": [[1, 3]], "chi": ["free"]})");
    CHECK(cfg.chi[0].realization == "free");
  }
  SUBCASE("explicit momenta") {
    const auto cfg = parse_config(
        R"({"scenario": "residual-scan", "system": {"n": 3}, "momenta": [[0.1, 0.2, 0.3], [1, 0, 0]]})");
    REQUIRE(cfg.momenta.has_value());
    CHECK(cfg.momenta->size() == 6);
  }
  SUBCASE("malformed input is a ConfigError") {
    for (const char* text : {
             "{",
             R"({"system": {"n": 3}})",
             R"({"scenario": "residual-scan", "bogus": 1})",
             R"({"scenario": "residual-scan", "system": {"n": 3, "mass": 2}})",
             R"({"scenario": "residual-scan", "system": {"n": 3}, "clusters": [[1, 4]]})",
             R"({"scenario": "residual-scan", "system": {"n": 4}, "clusters": [[1, 2], [2, 3]]})",
             R"({"scenario": "residual-scan", "scan": {"rays": 0}})",
             R"({"scenario": "residual-scan", "scan": {"delta_cone": 1.5}})",
             R"({"scenario": "residual-scan", "system": {"n": 3}, "clusters": [[1, 2]], "chi": ["hydrogen"]})",
             R"({"scenario": "residual-scan", "system": {"n": 1}})",
         }) {
      INFO(text);
      CHECK_THROWS_AS(parse_config(text), ConfigError);
    }
  }
  SUBCASE("shipped configurations parse") {
    for (const auto& e : fs::directory_iterator(ASYMCOUL_CONFIG_DIR)) {
      INFO(e.path());
      CHECK_NOTHROW(load_config(e.path()));
    }
  }
}

TEST_CASE("sweep axes") {
  const auto cfg = parse_config(kSmallScan);
  CHECK(with_axis(cfg, "a0", 0.5).a0 == 0.5);
  CHECK(with_axis(cfg, "delta_cone", 0.2).scan.delta_cone == 0.2);
  CHECK(with_axis(cfg, "h", 2e-3).scan.h_floor == 2e-3);
  CHECK(with_axis(cfg, "r_max", 5e3).scan.r_max_factor == 5e3);
  CHECK_THROWS_AS(with_axis(cfg, "temperature", 1.0), ConfigError);
  CHECK_THROWS_AS(with_axis(cfg, "delta_cone", 1.0), ConfigError);
  CHECK(sweep_axes().size() == 5);
}

TEST_CASE("run writes its report and tables") {
  const auto dir = fresh_dir("run_calibration");
  auto cfg = load_config(fs::path(ASYMCOUL_CONFIG_DIR) / "calibrate_n2.json");
  cfg.samples = 3;
  const auto res = run(cfg, {dir, 1, false});
  CHECK(res.passed());
  CHECK(fs::exists(dir / "calibration.csv"));
  CHECK(fs::exists(dir / "summary.txt"));
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(report["schema"] == "asymcoul-report/1");
  CHECK(report["passed"] == true);
  CHECK(report["checks"].size() == res.checks.size());
  const auto rows = read_csv(dir / "calibration.csv");
  CHECK(rows.size() == 12);  // 3 points x 4 steps
  CHECK(slurp(dir / "calibration.csv").rfind("# asymcoul calibration csv v1", 0) == 0);
}

TEST_CASE("inconsistent configurations fail before writing") {
  const auto dir = fresh_dir("run_bad");
  // sigma-check needs a cluster
  auto cfg = parse_config(R"({"scenario": "sigma-check", "system": {"n": 3}})");
  CHECK_THROWS_AS(run(cfg, {dir, 1, false}), ConfigError);
  CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("command line exit codes") {
  const auto good = write_file("small_scan.json", kSmallScan);
  const auto bad = write_file("malformed.json", R"({"scenario": "residual-scan", "scan": {"rays": )");

  const auto none = fresh_dir("cli_malformed");
  CHECK(run_binary("--output-dir " + none.string() + " run " + bad.string()) == 2);
  CHECK_FALSE(fs::exists(none));

  CHECK(run_binary("run " + (tmp_root() / "missing.json").string()) == 2);
  CHECK(run_binary("--threads 0 run " + good.string()) == 2);
  CHECK(run_binary("") == 2);
  const auto sweep_dir = fresh_dir("cli_bad_axis");
  CHECK(run_binary("--output-dir " + sweep_dir.string() + " sweep " + good.string() +
                   " --axis mass --values 1") == 2);
  CHECK_FALSE(fs::exists(sweep_dir));

  const auto a = fresh_dir("cli_a"), b = fresh_dir("cli_b");
  CHECK(run_binary("--output-dir " + a.string() + " run " + good.string()) == 0);
  CHECK(run_binary("--threads 3 --output-dir " + b.string() + " run " + good.string()) == 0);
  SUBCASE("artifacts are deterministic") {
    for (const char* f : {"rows.csv", "rays.csv"}) {
      INFO(f);
      CHECK(slurp(a / f) == slurp(b / f));
      CHECK_FALSE(slurp(a / f).empty());
    }
  }
  SUBCASE("a bare config path runs the scenario") {
    const auto c = fresh_dir("cli_bare");
    CHECK(run_binary("--output-dir " + c.string() + " " + good.string()) == 0);
    CHECK(slurp(c / "rays.csv") == slurp(a / "rays.csv"));
  }
  SUBCASE("reported slopes are recomputable from the per-point rows") {
    // envelope per grid index, then an ordinary least-squares fit in log-log
    const auto rows = read_csv(a / "rows.csv");
    const auto rays = read_csv(a / "rays.csv");
    REQUIRE(rays.size() == 1);
    std::map<int, std::pair<double, double>> env;  // index -> (R at sample 0, max)
    for (const auto& r : rows) {
      const int i = std::stoi(r.at("index"));
      auto& e = env[i];
      if (r.at("sample") == "0") e.first = std::stod(r.at("R"));
      if (r.at("excluded") == "0") e.second = std::max(e.second, std::stod(r.at("abs_S_over_psi")));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
    for (const auto& [i, e] : env) {
      if (e.second <= 0.0) continue;
      const double x = std::log(e.first), y = std::log(e.second);
      sx += x, sy += y, sxx += x * x, sxy += x * y, m += 1;
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    CHECK(slope == doctest::Approx(std::stod(rays[0].at("slope"))).epsilon(1e-9));
  }
  SUBCASE("a check failure exits with 1") {
    const auto strict = write_file(
        "strict_scan.json",
        R"({"scenario": "residual-scan", "system": {"n": 3},
            "scan": {"rays": 1, "points": 6, "envelope_samples": 2, "slope_limit": -5.0}, "seed": 5})");
    const auto c = fresh_dir("cli_strict");
    CHECK(run_binary("--output-dir " + c.string() + " run " + strict.string()) == 1);
    const auto report = nlohmann::json::parse(slurp(c / "report.json"));
    CHECK(report["passed"] == false);
  }
}

TEST_CASE("delta_cone sweep excludes more points as the cone widens") {
  const auto dir = fresh_dir("sweep_cone");
  const auto cfg = parse_config(R"({
    "scenario": "residual-scan",
    "system": {"n": 3},
    "clusters": [[1, 2]],
    "scan": {"rays": 2, "points": 6, "envelope_samples": 2},
    "seed": 15
  })");
  const std::vector<double> values{0.01, 0.05, 0.3, 0.6};
  const auto res = sweep(cfg, "delta_cone", values, {dir, 2, false});
  CHECK(res.checks.size() == 2 * values.size());
  const auto rows = read_csv(dir / "sweep.csv");
  REQUIRE(rows.size() == 2 * values.size());
  std::map<std::string, std::vector<int>> per_ray;
  for (const auto& r : rows) per_ray[r.at("ray")].push_back(std::stoi(r.at("excluded_points")));
  for (const auto& [ray, counts] : per_ray) {
    INFO("ray " << ray);
    for (std::size_t i = 1; i < counts.size(); ++i) CHECK(counts[i] >= counts[i - 1]);
  }
  CHECK(fs::exists(dir / "sweep.gp"));
  CHECK(fs::exists(dir / "sweep_rows.csv"));
}

TEST_CASE("a0 sweep on the fully separated problem") {
  const auto dir = fresh_dir("sweep_a0");
  const auto cfg = parse_config(kSmallScan);
  const auto res = sweep(cfg, "a0", {0.5, 1.0, 2.0}, {dir, 2, false});
  CHECK(res.checks.size() == 6);
  CHECK(res.passed());
  const auto rows = read_csv(dir / "sweep.csv");
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) CHECK(std::stod(r.at("slope")) <= -1.7);
}

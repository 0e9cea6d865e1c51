#include "experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

namespace asymcoul::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kCsvVersion = "1";

const std::vector<std::string>& scenarios() {
  static const std::vector<std::string> s{"validate-kinematics", "calibrate-n2", "sigma-check",
                                          "residual-scan", "estimates-check"};
  return s;
}

std::string criterion_of(const std::string& scenario) {
  if (scenario == "validate-kinematics") return "kinematics identities";
  if (scenario == "calibrate-n2") return "two-body calibration";
  if (scenario == "sigma-check") return "sigma identity and S_alpha dual route";
  if (scenario == "residual-scan") return "residual decay dominance";
  return "intermediate estimates";
}

// ---- JSON schema helpers

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

void allow_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  require_object(j, where);
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, _] : j.items())
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(where + ": not finite");
  return v;
}

double positive(const json& j, const std::string& where) {
  const double v = number(j, where);
  if (!(v > 0.0)) throw ConfigError(where + ": must be positive");
  return v;
}

int integer(const json& j, const std::string& where, int lo) {
  if (!j.is_number_integer()) throw ConfigError(where + ": expected an integer");
  const auto v = j.get<long long>();
  if (v < lo || v > 1000000000LL)
    throw ConfigError(where + ": must be at least " + std::to_string(lo));
  return static_cast<int>(v);
}

std::vector<double> numbers(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& e = j[i];
    if (e.is_array()) {
      for (std::size_t c = 0; c < e.size(); ++c)
        out.push_back(number(e[c], where + "[" + std::to_string(i) + "]"));
    } else {
      out.push_back(number(e, where + "[" + std::to_string(i) + "]"));
    }
  }
  return out;
}

std::vector<int> indices(const json& j, const std::string& where, int n) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of particle indices");
  std::vector<int> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const int v = integer(j[i], where, 1);
    if (v > n) throw ConfigError(where + ": particle " + std::to_string(v) + " exceeds n");
    out.push_back(v - 1);
  }
  return out;
}

template <class F>
void optional_field(const json& j, const char* key, F&& f) {
  if (j.contains(key)) f(j.at(key), std::string(key));
}

void parse_scan(const json& j, ScanSettings& s) {
  allow_keys(j,
             {"rays", "points", "omega", "r_min_factor", "r_max_factor", "delta_cone",
              "epsilon_node", "envelope_samples", "envelope_window", "h_floor", "h_relative",
              "resolution", "cluster_step", "slope_limit", "potential_tolerance",
              "estimate_slope_limit", "direction", "Y"},
             "scan");
  optional_field(j, "rays", [&](const json& v, auto k) { s.rays = integer(v, "scan." + k, 1); });
  optional_field(j, "points", [&](const json& v, auto k) { s.points = integer(v, "scan." + k, 5); });
  optional_field(j, "omega", [&](const json& v, auto k) { s.omega = positive(v, "scan." + k); });
  optional_field(j, "r_min_factor",
                 [&](const json& v, auto k) { s.r_min_factor = positive(v, "scan." + k); });
  optional_field(j, "r_max_factor",
                 [&](const json& v, auto k) { s.r_max_factor = positive(v, "scan." + k); });
  optional_field(j, "delta_cone", [&](const json& v, auto k) {
    s.delta_cone = number(v, "scan." + k);
    if (s.delta_cone < 0.0 || s.delta_cone >= 1.0)
      throw ConfigError("scan.delta_cone: must lie in [0, 1)");
  });
  optional_field(j, "epsilon_node",
                 [&](const json& v, auto k) { s.epsilon_node = positive(v, "scan." + k); });
  optional_field(j, "envelope_samples",
                 [&](const json& v, auto k) { s.envelope_samples = integer(v, "scan." + k, 1); });
  optional_field(j, "envelope_window",
                 [&](const json& v, auto k) { s.envelope_window = positive(v, "scan." + k); });
  optional_field(j, "h_floor", [&](const json& v, auto k) { s.h_floor = positive(v, "scan." + k); });
  optional_field(j, "h_relative",
                 [&](const json& v, auto k) { s.h_relative = positive(v, "scan." + k); });
  optional_field(j, "resolution",
                 [&](const json& v, auto k) { s.resolution = positive(v, "scan." + k); });
  optional_field(j, "cluster_step",
                 [&](const json& v, auto k) { s.cluster_step = positive(v, "scan." + k); });
  optional_field(j, "slope_limit",
                 [&](const json& v, auto k) { s.slope_limit = number(v, "scan." + k); });
  optional_field(j, "potential_tolerance",
                 [&](const json& v, auto k) { s.potential_tolerance = positive(v, "scan." + k); });
  optional_field(j, "estimate_slope_limit",
                 [&](const json& v, auto k) { s.estimate_slope_limit = number(v, "scan." + k); });
  optional_field(j, "direction",
                 [&](const json& v, auto k) { s.direction = numbers(v, "scan." + k); });
  optional_field(j, "Y", [&](const json& v, auto k) { s.Y = numbers(v, "scan." + k); });
  if (s.r_max_factor <= s.r_min_factor)
    throw ConfigError("scan: r_max_factor must exceed r_min_factor");
}

// ---- problem assembly

struct Prepared {
  std::unique_ptr<ScatteringProblem> problem;
  RayPlan plan;
};

ClusterDecomposition decomposition_of(const ExperimentConfig& cfg) {
  return cfg.clusters.empty() ? ClusterDecomposition::all_singletons(cfg.n)
                              : ClusterDecomposition(cfg.n, cfg.clusters);
}

RayPlan plan_of(const ExperimentConfig& cfg, int threads) {
  const auto& s = cfg.scan;
  RayPlan plan;
  plan.omega = s.omega;
  plan.points = s.points;
  plan.r_lo_factor = s.r_min_factor;
  plan.r_hi_factor = s.r_max_factor;
  plan.epsilon_node = s.epsilon_node;
  plan.envelope_samples = s.envelope_samples;
  plan.envelope_window = s.envelope_window;
  plan.options.ansatz.delta_cone = s.delta_cone;
  plan.options.steps.floor = s.h_floor;
  plan.options.steps.relative = s.h_relative;
  plan.options.steps.resolution = s.resolution;
  plan.options.steps.cluster_step = s.cluster_step;
  plan.threads = std::max(1, threads);
  return plan;
}

// Momenta are drawn first from the seeded stream, so every scenario sees the
// same Q for the same configuration and seed.
Prepared prepare(const ExperimentConfig& cfg, int threads, Rng& rng) {
  Prepared p;
  p.plan = plan_of(cfg, threads);
  if (cfg.scenario == "validate-kinematics" || cfg.scenario == "calibrate-n2") return p;
  try {
    const ParticleSystem system(cfg.n, cfg.a0);
    const ClusterDecomposition d = decomposition_of(cfg);
    std::vector<ClusterPtr> chi;
    for (std::size_t j = 0; j < cfg.clusters.size(); ++j)
      chi.push_back(make_cluster(cfg.chi[j].realization, d.cluster_size(static_cast<int>(j)),
                                 cfg.chi[j].a0));
    const JacobiBasisSpec spec = cfg.basis ? *cfg.basis : JacobiBasisSpec::natural(d);
    spec.validate(d);
    Stacked Q;
    if (cfg.momenta) {
      if (static_cast<int>(cfg.momenta->size()) != 3 * (cfg.n - 1))
        throw ConfigError("momenta: expected " + std::to_string(cfg.n - 1) + " 3-vectors");
      Q = Eigen::Map<const Stacked>(cfg.momenta->data(), 3 * (cfg.n - 1));
    } else {
      Q = random_momenta(system, d, rng, cfg.momentum_min, cfg.momentum_max);
    }
    p.problem = std::make_unique<ScatteringProblem>(system, d, spec, std::move(chi), Q);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  const auto& basis = p.problem->basis();
  if (cfg.scenario == "sigma-check" && (basis.z_count() != 1 || basis.cluster_count() == 0))
    throw ConfigError("sigma-check needs clusters leaving exactly one inter-cluster coordinate");
  if (cfg.scenario == "estimates-check" && basis.cluster_count() == 0)
    throw ConfigError("estimates-check needs at least one cluster");
  const auto& s = cfg.scan;
  if (s.direction && static_cast<int>(s.direction->size()) != 3 * basis.z_count())
    throw ConfigError("scan.direction: expected " + std::to_string(basis.z_count()) +
                      " 3-vectors");
  if (s.Y && static_cast<int>(s.Y->size()) != 3 * basis.z_begin())
    throw ConfigError("scan.Y: expected " + std::to_string(basis.z_begin()) + " 3-vectors");
  if (s.Y && !s.direction) throw ConfigError("scan.Y requires scan.direction");
  try {
    p.plan.options.steps.z_step(s.r_min_factor, p.problem->Q().norm());
  } catch (const ConfigurationError& e) {
    throw ConfigError(std::string("scan: ") + e.what());
  }
  return p;
}

std::vector<RayScanSpec> make_rays(const ExperimentConfig& cfg, const Prepared& p, Rng& rng) {
  std::vector<RayScanSpec> rays;
  const auto& s = cfg.scan;
  const auto& problem = *p.problem;
  if (s.direction) {
    RayScanSpec spec = random_ray(problem, p.plan, rng);
    spec.direction = Eigen::Map<const Stacked>(s.direction->data(), s.direction->size());
    if (spec.direction.norm() == 0.0) throw ConfigError("scan.direction: zero vector");
    spec.direction.normalize();
    if (s.Y) spec.Y = Eigen::Map<const Stacked>(s.Y->data(), s.Y->size());
    try {
      spec.validate(problem);
    } catch (const ConfigurationError& e) {
      throw ConfigError(std::string("scan: ") + e.what());
    }
    rays.push_back(spec);
    return rays;
  }
  try {
    for (int r = 0; r < s.rays; ++r) rays.push_back(random_ray(problem, p.plan, rng));
  } catch (const ConfigurationError& e) {
    throw ConfigError(std::string("scan: ") + e.what());
  }
  return rays;
}

// ---- output

// Shortest text that reads back to the same double.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

class Csv {
 public:
  Csv(std::string kind, std::vector<std::string> columns)
      : kind_(std::move(kind)), columns_(std::move(columns)) {}
  Csv& row(const std::vector<std::string>& cells) {
    rows_.push_back(cells);
    return *this;
  }
  void write(const fs::path& path) const {
    std::ofstream out(path, std::ios::binary);
    out << "# asymcoul " << kind_ << " csv v" << kCsvVersion << "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i) out << (i ? "," : "") << columns_[i];
    out << "\n";
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
      out << "\n";
    }
    if (!out) throw std::runtime_error("cannot write " + path.string());
  }

 private:
  std::string kind_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

struct Artifacts {
  std::vector<std::pair<std::string, Csv>> tables;
  std::string gnuplot;
};

void append(std::vector<Check>& to, const std::vector<Check>& from) {
  to.insert(to.end(), from.begin(), from.end());
}

void add_scan_rows(Csv& rows, Csv& summary, const std::vector<DecayReport>& reports,
                   const std::string& prefix) {
  for (std::size_t r = 0; r < reports.size(); ++r) {
    const auto& rep = reports[r];
    for (const auto& row : rep.rows) {
      std::vector<std::string> cells;
      if (!prefix.empty()) cells.push_back(prefix);
      cells.insert(cells.end(),
                   {std::to_string(r), std::to_string(row.index), std::to_string(row.sample),
                    num(row.R), num(row.S.real()), num(row.S.imag()), num(row.relative),
                    num(row.potential), row.flags.empty() ? "-" : row.flags,
                    row.excluded ? "1" : "0"});
      rows.row(cells);
    }
    std::vector<std::string> cells;
    if (!prefix.empty()) cells.push_back(prefix);
    cells.insert(cells.end(),
                 {std::to_string(r), num(rep.slope()), num(rep.fit.stderr_),
                  num(rep.potential_slope()), std::to_string(rep.fit.points),
                  std::to_string(rep.excluded.size()), num(rep.r_lo), num(rep.r_hi)});
    summary.row(cells);
  }
}

std::vector<std::string> scan_row_columns(bool with_value) {
  std::vector<std::string> c;
  if (with_value) c.push_back("value");
  for (auto s : {"ray", "index", "sample", "R", "re_S", "im_S", "abs_S_over_psi", "V", "flags",
                 "excluded"})
    c.push_back(s);
  return c;
}

std::vector<std::string> ray_columns(bool with_value) {
  std::vector<std::string> c;
  if (with_value) c.push_back("value");
  for (auto s : {"ray", "slope", "slope_stderr", "potential_slope", "fit_points",
                 "excluded_points", "r_lo", "r_hi"})
    c.push_back(s);
  return c;
}

void log(const RunOptions& opts, const std::string& msg) {
  if (opts.verbose) std::cerr << "[asymcoul] " << msg << "\n";
}

RunResult execute(const ExperimentConfig& cfg, const RunOptions& opts, Artifacts& art) {
  Rng rng(cfg.seed);
  Prepared p = prepare(cfg, opts.threads, rng);
  RunResult res;
  if (cfg.scenario == "validate-kinematics") {
    const int samples = cfg.samples > 0 ? cfg.samples : 1000;
    Csv t("kinematics", {"n", "samples", "pair_residual", "zeta_norm", "orthogonality",
                         "translation"});
    for (int n = cfg.kinematics_n_min; n <= cfg.kinematics_n_max; ++n) {
      log(opts, "kinematics n=" + std::to_string(n));
      const auto rep = validate_kinematics(n, samples, rng);
      t.row({std::to_string(n), std::to_string(samples), num(rep.pair_residual),
             num(rep.zeta_norm), num(rep.orthogonality), num(rep.translation)});
      append(res.checks, rep.checks);
    }
    art.tables.emplace_back("kinematics.csv", t);
  } else if (cfg.scenario == "calibrate-n2") {
    const int samples = cfg.samples > 0 ? cfg.samples : 20;
    const auto rep =
        calibrate_two_body(cfg.a0, samples, cfg.calibration_h0, cfg.calibration_halvings, rng);
    Csv t("calibration", {"point", "step", "residual", "ratio"});
    for (std::size_t i = 0; i < rep.points.size(); ++i) {
      const auto& pt = rep.points[i];
      for (std::size_t s = 0; s < pt.steps.size(); ++s)
        t.row({std::to_string(i), num(pt.steps[s]), num(pt.residuals[s]),
               s == 0 ? "-" : num(pt.ratios[s - 1])});
    }
    art.tables.emplace_back("calibration.csv", t);
    append(res.checks, rep.checks);
  } else if (cfg.scenario == "sigma-check") {
    const int samples = cfg.samples > 0 ? cfg.samples : 50;
    const auto rep = sigma_check(*p.problem, samples, cfg.scan.omega, cfg.sigma_z_min,
                                 cfg.sigma_z_max, cfg.sigma_h, rng);
    Csv t("sigma", {"point", "alpha", "sigma", "sigma_bound", "route_gap", "abs_S_alpha",
                    "S_alpha_scale"});
    for (std::size_t i = 0; i < rep.points.size(); ++i) {
      const auto& pt = rep.points[i];
      t.row({std::to_string(i), std::to_string(pt.alpha), num(pt.sigma), num(pt.sigma_bound),
             num(pt.route_gap), num(pt.s_alpha), num(pt.s_scale)});
    }
    art.tables.emplace_back("sigma.csv", t);
    append(res.checks, rep.checks);
  } else if (cfg.scenario == "residual-scan") {
    auto rays = make_rays(cfg, p, rng);
    log(opts, "scanning " + std::to_string(rays.size()) + " rays");
    const auto rep = residual_scan(*p.problem, std::move(rays), cfg.scan.slope_limit,
                                   cfg.scan.potential_tolerance);
    Csv rows("scan rows", scan_row_columns(false));
    Csv summary("scan rays", ray_columns(false));
    add_scan_rows(rows, summary, rep.reports, "");
    art.tables.emplace_back("rows.csv", rows);
    art.tables.emplace_back("rays.csv", summary);
    append(res.checks, rep.checks);
  } else {
    const auto rays = make_rays(cfg, p, rng);
    Csv t("estimates", {"ray", "alpha", "R", "remainder_distance", "remainder_argument"});
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < rays.size(); ++r) {
      const auto rep =
          intermediate_estimates_check(*p.problem, rays[r].Y, rays[r].direction, rays[r].grid());
      for (const auto& s : rep.samples)
        t.row({std::to_string(r), std::to_string(s.alpha), num(s.R), num(s.remainder_distance),
               num(s.remainder_argument)});
      worst = std::max(worst, rep.worst_slope);
    }
    art.tables.emplace_back("estimates.csv", t);
    const double limit = cfg.scan.estimate_slope_limit;
    res.checks.push_back(
        {"intermediate estimate remainder slope", worst <= limit, worst, limit, ""});
  }
  return res;
}

void write_outputs(const fs::path& dir, const std::string& title, const json& echo,
                   const RunResult& res, const Artifacts& art, double seconds,
                   std::vector<std::string>& written) {
  fs::create_directories(dir);
  for (const auto& [name, table] : art.tables) {
    table.write(dir / name);
    written.push_back(name);
  }
  if (!art.gnuplot.empty()) {
    std::ofstream(dir / "sweep.gp", std::ios::binary) << art.gnuplot;
    written.push_back("sweep.gp");
  }
  json checks = json::array();
  for (const auto& c : res.checks)
    checks.push_back({{"name", c.name},
                      {"passed", c.passed},
                      {"measured", c.measured},
                      {"threshold", c.threshold},
                      {"detail", c.detail}});
  json report{{"schema", "asymcoul-report/1"},
              {"run", echo},
              {"criterion", criterion_of(echo.value("scenario", ""))},
              {"passed", res.passed()},
              {"checks", checks},
              {"artifacts", written},
              {"wall_time_s", seconds}};
  written.push_back("report.json");
  written.push_back("summary.txt");
  report["artifacts"] = written;
  std::ofstream(dir / "report.json", std::ios::binary) << report.dump(2) << "\n";
  std::ofstream sum(dir / "summary.txt", std::ios::binary);
  sum << title << "\n";
  for (const auto& c : res.checks) {
    char line[512];
    std::snprintf(line, sizeof line, "%s  %-44s measured %-12.4g threshold %-10.4g %s\n",
                  c.passed ? "PASS" : "FAIL", c.name.c_str(), c.measured, c.threshold,
                  c.detail.c_str());
    sum << line;
  }
  sum << (res.passed() ? "all checks passed" : "some checks failed") << "\n";
}

json echo_of(const ExperimentConfig& cfg) {
  return {{"scenario", cfg.scenario}, {"n", cfg.n}, {"a0", cfg.a0}, {"seed", cfg.seed}};
}

}  // namespace

bool RunResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("parse error: ") + e.what());
  }
  allow_keys(j,
             {"scenario", "system", "clusters", "basis", "chi", "momenta", "scan", "samples",
              "seed", "output", "kinematics", "calibration", "sigma"},
             "config");
  ExperimentConfig cfg;
  if (!j.contains("scenario") || !j["scenario"].is_string())
    throw ConfigError("config: 'scenario' is required");
  cfg.scenario = j["scenario"].get<std::string>();
  if (std::find(scenarios().begin(), scenarios().end(), cfg.scenario) == scenarios().end())
    throw ConfigError("config: unknown scenario '" + cfg.scenario + "'");

  if (j.contains("system")) {
    const json& s = j["system"];
    allow_keys(s, {"n", "a0"}, "system");
    optional_field(s, "n", [&](const json& v, auto k) { cfg.n = integer(v, "system." + k, 2); });
    optional_field(s, "a0", [&](const json& v, auto k) { cfg.a0 = positive(v, "system." + k); });
  }
  if (cfg.n > 12) throw ConfigError("system.n: at most 12 particles");
  if (cfg.scenario == "calibrate-n2" && cfg.n != 2)
    throw ConfigError("calibrate-n2 needs system.n = 2");

  if (j.contains("clusters")) {
    const json& c = j["clusters"];
    if (!c.is_array()) throw ConfigError("clusters: expected an array of index lists");
    for (std::size_t i = 0; i < c.size(); ++i) {
      auto idx = indices(c[i], "clusters[" + std::to_string(i) + "]", cfg.n);
      if (idx.size() < 2) throw ConfigError("clusters: every cluster needs two particles");
      cfg.clusters.push_back(idx);
    }
    try {
      ClusterDecomposition(cfg.n, cfg.clusters);
    } catch (const Error& e) {
      throw ConfigError(std::string("clusters: ") + e.what());
    }
  }

  if (j.contains("basis")) {
    const json& b = j["basis"];
    allow_keys(b, {"cluster_orders", "unit_order"}, "basis");
    JacobiBasisSpec spec = JacobiBasisSpec::natural(decomposition_of(cfg));
    if (b.contains("cluster_orders")) {
      spec.cluster_orders.clear();
      if (!b["cluster_orders"].is_array()) throw ConfigError("basis.cluster_orders: expected an array");
      for (const auto& o : b["cluster_orders"])
        spec.cluster_orders.push_back(indices(o, "basis.cluster_orders", cfg.n));
    }
    if (b.contains("unit_order")) spec.unit_order = indices(b["unit_order"], "basis.unit_order", cfg.n);
    try {
      spec.validate(decomposition_of(cfg));
    } catch (const Error& e) {
      throw ConfigError(std::string("basis: ") + e.what());
    }
    cfg.basis = spec;
  }

  for (const auto& c : cfg.clusters)
    cfg.chi.push_back({c.size() == 2 ? "two_body_coulomb" : "bbk_product", cfg.a0});
  if (j.contains("chi")) {
    const json& c = j["chi"];
    if (!c.is_array() || c.size() != cfg.clusters.size())
      throw ConfigError("chi: expected one entry per cluster");
    for (std::size_t i = 0; i < c.size(); ++i) {
      const std::string where = "chi[" + std::to_string(i) + "]";
      if (c[i].is_string()) {
        cfg.chi[i].realization = c[i].get<std::string>();
      } else {
        allow_keys(c[i], {"realization", "a0"}, where);
        if (!c[i].contains("realization") || !c[i]["realization"].is_string())
          throw ConfigError(where + ": 'realization' is required");
        cfg.chi[i].realization = c[i]["realization"].get<std::string>();
        optional_field(c[i], "a0",
                       [&](const json& v, auto) { cfg.chi[i].a0 = positive(v, where + ".a0"); });
      }
      const auto& r = cfg.chi[i].realization;
      if (r != "free" && r != "two_body_coulomb" && r != "bbk_product")
        throw ConfigError(where + ": unknown realization '" + r + "'");
      if (r == "two_body_coulomb" && cfg.clusters[i].size() != 2)
        throw ConfigError(where + ": two_body_coulomb needs a two-particle cluster");
    }
  }

  if (j.contains("momenta")) {
    const json& m = j["momenta"];
    if (m.is_array()) {
      cfg.momenta = numbers(m, "momenta");
    } else {
      allow_keys(m, {"min", "max"}, "momenta");
      optional_field(m, "min", [&](const json& v, auto) { cfg.momentum_min = positive(v, "momenta.min"); });
      optional_field(m, "max", [&](const json& v, auto) { cfg.momentum_max = positive(v, "momenta.max"); });
      if (cfg.momentum_max < cfg.momentum_min)
        throw ConfigError("momenta: max below min");
    }
  }
  if (j.contains("scan")) parse_scan(j["scan"], cfg.scan);
  optional_field(j, "samples", [&](const json& v, auto) { cfg.samples = integer(v, "samples", 1); });
  optional_field(j, "seed", [&](const json& v, auto) {
    if (!v.is_number_unsigned()) throw ConfigError("seed: expected a non-negative integer");
    cfg.seed = v.get<std::uint64_t>();
  });
  optional_field(j, "output", [&](const json& v, auto) {
    if (!v.is_string()) throw ConfigError("output: expected a path string");
    cfg.output = v.get<std::string>();
  });
  if (j.contains("kinematics")) {
    const json& k = j["kinematics"];
    allow_keys(k, {"n_min", "n_max"}, "kinematics");
    optional_field(k, "n_min", [&](const json& v, auto) { cfg.kinematics_n_min = integer(v, "kinematics.n_min", 2); });
    optional_field(k, "n_max", [&](const json& v, auto) { cfg.kinematics_n_max = integer(v, "kinematics.n_max", 2); });
    if (cfg.kinematics_n_max < cfg.kinematics_n_min || cfg.kinematics_n_max > 12)
      throw ConfigError("kinematics: need 2 <= n_min <= n_max <= 12");
  }
  if (j.contains("calibration")) {
    const json& c = j["calibration"];
    allow_keys(c, {"h0", "halvings"}, "calibration");
    optional_field(c, "h0", [&](const json& v, auto) { cfg.calibration_h0 = positive(v, "calibration.h0"); });
    optional_field(c, "halvings", [&](const json& v, auto) { cfg.calibration_halvings = integer(v, "calibration.halvings", 1); });
  }
  if (j.contains("sigma")) {
    const json& s = j["sigma"];
    allow_keys(s, {"z_min", "z_max", "h"}, "sigma");
    optional_field(s, "z_min", [&](const json& v, auto) { cfg.sigma_z_min = positive(v, "sigma.z_min"); });
    optional_field(s, "z_max", [&](const json& v, auto) { cfg.sigma_z_max = positive(v, "sigma.z_max"); });
    optional_field(s, "h", [&](const json& v, auto) { cfg.sigma_h = positive(v, "sigma.h"); });
    if (cfg.sigma_z_max < cfg.sigma_z_min) throw ConfigError("sigma: z_max below z_min");
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

const std::vector<std::string>& sweep_axes() {
  static const std::vector<std::string> a{"a0", "delta_cone", "omega", "h", "r_max"};
  return a;
}

ExperimentConfig with_axis(const ExperimentConfig& cfg, const std::string& axis, double value) {
  ExperimentConfig c = cfg;
  if (!std::isfinite(value)) throw ConfigError("sweep: non-finite value");
  if (axis == "a0") {
    if (value <= 0.0) throw ConfigError("sweep: a0 must be positive");
    c.a0 = value;
    for (auto& chi : c.chi) chi.a0 = value;
  } else if (axis == "delta_cone") {
    if (value < 0.0 || value >= 1.0) throw ConfigError("sweep: delta_cone must lie in [0, 1)");
    c.scan.delta_cone = value;
  } else if (axis == "omega") {
    if (value <= 0.0) throw ConfigError("sweep: omega must be positive");
    c.scan.omega = value;
  } else if (axis == "h") {
    if (value <= 0.0) throw ConfigError("sweep: h must be positive");
    c.scan.h_floor = value;
  } else if (axis == "r_max") {
    if (value <= c.scan.r_min_factor) throw ConfigError("sweep: r_max must exceed r_min_factor");
    c.scan.r_max_factor = value;
  } else {
    throw ConfigError("sweep: '" + axis + "' is not a sweepable axis");
  }
  return c;
}

RunResult run(const ExperimentConfig& cfg, const RunOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  Artifacts art;
  RunResult res = execute(cfg, opts, art);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_outputs(opts.output_dir, "asymcoul run: " + cfg.scenario, echo_of(cfg), res, art,
                seconds, res.artifacts);
  return res;
}

RunResult sweep(const ExperimentConfig& cfg, const std::string& axis,
                const std::vector<double>& values, const RunOptions& opts) {
  if (cfg.scenario != "residual-scan") throw ConfigError("sweep needs a residual-scan config");
  if (values.empty()) throw ConfigError("sweep: no values");
  const auto t0 = std::chrono::steady_clock::now();
  // Validate every value before any work.
  std::vector<ExperimentConfig> cfgs;
  for (double v : values) cfgs.push_back(with_axis(cfg, axis, v));
  for (const auto& c : cfgs) {
    Rng r(cfg.seed);
    prepare(c, opts.threads, r);
  }

  Artifacts art;
  RunResult res;
  Csv rows("sweep rows", scan_row_columns(true));
  Csv summary("sweep", ray_columns(true));
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    log(opts, "sweep " + axis + " = " + num(values[i]));
    Rng rng(cfg.seed);
    Prepared p = prepare(cfgs[i], opts.threads, rng);
    std::vector<RayScanSpec> rays;
    if (axis == "delta_cone") {
      // Keep the rays of the base configuration so only the exclusion zone moves.
      Rng base_rng(cfg.seed);
      Prepared base = prepare(cfg, opts.threads, base_rng);
      rays = make_rays(cfg, base, base_rng);
      for (auto& r : rays) r.options.ansatz.delta_cone = values[i];
    } else {
      rays = make_rays(cfgs[i], p, rng);
    }
    // Rays left with too few points are reported with a NaN slope and fail.
    std::vector<DecayReport> reports;
    double worst = -std::numeric_limits<double>::infinity(), gap = 0.0;
    for (const auto& ray : rays) {
      DecayReport rep = evaluate_ray(*p.problem, ray);
      try {
        fit_decay(*p.problem, ray, rep);
        worst = std::max(worst, rep.slope());
        gap = std::max(gap, std::abs(rep.potential_slope() + 1.0));
      } catch (const InsufficientDataError&) {
        rep.fit.slope = rep.fit.stderr_ = rep.potential_fit.slope = std::nan("");
        worst = std::nan("");
      }
      reports.push_back(std::move(rep));
    }
    add_scan_rows(rows, summary, reports, num(values[i]));
    const std::string tag = " [" + axis + "=" + num(values[i]) + "]";
    const double limit = cfg.scan.slope_limit, tol = cfg.scan.potential_tolerance;
    res.checks.push_back({"residual slope" + tag, worst <= limit, worst, limit,
                          "largest fitted slope over " + std::to_string(reports.size()) + " rays"});
    res.checks.push_back({"potential slope |s + 1|" + tag, std::isfinite(worst) && gap <= tol,
                          gap, tol, ""});
  }
  art.tables.emplace_back("sweep.csv", summary);
  art.tables.emplace_back("sweep_rows.csv", rows);
  art.gnuplot =
      "# slope of |S/psi| against the swept parameter\n"
      "set datafile separator ','\n"
      "set key off\n"
      "set xlabel '" + axis + "'\n"
      "set ylabel 'fitted slope'\n"
      "set terminal pngcairo size 800,600\n"
      "set output 'sweep.png'\n"
      "plot 'sweep.csv' every ::2 using 1:3:4 with yerrorbars pt 7, " +
      num(cfg.scan.slope_limit) + " with lines dt 2\n";
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json echo = echo_of(cfg);
  echo["sweep_axis"] = axis;
  echo["sweep_values"] = values;
  write_outputs(opts.output_dir, "asymcoul sweep: " + axis, echo, res, art, seconds,
                res.artifacts);
  return res;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"asymcoul: residual checks for the n-body Coulomb asymptotic ansatz"};
  app.require_subcommand(0, 1);
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool verbose = false;
  app.add_option("--output-dir", output_dir, "artifact directory (default: config 'output', "
                                              "then $ASYMCOUL_OUTPUT_DIR, then asymcoul-out)");
  app.add_option("--seed", seed, "override the configuration seed");
  app.add_option("--threads", threads, "worker threads for scan points")->check(CLI::Range(1, 256));
  app.add_flag("-v,--verbose", verbose, "progress on stderr");

  // `asymcoul <config>` is shorthand for `asymcoul run <config>`.
  std::string config_path, bare_config;
  app.add_option("config", bare_config, "JSON configuration (same as `run <config>`)");
  auto* run_cmd = app.add_subcommand("run", "run the scenario of a configuration");
  run_cmd->add_option("config", config_path, "JSON configuration")->required();

  std::string sweep_config, axis;
  std::vector<double> values;
  auto* sweep_cmd = app.add_subcommand("sweep", "repeat a residual scan over one parameter");
  sweep_cmd->add_option("config", sweep_config, "JSON configuration")->required();
  sweep_cmd->add_option("--axis", axis, "a0, delta_cone, omega, h or r_max")->required();
  sweep_cmd->add_option("--values", values, "parameter values")->required()->expected(1, -1);
  for (auto* sub : {run_cmd, sweep_cmd}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalidInput;
  }
  const bool do_run = run_cmd->parsed() || !sweep_cmd->parsed();
  if (!run_cmd->parsed() && !sweep_cmd->parsed()) {
    if (bare_config.empty()) {
      std::cerr << app.help();
      return kInvalidInput;
    }
    config_path = bare_config;
  }

  try {
    ExperimentConfig cfg = load_config(do_run ? config_path : sweep_config);
    if (seed) cfg.seed = *seed;
    RunOptions opts;
    opts.threads = threads;
    opts.verbose = verbose;
    if (!output_dir.empty()) {
      opts.output_dir = output_dir;
    } else if (!cfg.output.empty()) {
      opts.output_dir = cfg.output;
    } else if (const char* env = std::getenv("ASYMCOUL_OUTPUT_DIR"); env && *env) {
      opts.output_dir = env;
    } else {
      opts.output_dir = "asymcoul-out";
    }
    const RunResult res = do_run ? run(cfg, opts) : sweep(cfg, axis, values, opts);
    for (const auto& c : res.checks)
      std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.measured
                << " (threshold " << c.threshold << ")\n";
    std::cout << "artifacts in " << opts.output_dir.string() << "\n";
    return res.passed() ? kOk : kCheckFailed;
  } catch (const ConfigError& e) {
    std::cerr << "asymcoul: invalid input: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const ConfigurationError& e) {
    std::cerr << "asymcoul: invalid input: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const NumericalError& e) {
    std::cerr << "asymcoul: numerical abort: " << e.what() << "\n";
    return kNumericalAbort;
  } catch (const std::exception& e) {
    std::cerr << "asymcoul: " << e.what() << "\n";
    return kNumericalAbort;
  }
}

}  // namespace asymcoul::cli

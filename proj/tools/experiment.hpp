#pragma once

// Experiment runner behind the asymcoul command line: JSON configuration,
// scenario execution and artifact emission.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "asymcoul/error.hpp"
#include "asymcoul/scenarios.hpp"

namespace asymcoul::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kInvalidInput = 2, kNumericalAbort = 3 };

/// Malformed or inconsistent configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ChiChoice {
  std::string realization;
  double a0 = 0.0;
};

struct ScanSettings {
  int rays = 10;
  int points = 12;
  double omega = 2.0;
  double r_min_factor = 1e2;
  double r_max_factor = 1e4;
  double delta_cone = 0.05;
  double epsilon_node = 1e-8;
  int envelope_samples = 8;
  double envelope_window = 0.15;
  double h_floor = 1e-3;
  double h_relative = 1e-4;
  double resolution = 0.1;
  double cluster_step = 0.02;
  double slope_limit = -1.7;
  double potential_tolerance = 0.1;
  double estimate_slope_limit = -0.8;
  std::optional<std::vector<double>> direction;  ///< explicit ray, stacked z blocks
  std::optional<std::vector<double>> Y;          ///< explicit cluster coordinates
};

struct ExperimentConfig {
  std::string scenario;
  int n = 3;
  double a0 = 1.0;
  std::vector<std::vector<int>> clusters;  ///< 0-based
  std::optional<JacobiBasisSpec> basis;
  std::vector<ChiChoice> chi;  ///< one per cluster
  std::optional<std::vector<double>> momenta;
  double momentum_min = 0.5;
  double momentum_max = 1.5;
  ScanSettings scan;
  int samples = 0;  ///< 0 selects the scenario default
  std::uint64_t seed = 1;
  std::string output;
  int kinematics_n_min = 2;
  int kinematics_n_max = 8;
  double calibration_h0 = 0.4;
  int calibration_halvings = 3;
  double sigma_z_min = 20.0;
  double sigma_z_max = 200.0;
  double sigma_h = 1e-2;
};

/// Parses and schema-checks a configuration; throws ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Scalars accepted by sweep.
const std::vector<std::string>& sweep_axes();
/// Copy of `cfg` with `axis` set to `value`; throws ConfigError for an
/// unknown axis.
ExperimentConfig with_axis(const ExperimentConfig& cfg, const std::string& axis, double value);

struct RunOptions {
  std::filesystem::path output_dir;
  int threads = 1;
  bool verbose = false;
};

struct RunResult {
  std::vector<Check> checks;
  std::vector<std::string> artifacts;
  bool passed() const;
};

/// Builds every object the scenario needs and runs it. Configuration
/// problems surface as ConfigError before anything is written.
RunResult run(const ExperimentConfig& cfg, const RunOptions& opts);
RunResult sweep(const ExperimentConfig& cfg, const std::string& axis,
                const std::vector<double>& values, const RunOptions& opts);

/// Full command line, returning the process exit code.
int main_entry(int argc, char** argv);

}  // namespace asymcoul::cli

#pragma once

// Experiment scenarios shared by the command-line runner and the acceptance
// suite. Each returns its measurements, the thresholds it applied and the
// per-point rows needed to recompute them.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "asymcoul/residual.hpp"

namespace asymcoul {

struct Check {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

using Rng = std::mt19937_64;

Vec3 random_unit(Rng& rng);
/// Random momenta, one block per Jacobi coordinate, magnitudes in [lo, hi],
/// resampled until every cross pair momentum exceeds 0.1.
Stacked random_momenta(const ParticleSystem& system, const ClusterDecomposition& d, Rng& rng,
                       double lo = 0.5, double hi = 1.5);

// ---- kinematics

struct KinematicsReport {
  int n = 0;
  int samples = 0;
  double pair_residual = 0.0;     ///< max |x_alpha - (r_i - r_j)| / scale
  double zeta_norm = 0.0;         ///< max |sum zeta^2 - 1|
  double orthogonality = 0.0;     ///< max |R^T R - I|
  double translation = 0.0;       ///< max change of X under a common shift, / scale
  std::vector<Check> checks;
};

/// Random decompositions and bases for one n.
KinematicsReport validate_kinematics(int n, int samples, Rng& rng);

// ---- two-body calibration

struct CalibrationPoint {
  Stacked X;
  Stacked Q;
  std::vector<double> steps;
  std::vector<double> residuals;  ///< |(H - E) psi / psi| per step
  std::vector<double> ratios;
};

struct CalibrationReport {
  std::vector<CalibrationPoint> points;
  double min_ratio = 0.0, max_ratio = 0.0;
  std::vector<Check> checks;
};

/// Sample radii start at the stencil clearance for h0, or 2 if larger.
CalibrationReport calibrate_two_body(double a0, int samples, double h0, int halvings, Rng& rng);

// ---- sigma identity

struct SigmaPoint {
  Stacked X;
  int alpha = 0;
  double sigma = 0.0;        ///< max over omega of |sigma|
  double sigma_bound = 0.0;  ///< 1e-6 |chi| (1 + |P|)
  double route_gap = 0.0;    ///< |direct - reduced| / scale of S_alpha
  double s_alpha = 0.0;
  double s_scale = 0.0;
};

struct SigmaReport {
  std::vector<SigmaPoint> points;
  double worst_sigma_ratio = 0.0;  ///< max |sigma| / bound
  double worst_route_gap = 0.0;
  std::vector<Check> checks;
};

/// Random points of a single-inter-coordinate problem (the momenta of
/// `problem` are kept). Cluster coordinates have norms in [0.5, omega], the
/// inter-cluster coordinate in [z_lo, z_hi].
SigmaReport sigma_check(const ScatteringProblem& problem, int samples, double omega, double z_lo,
                        double z_hi, double h, Rng& rng);

// ---- ray scans

struct RayPlan {
  double omega = 2.0;
  int points = 12;
  double r_lo_factor = 1e2;  ///< grid spans [r_lo_factor, r_hi_factor] (1 + omega)
  double r_hi_factor = 1e4;
  double epsilon_node = 1e-8;
  int envelope_samples = 8;
  double envelope_window = 0.15;
  ResidualOptions options;
  int threads = 1;
};

/// Cluster coordinates with norms in [0.5, omega] and within-cluster pair
/// distances of at least 0.3, plus a ray direction whose cross pairs stay
/// outside the forward cones at both ends of the grid.
RayScanSpec random_ray(const ScatteringProblem& problem, const RayPlan& plan, Rng& rng);

struct ScanReport {
  std::vector<RayScanSpec> rays;
  std::vector<DecayReport> reports;
  double worst_slope = 0.0;
  double worst_potential_gap = 0.0;  ///< max |potential slope + 1|
  std::vector<Check> checks;
};

/// `slope_limit` applies to |S / psi|; the potential slope must lie within
/// potential_tolerance of -1.
ScanReport residual_scan(const ScatteringProblem& problem, const RayPlan& plan, int rays,
                         double slope_limit, double potential_tolerance, Rng& rng);
/// Same, over rays fixed by the caller.
ScanReport residual_scan(const ScatteringProblem& problem, std::vector<RayScanSpec> rays,
                         double slope_limit, double potential_tolerance);

// ---- intermediate estimates

struct EstimatesScan {
  std::vector<EstimatesReport> rays;
  double worst_slope = 0.0;
  std::vector<Check> checks;
};

EstimatesScan estimates_scan(const ScatteringProblem& problem, const RayPlan& plan, int rays,
                             double slope_limit, Rng& rng);

// ---- cluster ansatz against the fully separated product

struct ConsistencyReport {
  std::vector<double> scales;
  std::vector<double> deviation;  ///< |cluster / BBK - 1|
  SlopeFit fit;
  std::vector<Check> checks;
};

/// X(s) = s X0 for every scale; X0 has unit-norm random blocks.
ConsistencyReport asymptotic_consistency(const ScatteringProblem& problem,
                                         const std::vector<double>& scales, double limit,
                                         Rng& rng);

}  // namespace asymcoul

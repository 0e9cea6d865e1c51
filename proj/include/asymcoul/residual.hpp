#pragma once

// Schroedinger residual S = (H - E) Psi of the ansatz, the coefficients
// sigma and S_alpha of its leading part, intermediate estimates of the pair
// coordinates, and log-log decay fits along rays.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "asymcoul/ansatz.hpp"

namespace asymcoul {

/// Finite-difference steps. Inter-cluster coordinates use
/// h = min(max(floor, relative R), resolution / |Q|); cluster coordinates use
/// min(h, cluster_step).
struct StepPolicy {
  double floor = 1e-3;
  double relative = 1e-4;
  double resolution = 0.1;
  double cluster_step = 0.02;
  /// Reject points with a pair distance below this many steps.
  double coincidence_factor = 10.0;

  /// Throws ConfigurationError when the resolution bound is below the floor.
  double z_step(double R, double q_mag) const;
  std::vector<double> steps(const JacobiBasis& basis, const Stacked& X, const Stacked& Q) const;
};

using PointFunction = std::function<cplx(const Stacked&)>;

/// Throws SingularInputError if a pair distance is below factor times the
/// largest step acting on that pair.
void check_stencil_clearance(const CoefficientMatrix& pairs, const Stacked& X,
                             const std::vector<double>& steps, double factor);

/// (-Laplacian + V) psi at X with a centred 4th-order stencil per coordinate.
cplx apply_hamiltonian(const PointFunction& psi, const ParticleSystem& system,
                       const CoefficientMatrix& pairs, const Stacked& X,
                       const std::vector<double>& steps, double coincidence_factor = 10.0);
cplx apply_hamiltonian(const PointFunction& psi, const ParticleSystem& system,
                       const CoefficientMatrix& pairs, const Stacked& X, double h);

struct ResidualOptions {
  StepPolicy steps;
  AnsatzOptions ansatz;
};

struct DiscrepancyValue {
  cplx S;
  cplx psi;
  cplx relative;       ///< S / psi
  cplx cluster_part;   ///< own residual of the cluster wavefunctions
  cplx pair_part;      ///< residual of the cross-pair product with the cross potential
  cplx coupling_part;  ///< gradient coupling between the two
  double potential = 0.0;        ///< all pairs
  double cross_potential = 0.0;  ///< cross pairs only
  AnsatzFlags flags;
};

/// S = (H - E) Psi for the cluster ansatz. The plane wave is removed
/// analytically, the cluster envelopes are differentiated analytically and
/// the cross-pair product by finite differences.
DiscrepancyValue discrepancy(const ScatteringProblem& problem, const Stacked& X,
                             const ResidualOptions& opts = {});

struct SigmaTerms {
  cplx drift;           ///< 2 <p_w, a> chi
  cplx laplacian;       ///< sum_b Laplacian_b(g / chi) chi
  cplx cross_gradient;  ///< 2 sum_b <grad_b(g / chi), grad_b chi>
  cplx total;           ///< sum of the three addends
  cplx reduced;         ///< the same quantity assembled from g and chi without the quotient
};

/// sigma for cluster coordinate `omega` (0-based within the cluster) and
/// direction a. Derivatives in p are analytic when the realization has them;
/// derivatives in y use a 4th-order stencil of step h.
SigmaTerms sigma_coefficient(const ClusterWavefunction& chi, const CVec3& a, int omega,
                             const Blocks& Y, const Blocks& P, double h = 1e-2,
                             const NodeGuard& guard = {});

struct SAlphaTerms {
  cplx drift;       ///< 2 |k| |zeta_1| <q, a> chi
  cplx laplacian;   ///< -i eps |k| sum_b Laplacian_b <a, sum zeta u> chi
  cplx cross;       ///< -2i eps |k| sum_b <grad_b <a, sum zeta u>, grad_b chi>
  cplx mismatch;    ///< 2 |k|^2 (1 - eps <z^, k^>) chi
  cplx direct;      ///< sum of the four addends
  cplx reduced;     ///< -|k| eps sum_w zeta_w sigma_w
  std::vector<SigmaTerms> sigma;  ///< per cluster coordinate, clusters in order
  double scale = 0.0;  ///< largest modulus among the addends
};

/// Leading coefficient S_alpha of cross pair alpha, by both assembly routes.
/// Needs exactly one inter-cluster coordinate. Cluster wavefunctions other
/// than the ones carrying alpha's coordinates enter as constant factors.
SAlphaTerms s_alpha(const ScatteringProblem& problem, const Stacked& X, int alpha,
                    double h = 1e-2, const NodeGuard& guard = {});

struct EstimateSample {
  double R;
  int alpha;
  double remainder_distance;  ///< |x| minus its two-term expansion
  double remainder_argument;  ///< w minus its two-term expansion
};

/// Both remainders for cross pair alpha at X; the large vector is the
/// inter-cluster part of x_alpha.
EstimateSample intermediate_remainders(const ScatteringProblem& problem, const Stacked& X,
                                       int alpha);

struct SlopeFit {
  double slope = 0.0;
  double stderr_ = 0.0;
  double intercept = 0.0;
  int points = 0;
};

/// Ordinary least squares of log y against log x; non-positive y are skipped.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct EstimatesReport {
  std::vector<EstimateSample> samples;
  std::vector<int> alphas;
  std::vector<SlopeFit> distance_fits;  ///< one per alpha
  std::vector<SlopeFit> argument_fits;
  double worst_slope = 0.0;  ///< largest fitted slope, skipping identically vanishing remainders
};

/// Remainder slopes along X(R) = Y + R direction for every cross pair with a
/// nonzero inter-cluster coefficient.
EstimatesReport intermediate_estimates_check(const ScatteringProblem& problem, const Stacked& Y,
                                             const Stacked& direction,
                                             const std::vector<double>& radii);

struct RayScanSpec {
  Stacked direction;  ///< unit vector over the inter-cluster coordinates
  Stacked Y;          ///< cluster coordinates, stacked in basis order
  double omega = 0.0;
  double r_min = 1e2;
  double r_max = 1e4;
  int points = 12;
  double epsilon_node = 1e-8;
  /// Points per grid value: |S / psi| at R is the largest value over
  /// R (1 + envelope_window t), t = 0, 1/K, ..., (K-1)/K, which follows the
  /// envelope of the oscillating residual. K = 1 samples R alone.
  int envelope_samples = 1;
  double envelope_window = 0.15;
  ResidualOptions options;
  int threads = 1;

  /// Geometric grid from r_min to r_max.
  std::vector<double> grid() const;
  /// Throws ConfigurationError on inconsistent sizes or bounds.
  void validate(const ScatteringProblem& problem) const;
  /// Point on the ray at parameter R.
  Stacked point(const ScatteringProblem& problem, double R) const;
};

struct ScanRow {
  int index = 0;   ///< grid index
  int sample = 0;  ///< envelope sample within the grid value
  double R = 0.0;
  cplx S;
  cplx psi;
  double relative = 0.0;  ///< |S / psi|
  double potential = 0.0;
  std::string flags;       ///< empty, or '|'-joined reasons
  bool excluded = false;
};

struct DecayReport {
  SlopeFit fit;
  SlopeFit potential_fit;
  std::vector<ScanRow> rows;
  std::vector<double> grid;
  std::vector<double> envelope;  ///< per grid value, 0 when every sample was excluded
  std::vector<std::pair<double, std::string>> excluded;
  double r_lo = 0.0, r_hi = 0.0;

  double slope() const { return fit.slope; }
  double potential_slope() const { return potential_fit.slope; }
};

/// Evaluates |S / psi| and the potential along the ray, excludes flagged
/// points, reduces every grid value to its envelope and fits both decay
/// exponents; the potential is fitted at the grid values themselves. For cluster decompositions the
/// potential fit uses the cross pairs only, since the cluster part is constant.
/// Throws InsufficientDataError with fewer than 5 usable points.
DecayReport ray_scan(const ScatteringProblem& problem, const RayScanSpec& spec);
/// The two halves of ray_scan: per-point rows and envelopes without fits,
/// then both fits (throws InsufficientDataError like ray_scan).
DecayReport evaluate_ray(const ScatteringProblem& problem, const RayScanSpec& spec);
void fit_decay(const ScatteringProblem& problem, const RayScanSpec& spec, DecayReport& rep);

}  // namespace asymcoul

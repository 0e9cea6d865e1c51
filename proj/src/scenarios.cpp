#include "asymcoul/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "asymcoul/error.hpp"

namespace asymcoul {

namespace {

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

ClusterDecomposition random_decomposition(int n, Rng& rng) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<int>> clusters;
  int i = 0;
  while (i < n) {
    const int left = n - i;
    int size = std::uniform_int_distribution<int>(1, std::min(left, 4))(rng);
    if (size >= 2) {
      clusters.emplace_back(perm.begin() + i, perm.begin() + i + size);
      std::sort(clusters.back().begin(), clusters.back().end());
    }
    i += size;
  }
  return ClusterDecomposition(n, clusters);
}

JacobiBasisSpec random_spec(const ClusterDecomposition& d, Rng& rng) {
  JacobiBasisSpec s = JacobiBasisSpec::natural(d);
  for (auto& order : s.cluster_orders) std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t u = 0; u < s.unit_order.size(); ++u) {
    const int c = d.cluster_of(s.unit_order[u]);
    if (c >= 0) {
      const auto& members = d.clusters()[c];
      s.unit_order[u] = members[std::uniform_int_distribution<std::size_t>(
          0, members.size() - 1)(rng)];
    }
  }
  std::shuffle(s.unit_order.begin(), s.unit_order.end(), rng);
  return s;
}

Blocks random_cluster_blocks(const ClusterWavefunction& chi, double omega, Rng& rng) {
  const int count = chi.size() - 1;
  const auto& pairs = chi.internal_pairs();
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Blocks Y(count);
    for (auto& y : Y) y = uniform(rng, 0.5, std::max(0.5, omega)) * random_unit(rng);
    bool ok = true;
    for (int a = 0; a < pairs.pair_count() && ok; ++a) {
      Vec3 x = Vec3::Zero();
      for (int b = 0; b < count; ++b) x += pairs.zeta()(a, b) * Y[b];
      ok = x.norm() >= 0.3;
    }
    if (ok) return Y;
  }
  throw ConfigurationError("could not place cluster particles apart");
}

Stacked random_cluster_coordinates(const ScatteringProblem& problem, double omega, Rng& rng) {
  const auto& basis = problem.basis();
  Stacked Y(3 * basis.z_begin());
  for (int j = 0; j < basis.cluster_count(); ++j) {
    const Blocks b = random_cluster_blocks(*problem.chi()[j], omega, rng);
    const int begin = basis.cluster_rows(j).first;
    for (std::size_t i = 0; i < b.size(); ++i) set_block(Y, begin + static_cast<int>(i), b[i]);
  }
  return Y;
}

Check make_check(std::string name, bool passed, double measured, double threshold,
                 std::string detail = {}) {
  return Check{std::move(name), passed, measured, threshold, std::move(detail)};
}

}  // namespace

Vec3 random_unit(Rng& rng) {
  std::normal_distribution<double> g;
  Vec3 v;
  do {
    v = Vec3(g(rng), g(rng), g(rng));
  } while (v.norm() < 1e-8);
  return v.normalized();
}

Stacked random_momenta(const ParticleSystem& system, const ClusterDecomposition& d, Rng& rng,
                       double lo, double hi) {
  const JacobiBasis basis = JacobiBasis::build(system, d);
  const CoefficientMatrix pairs(basis, d);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Stacked Q(3 * basis.dim());
    for (int i = 0; i < basis.dim(); ++i) set_block(Q, i, uniform(rng, lo, hi) * random_unit(rng));
    bool ok = true;
    for (int a = pairs.within_count(); a < pairs.pair_count() && ok; ++a)
      ok = pairs.combine(a, Q).norm() > 0.1;
    if (ok) return Q;
  }
  throw ConfigurationError("could not draw momenta with nonzero pair momenta");
}

KinematicsReport validate_kinematics(int n, int samples, Rng& rng) {
  KinematicsReport rep;
  rep.n = n;
  rep.samples = samples;
  const ParticleSystem system(n, 1.0);
  for (int s = 0; s < samples; ++s) {
    const ClusterDecomposition d = random_decomposition(n, rng);
    const JacobiBasis basis = JacobiBasis::build(system, d, random_spec(d, rng));
    const CoefficientMatrix pairs(basis, d);
    const double scale = std::pow(10.0, uniform(rng, -2.0, 3.0));
    std::vector<Vec3> r(n);
    for (auto& p : r) p = scale * uniform(rng, 0.0, 1.0) * random_unit(rng);
    const Stacked X = basis.coordinates(r);
    for (int a = 0; a < pairs.pair_count(); ++a) {
      const auto [i, j] = pairs.pair(a);
      rep.pair_residual =
          std::max(rep.pair_residual, (pairs.combine(a, X) - (r[i] - r[j])).norm() / scale);
      rep.zeta_norm = std::max(rep.zeta_norm, std::abs(pairs.row(a).squaredNorm() - 1.0));
    }
    const Vec3 shift = scale * random_unit(rng);
    std::vector<Vec3> moved = r;
    for (auto& p : moved) p += shift;
    rep.translation = std::max(rep.translation, (basis.coordinates(moved) - X).norm() / scale);

    const ClusterDecomposition d2 = random_decomposition(n, rng);
    const JacobiBasis other = JacobiBasis::build(system, d2, random_spec(d2, rng));
    const Eigen::MatrixXd R = basis.rotation_to(other);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(R.cols(), R.cols());
    rep.orthogonality = std::max(rep.orthogonality, (R.transpose() * R - I).cwiseAbs().maxCoeff());
  }
  const double tol = 1e-12;
  rep.checks.push_back(make_check("pair reconstruction n=" + std::to_string(n),
                                  rep.pair_residual < tol, rep.pair_residual, tol));
  rep.checks.push_back(make_check("zeta normalization n=" + std::to_string(n),
                                  rep.zeta_norm < tol, rep.zeta_norm, tol));
  rep.checks.push_back(make_check("basis change orthogonality n=" + std::to_string(n),
                                  rep.orthogonality < tol, rep.orthogonality, tol));
  rep.checks.push_back(make_check("translation invariance n=" + std::to_string(n),
                                  rep.translation < tol, rep.translation, tol));
  return rep;
}

CalibrationReport calibrate_two_body(double a0, int samples, double h0, int halvings, Rng& rng) {
  const ParticleSystem system(2, a0);
  const auto d = ClusterDecomposition::all_singletons(2);
  const JacobiBasis basis = JacobiBasis::build(system, d);
  const CoefficientMatrix pairs(basis, d);
  CalibrationReport rep;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  rep.max_ratio = -rep.min_ratio;
  // Keep the largest stencil clear of the origin.
  const double r_lo = std::max(2.0, StepPolicy{}.coincidence_factor * h0);
  for (int s = 0; s < samples; ++s) {
    CalibrationPoint p;
    p.Q = uniform(rng, 0.5, 1.5) * random_unit(rng);
    p.X = uniform(rng, r_lo, r_lo + 6.0) * random_unit(rng);
    const auto psi = [&](const Stacked& x) {
      return bbk_fully_separated(system, basis, x, p.Q).psi;
    };
    const cplx centre = psi(p.X);
    const double E = p.Q.squaredNorm();
    double h = h0;
    for (int k = 0; k <= halvings; ++k, h *= 0.5) {
      p.steps.push_back(h);
      const cplx r = apply_hamiltonian(psi, system, pairs, p.X, h) - E * centre;
      p.residuals.push_back(std::abs(r / centre));
      if (k > 0) {
        p.ratios.push_back(p.residuals[k - 1] / p.residuals[k]);
        rep.min_ratio = std::min(rep.min_ratio, p.ratios.back());
        rep.max_ratio = std::max(rep.max_ratio, p.ratios.back());
      }
    }
    rep.points.push_back(std::move(p));
  }
  rep.checks.push_back(make_check("step-halving ratio lower bound", rep.min_ratio >= 12.0,
                                  rep.min_ratio, 12.0));
  rep.checks.push_back(make_check("step-halving ratio upper bound", rep.max_ratio <= 20.0,
                                  rep.max_ratio, 20.0));
  return rep;
}

SigmaReport sigma_check(const ScatteringProblem& problem, int samples, double omega, double z_lo,
                        double z_hi, double h, Rng& rng) {
  const auto& basis = problem.basis();
  const auto& pairs = problem.pairs();
  if (basis.z_count() != 1 || basis.cluster_count() == 0)
    throw ConfigurationError("sigma-check needs clusters and one inter-cluster coordinate");
  SigmaReport rep;
  int drawn = 0;
  while (static_cast<int>(rep.points.size()) < samples * (pairs.pair_count() - pairs.within_count())) {
    if (++drawn > 100 * samples) throw ConfigurationError("too many node points in sigma-check");
    Stacked X(3 * basis.dim());
    X.head(3 * basis.z_begin()) = random_cluster_coordinates(problem, omega, rng);
    set_block(X, basis.z_begin(), uniform(rng, z_lo, z_hi) * random_unit(rng));
    bool near_node = false;
    for (int j = 0; j < basis.cluster_count(); ++j)
      near_node = near_node || std::abs(problem.chi()[j]->envelope(
                                   problem.cluster_blocks(X, j),
                                   problem.cluster_blocks(problem.Q(), j))) < 1e-4;
    if (near_node) continue;
    for (int a = pairs.within_count(); a < pairs.pair_count(); ++a) {
      SigmaPoint sp;
      sp.X = X;
      sp.alpha = a;
      const SAlphaTerms t = s_alpha(problem, X, a, h);
      sp.s_alpha = std::abs(t.direct);
      sp.s_scale = t.scale;
      sp.route_gap = std::abs(t.direct - t.reduced) / t.scale;
      std::size_t idx = 0;
      for (int j = 0; j < basis.cluster_count(); ++j) {
        const Blocks Y = problem.cluster_blocks(X, j);
        const Blocks P = problem.cluster_blocks(problem.Q(), j);
        double pn = 0.0;
        for (const auto& p : P) pn += p.squaredNorm();
        const double chi = std::abs(problem.chi()[j]->value(Y, P));
        for (std::size_t w = 0; w < Y.size(); ++w, ++idx) {
          if (pairs.zeta()(a, basis.cluster_rows(j).first + static_cast<int>(w)) == 0.0) continue;
          const double bound = 1e-6 * chi * (1.0 + std::sqrt(pn));
          const double s = std::abs(t.sigma[idx].total);
          if (s / bound > sp.sigma / std::max(sp.sigma_bound, 1e-300) || sp.sigma_bound == 0.0) {
            sp.sigma = s;
            sp.sigma_bound = bound;
          }
        }
      }
      rep.worst_sigma_ratio = std::max(rep.worst_sigma_ratio, sp.sigma / sp.sigma_bound);
      rep.worst_route_gap = std::max(rep.worst_route_gap, sp.route_gap);
      rep.points.push_back(sp);
    }
  }
  rep.checks.push_back(make_check("sigma identity |sigma| / bound", rep.worst_sigma_ratio < 1.0,
                                  rep.worst_sigma_ratio, 1.0,
                                  "bound 1e-6 |chi| (1 + |P|)"));
  rep.checks.push_back(make_check("S_alpha dual-route agreement", rep.worst_route_gap < 1e-10,
                                  rep.worst_route_gap, 1e-10));
  return rep;
}

RayScanSpec random_ray(const ScatteringProblem& problem, const RayPlan& plan, Rng& rng) {
  const auto& basis = problem.basis();
  RayScanSpec spec;
  spec.omega = basis.cluster_count() > 0 ? plan.omega : 0.0;
  spec.points = plan.points;
  spec.r_min = plan.r_lo_factor * (1.0 + spec.omega);
  spec.r_max = plan.r_hi_factor * (1.0 + spec.omega);
  spec.epsilon_node = plan.epsilon_node;
  spec.envelope_samples = plan.envelope_samples;
  spec.envelope_window = plan.envelope_window;
  spec.options = plan.options;
  spec.threads = plan.threads;
  const double limit = 1.0 - plan.options.ansatz.delta_cone;
  for (int attempt = 0; attempt < 10000; ++attempt) {
    spec.Y = random_cluster_coordinates(problem, spec.omega, rng);
    spec.direction = Stacked(3 * basis.z_count());
    for (int i = 0; i < basis.z_count(); ++i) set_block(spec.direction, i, random_unit(rng));
    spec.direction.normalize();
    if (max_forward_cosine(problem, spec.point(problem, spec.r_min)) < limit &&
        max_forward_cosine(problem, spec.point(problem, spec.r_max)) < limit)
      return spec;
  }
  throw ConfigurationError("could not find a ray outside the forward cones");
}

ScanReport residual_scan(const ScatteringProblem& problem, std::vector<RayScanSpec> rays,
                         double slope_limit, double potential_tolerance) {
  ScanReport rep;
  rep.rays = std::move(rays);
  rep.worst_slope = -std::numeric_limits<double>::infinity();
  for (const auto& ray : rep.rays) {
    rep.reports.push_back(ray_scan(problem, ray));
    const auto& d = rep.reports.back();
    rep.worst_slope = std::max(rep.worst_slope, d.slope());
    rep.worst_potential_gap =
        std::max(rep.worst_potential_gap, std::abs(d.potential_slope() + 1.0));
  }
  rep.checks.push_back(make_check("residual slope", rep.worst_slope <= slope_limit,
                                  rep.worst_slope, slope_limit,
                                  "largest fitted d log|S/psi| / d log R over " +
                                      std::to_string(rep.rays.size()) + " rays"));
  rep.checks.push_back(make_check("potential slope |s + 1|",
                                  rep.worst_potential_gap <= potential_tolerance,
                                  rep.worst_potential_gap, potential_tolerance));
  return rep;
}

ScanReport residual_scan(const ScatteringProblem& problem, const RayPlan& plan, int rays,
                         double slope_limit, double potential_tolerance, Rng& rng) {
  std::vector<RayScanSpec> specs;
  for (int r = 0; r < rays; ++r) specs.push_back(random_ray(problem, plan, rng));
  return residual_scan(problem, std::move(specs), slope_limit, potential_tolerance);
}

EstimatesScan estimates_scan(const ScatteringProblem& problem, const RayPlan& plan, int rays,
                             double slope_limit, Rng& rng) {
  EstimatesScan rep;
  rep.worst_slope = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < rays; ++r) {
    const RayScanSpec ray = random_ray(problem, plan, rng);
    rep.rays.push_back(
        intermediate_estimates_check(problem, ray.Y, ray.direction, ray.grid()));
    rep.worst_slope = std::max(rep.worst_slope, rep.rays.back().worst_slope);
  }
  rep.checks.push_back(make_check("intermediate estimate remainder slope",
                                  rep.worst_slope <= slope_limit, rep.worst_slope, slope_limit));
  return rep;
}

ConsistencyReport asymptotic_consistency(const ScatteringProblem& problem,
                                         const std::vector<double>& scales, double limit,
                                         Rng& rng) {
  const auto& basis = problem.basis();
  Stacked X0;
  for (int attempt = 0;; ++attempt) {
    if (attempt > 1000) throw ConfigurationError("could not find a consistency ray");
    X0 = Stacked(3 * basis.dim());
    for (int i = 0; i < basis.dim(); ++i) set_block(X0, i, random_unit(rng));
    bool ok = true;
    for (int a = 0; a < problem.pairs().pair_count() && ok; ++a) {
      const Vec3 x = problem.pairs().combine(a, X0);
      const Vec3 k = problem.k(a);
      ok = x.norm() > 0.3 && (k.norm() == 0.0 || x.dot(k) / (x.norm() * k.norm()) < 0.9);
    }
    if (ok) break;
  }
  ConsistencyReport rep;
  rep.scales = scales;
  for (double s : scales) {
    const Stacked X = s * X0;
    const cplx c = cluster_ansatz(problem, X).psi;
    const cplx b = bbk_fully_separated(problem.system(), basis, X, problem.Q()).psi;
    rep.deviation.push_back(std::abs(c / b - 1.0));
  }
  rep.fit = fit_loglog(scales, rep.deviation);
  const double last = rep.deviation.back();
  rep.checks.push_back(make_check("ratio deviation decreasing (fitted slope)",
                                  rep.fit.slope < 0.0, rep.fit.slope, 0.0));
  rep.checks.push_back(make_check("ratio deviation at largest scale", last < limit, last, limit,
                                  "|cluster / BBK - 1| at scale " + fmt(scales.back())));
  return rep;
}

}  // namespace asymcoul

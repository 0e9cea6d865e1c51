#include "asymcoul/residual.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "asymcoul/error.hpp"
#include "asymcoul/finite_difference.hpp"

namespace asymcoul {

namespace {

Stacked stack(const Blocks& v) {
  Stacked s(3 * v.size());
  for (std::size_t b = 0; b < v.size(); ++b) set_block(s, static_cast<int>(b), v[b]);
  return s;
}

Blocks unstack(const Stacked& s) {
  Blocks v(s.size() / 3);
  for (std::size_t b = 0; b < v.size(); ++b) v[b] = block(s, static_cast<int>(b));
  return v;
}

EnvelopeJet jet_of(const ClusterWavefunction& chi, const Blocks& Y, const Blocks& P) {
  if (chi.analytic_jet()) return chi.jet(Y, P);
  FdJetOptions o;
  o.richardson = true;
  return fd_jet(chi, Y, P, o);
}

cplx plane_phase(const Blocks& Y, const Blocks& P) {
  double s = 0.0;
  for (std::size_t b = 0; b < Y.size(); ++b) s += P[b].dot(Y[b]);
  return std::exp(kI * s);
}

// Cross-pair product of the ansatz at X, cluster coordinates entering through u.
cplx cross_product(const ScatteringProblem& problem, const Stacked& X, const AnsatzOptions& opts) {
  const auto& basis = problem.basis();
  const auto& pairs = problem.pairs();
  std::vector<UVectors> u_all;
  for (int j = 0; j < basis.cluster_count(); ++j) {
    const Blocks Y = problem.cluster_blocks(X, j);
    const Blocks P = problem.cluster_blocks(problem.Q(), j);
    const auto& chi = *problem.chi()[j];
    u_all.push_back(u_vectors(chi, jet_of(chi, Y, P), Y, P, opts.node));
  }
  cplx g = 1.0;
  for (int a = pairs.within_count(); a < pairs.pair_count(); ++a) {
    const CVec3 xt = tilde_x(basis, pairs, u_all, X, a);
    const double a0 = problem.system().a0;
    if (xt.imag().isZero(0.0))
      g *= coulomb_distortion(Vec3(xt.real()), problem.k(a), a0, opts.kummer).value;
    else
      g *= coulomb_distortion(xt, problem.k(a), a0, opts.kummer).value;
  }
  return g;
}

}  // namespace

double StepPolicy::z_step(double R, double q_mag) const {
  double h = std::max(floor, relative * R);
  if (q_mag > 0.0) {
    const double cap = resolution / q_mag;
    if (cap < floor)
      throw ConfigurationError("step floor violates the resolution bound for this momentum");
    h = std::min(h, cap);
  }
  return h;
}

std::vector<double> StepPolicy::steps(const JacobiBasis& basis, const Stacked& X,
                                      const Stacked& Q) const {
  const double hz = z_step(X.norm(), Q.norm());
  std::vector<double> s(X.size(), hz);
  for (Eigen::Index i = 0; i < 3 * basis.z_begin(); ++i)
    s[static_cast<std::size_t>(i)] = std::min(hz, cluster_step);
  return s;
}

void check_stencil_clearance(const CoefficientMatrix& pairs, const Stacked& X,
                             const std::vector<double>& steps, double factor) {
  for (int a = 0; a < pairs.pair_count(); ++a) {
    double h = 0.0;
    for (Eigen::Index c = 0; c < X.size(); ++c)
      if (pairs.zeta()(a, c / 3) != 0.0) h = std::max(h, steps[static_cast<std::size_t>(c)]);
    if (pairs.combine(a, X).norm() < factor * h)
      throw SingularInputError("finite-difference stencil reaches a pair coincidence");
  }
}

cplx apply_hamiltonian(const PointFunction& psi, const ParticleSystem& system,
                       const CoefficientMatrix& pairs, const Stacked& X,
                       const std::vector<double>& steps, double coincidence_factor) {
  if (static_cast<Eigen::Index>(steps.size()) != X.size())
    throw ConfigurationError("one step per coordinate is required");
  check_stencil_clearance(pairs, X, steps, coincidence_factor);
  const auto d = fd::laplacian_and_gradient(psi, X, steps);
  return -d.laplacian + potential(system, pairs, X) * d.value;
}

cplx apply_hamiltonian(const PointFunction& psi, const ParticleSystem& system,
                       const CoefficientMatrix& pairs, const Stacked& X, double h) {
  return apply_hamiltonian(psi, system, pairs, X, std::vector<double>(X.size(), h));
}

DiscrepancyValue discrepancy(const ScatteringProblem& problem, const Stacked& X,
                             const ResidualOptions& opts) {
  const auto& basis = problem.basis();
  const auto& pairs = problem.pairs();
  const double a0 = problem.system().a0;
  const std::vector<double> steps = opts.steps.steps(basis, X, problem.Q());
  check_stencil_clearance(pairs, X, steps, opts.steps.coincidence_factor);

  DiscrepancyValue out;
  const AnsatzValue value = cluster_ansatz(problem, X, opts.ansatz);
  out.psi = value.psi;
  out.flags = value.flags;

  for (int a = 0; a < pairs.pair_count(); ++a) {
    const double v = a0 / pairs.combine(a, X).norm();
    out.potential += v;
    if (!pairs.is_within(a)) out.cross_potential += v;
  }

  const auto G = [&](const Stacked& x) { return cross_product(problem, x, opts.ansatz); };
  const auto d = fd::laplacian_and_gradient(G, X, steps);
  const Eigen::VectorXcd grad_log_g = d.gradient / d.value;
  cplx drift = 0.0;
  for (Eigen::Index c = 0; c < X.size(); ++c) drift += problem.Q()(c) * grad_log_g(c);
  out.pair_part = -d.laplacian / d.value - 2.0 * kI * drift + out.cross_potential;

  out.cluster_part = out.potential - out.cross_potential;
  for (int j = 0; j < basis.cluster_count(); ++j) {
    const Blocks Y = problem.cluster_blocks(X, j);
    const Blocks P = problem.cluster_blocks(problem.Q(), j);
    const EnvelopeJet jet = jet_of(*problem.chi()[j], Y, P);
    const int begin = basis.cluster_rows(j).first;
    cplx own = -jet.laplacian_y / jet.value;
    for (std::size_t b = 0; b < Y.size(); ++b) {
      const CVec3 gl = jet.grad_y[b] / jet.value;
      own -= 2.0 * kI * dotu(P[b], gl);
      const CVec3 gg = grad_log_g.segment<3>(3 * (begin + static_cast<int>(b)));
      out.coupling_part -= 2.0 * dotu(gl, gg);
    }
    out.cluster_part += own;
  }
  out.relative = out.cluster_part + out.pair_part + out.coupling_part;
  out.S = out.relative * out.psi;
  return out;
}

SigmaTerms sigma_coefficient(const ClusterWavefunction& chi, const CVec3& a, int omega,
                             const Blocks& Y, const Blocks& P, double h, const NodeGuard& guard) {
  if (omega < 0 || omega >= chi.size() - 1) throw MisuseError("cluster coordinate out of range");
  const EnvelopeJet jet = jet_of(chi, Y, P);
  u_vectors(chi, jet, Y, P, guard);  // node check
  const std::size_t w = static_cast<std::size_t>(omega);
  const cplx phase = plane_phase(Y, P);
  const cplx value = phase * jet.value;
  const Stacked y0 = stack(Y);
  const std::vector<double> steps(y0.size(), h);

  // g / chi = <a, grad_p chi> / chi = i <a, y_w> + <a, grad_p env> / env
  const auto quotient = [&](const Stacked& y) {
    const Blocks Ys = unstack(y);
    const EnvelopeJet j = jet_of(chi, Ys, P);
    return kI * dotu(Ys[w], a) + dotu(a, j.grad_p[w]) / j.value;
  };
  const auto q = fd::laplacian_and_gradient(quotient, y0, steps);

  SigmaTerms s;
  s.drift = 2.0 * dotu(P[w], a) * value;
  s.laplacian = q.laplacian * value;
  s.cross_gradient = 0.0;
  for (std::size_t b = 0; b < Y.size(); ++b) {
    const CVec3 grad_chi = value * (kI * P[b].cast<cplx>() + jet.grad_y[b] / jet.value);
    s.cross_gradient += 2.0 * dotu(CVec3(q.gradient.segment<3>(3 * b)), grad_chi);
  }
  s.total = s.drift + s.laplacian + s.cross_gradient;

  // 2 <p, a> chi + sum_b (Laplacian g - (g / chi) Laplacian chi), with g = e^{i<P,Y>} G.
  const auto G = [&](const Stacked& y) {
    const Blocks Ys = unstack(y);
    const EnvelopeJet j = jet_of(chi, Ys, P);
    return dotu(a, j.grad_p[w]) + kI * dotu(Ys[w], a) * j.value;
  };
  const auto g = fd::laplacian_and_gradient(G, y0, steps);
  cplx p_grad_g = 0.0, p_grad_env = 0.0;
  for (std::size_t b = 0; b < Y.size(); ++b) {
    p_grad_g += dotu(P[b], CVec3(g.gradient.segment<3>(3 * b)));
    p_grad_env += dotu(P[b], jet.grad_y[b]);
  }
  const cplx lap_env = jet.laplacian_y + 2.0 * kI * p_grad_env;
  s.reduced = phase * (2.0 * dotu(P[w], a) * jet.value + g.laplacian + 2.0 * kI * p_grad_g -
                       g.value / jet.value * lap_env);
  return s;
}

SAlphaTerms s_alpha(const ScatteringProblem& problem, const Stacked& X, int alpha, double h,
                    const NodeGuard& guard) {
  const auto& basis = problem.basis();
  const auto& pairs = problem.pairs();
  if (basis.z_count() != 1)
    throw MisuseError("S_alpha needs exactly one inter-cluster coordinate");
  if (pairs.is_within(alpha)) throw MisuseError("S_alpha is defined for cross pairs only");
  const int zi = basis.z_begin();
  const double zeta1 = pairs.zeta()(alpha, zi);
  if (zeta1 == 0.0) throw DomainError("pair has no inter-cluster coefficient");
  const double eps = zeta1 > 0.0 ? 1.0 : -1.0;
  const Vec3 z = block(X, zi), q = block(problem.Q(), zi);
  const Vec3 k = problem.k(alpha);
  const double kn = k.norm();
  const Vec3 zh = z.normalized(), kh = k / kn;
  const Vec3 a = zh - eps * kh;
  const CVec3 ac = a.cast<cplx>();

  std::vector<cplx> chis;
  cplx C = 1.0;
  for (int j = 0; j < basis.cluster_count(); ++j) {
    const Blocks Y = problem.cluster_blocks(X, j);
    const Blocks P = problem.cluster_blocks(problem.Q(), j);
    chis.push_back(problem.chi()[j]->value(Y, P));
    C *= chis.back();
  }

  SAlphaTerms t;
  t.drift = 2.0 * kn * std::abs(zeta1) * q.dot(a) * C;
  t.mismatch = 2.0 * kn * kn * (1.0 - eps * zh.dot(kh)) * C;
  t.laplacian = t.cross = t.reduced = 0.0;
  for (int j = 0; j < basis.cluster_count(); ++j) {
    const auto [begin, count] = basis.cluster_rows(j);
    const auto& chi = *problem.chi()[j];
    const Blocks Y = problem.cluster_blocks(X, j);
    const Blocks P = problem.cluster_blocks(problem.Q(), j);
    const cplx others = C / chis[j];
    std::vector<double> zeta(count);
    bool involved = false;
    for (int i = 0; i < count; ++i) {
      zeta[i] = pairs.zeta()(alpha, begin + i);
      involved = involved || zeta[i] != 0.0;
    }
    for (int i = 0; i < count; ++i) {
      SigmaTerms s{};
      if (zeta[i] != 0.0) {
        s = sigma_coefficient(chi, ac, i, Y, P, h, guard);
        t.reduced += -kn * eps * zeta[i] * s.total * others;
      }
      t.sigma.push_back(s);
    }
    if (!involved) continue;

    // U = <a, sum_w zeta_w u_w>, u = y - i grad_p env / env
    const auto U = [&](const Stacked& y) {
      const Blocks Ys = unstack(y);
      const UVectors u = u_vectors(chi, jet_of(chi, Ys, P), Ys, P, guard);
      cplx s = 0.0;
      for (int i = 0; i < count; ++i) s += zeta[i] * dotu(ac, u.u[i]);
      return s;
    };
    const Stacked y0 = stack(Y);
    const auto d = fd::laplacian_and_gradient(U, y0, std::vector<double>(y0.size(), h));
    const EnvelopeJet jet = jet_of(chi, Y, P);
    cplx cross = 0.0;
    for (int b = 0; b < count; ++b) {
      const CVec3 grad_chi =
          chis[j] * (kI * P[b].cast<cplx>() + jet.grad_y[b] / jet.value);
      cross += dotu(CVec3(d.gradient.segment<3>(3 * b)), grad_chi);
    }
    t.laplacian += -kI * eps * kn * d.laplacian * C;
    t.cross += -2.0 * kI * eps * kn * cross * others;
  }
  t.direct = t.drift + t.laplacian + t.cross + t.mismatch;
  t.scale = std::max({std::abs(t.drift), std::abs(t.laplacian), std::abs(t.cross),
                      std::abs(t.mismatch)});
  return t;
}

EstimateSample intermediate_remainders(const ScatteringProblem& problem, const Stacked& X,
                                       int alpha) {
  const auto& basis = problem.basis();
  const auto& pairs = problem.pairs();
  if (pairs.is_within(alpha)) throw MisuseError("estimates are defined for cross pairs only");
  Vec3 b = Vec3::Zero(), yv = Vec3::Zero();
  for (int i = 0; i < basis.dim(); ++i) {
    const Vec3 c = pairs.zeta()(alpha, i) * block(X, i);
    (i >= basis.z_begin() ? b : yv) += c;
  }
  if (b.norm() == 0.0) throw DomainError("pair has no inter-cluster coefficient");
  const Vec3 x = b + yv;
  const Vec3 k = problem.k(alpha);
  const Vec3 bh = b.normalized();
  const double xn = x.norm(), bn = b.norm(), kn = k.norm();
  EstimateSample s;
  s.R = X.norm();
  s.alpha = alpha;
  // |x| - |b| without cancellation
  const double dx = (2.0 * b.dot(yv) + yv.squaredNorm()) / (xn + bn);
  s.remainder_distance = dx - bh.dot(yv);
  const double lead = distortion_argument(b, k) + kn * (bh - k / kn).dot(yv);
  s.remainder_argument = distortion_argument(x, k) - lead;
  return s;
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  SlopeFit f;
  f.points = static_cast<int>(lx.size());
  if (f.points < 2) throw InsufficientDataError("a slope needs at least 2 points");
  const double n = f.points;
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < f.points; ++i) {
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < f.points; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (f.points > 2) {
    double sse = 0.0;
    for (int i = 0; i < f.points; ++i) {
      const double r = ly[i] - f.intercept - f.slope * lx[i];
      sse += r * r;
    }
    f.stderr_ = std::sqrt(sse / (n - 2.0) / sxx);
  }
  return f;
}

EstimatesReport intermediate_estimates_check(const ScatteringProblem& problem, const Stacked& Y,
                                             const Stacked& direction,
                                             const std::vector<double>& radii) {
  RayScanSpec ray;
  ray.Y = Y;
  ray.direction = direction;
  const auto& basis = problem.basis();
  const auto& pairs = problem.pairs();
  EstimatesReport rep;
  rep.worst_slope = -std::numeric_limits<double>::infinity();
  for (int a = pairs.within_count(); a < pairs.pair_count(); ++a) {
    bool has_z = false;
    for (int i = basis.z_begin(); i < basis.dim(); ++i)
      has_z = has_z || pairs.zeta()(a, i) != 0.0;
    if (!has_z) continue;
    std::vector<double> r1, r2;
    double biggest = 0.0;
    for (double R : radii) {
      const EstimateSample s = intermediate_remainders(problem, ray.point(problem, R), a);
      rep.samples.push_back(s);
      r1.push_back(std::abs(s.remainder_distance));
      r2.push_back(std::abs(s.remainder_argument));
      biggest = std::max({biggest, r1.back(), r2.back()});
    }
    rep.alphas.push_back(a);
    // Y = 0 (or y along the big vector) gives an identically vanishing remainder.
    const bool vanishing = biggest < 1e-12 * (1.0 + radii.back());
    if (vanishing) {
      rep.distance_fits.push_back({});
      rep.argument_fits.push_back({});
      continue;
    }
    rep.distance_fits.push_back(fit_loglog(radii, r1));
    rep.argument_fits.push_back(fit_loglog(radii, r2));
    rep.worst_slope = std::max(
        {rep.worst_slope, rep.distance_fits.back().slope, rep.argument_fits.back().slope});
  }
  return rep;
}

std::vector<double> RayScanSpec::grid() const {
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i)
    g[i] = points == 1 ? r_min : r_min * std::pow(r_max / r_min, double(i) / (points - 1));
  return g;
}

void RayScanSpec::validate(const ScatteringProblem& problem) const {
  const auto& basis = problem.basis();
  if (direction.size() != 3 * basis.z_count())
    throw ConfigurationError("ray direction must span the inter-cluster coordinates");
  if (std::abs(direction.norm() - 1.0) > 1e-12)
    throw ConfigurationError("ray direction must be a unit vector");
  if (Y.size() != 3 * basis.z_begin())
    throw ConfigurationError("cluster coordinates have the wrong size");
  if (omega > 0.0)
    for (int i = 0; i < basis.z_begin(); ++i)
      if (block(Y, i).norm() > omega)
        throw ConfigurationError("cluster coordinate exceeds the bound omega");
  if (!(r_min > 0.0) || !(r_max > r_min) || points < 2)
    throw ConfigurationError("invalid ray grid");
}

Stacked RayScanSpec::point(const ScatteringProblem& problem, double R) const {
  const int nz = 3 * problem.basis().z_begin();
  Stacked X(Y.size() + direction.size());
  X.head(nz) = Y;
  X.tail(direction.size()) = R * direction;
  return X;
}

DecayReport evaluate_ray(const ScatteringProblem& problem, const RayScanSpec& spec) {
  spec.validate(problem);
  const std::vector<double> grid = spec.grid();
  const int K = std::max(1, spec.envelope_samples);
  std::vector<ScanRow> rows(grid.size() * K);
  ResidualOptions opts = spec.options;
  opts.ansatz.node.relative = spec.epsilon_node;
  const bool cross_only = problem.decomposition().l() > 0;

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(rows.size());
  const auto work = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      ScanRow& r = rows[i];
      r.index = static_cast<int>(i / K);
      r.sample = static_cast<int>(i % K);
      r.R = grid[r.index] * (1.0 + spec.envelope_window * r.sample / K);
      const Stacked X = spec.point(problem, r.R);
      try {
        const DiscrepancyValue d = discrepancy(problem, X, opts);
        r.S = d.S;
        r.psi = d.psi;
        r.relative = std::abs(d.relative);
        r.potential = cross_only ? d.cross_potential : d.potential;
        std::string f;
        if (d.flags.forward_cone) f = "forward_cone";
        if (d.flags.node) f += f.empty() ? "node" : "|node";
        r.flags = f;
        r.excluded = !f.empty();
      } catch (const NodeError&) {
        r.flags = "node";
        r.excluded = true;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, spec.threads);
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  DecayReport rep;
  rep.rows = rows;
  rep.grid = grid;
  rep.envelope.assign(grid.size(), 0.0);
  for (const auto& r : rows) {
    if (r.excluded)
      rep.excluded.emplace_back(r.R, r.flags);
    else
      rep.envelope[r.index] = std::max(rep.envelope[r.index], r.relative);
  }
  return rep;
}

void fit_decay(const ScatteringProblem& problem, const RayScanSpec& spec, DecayReport& rep) {
  const bool cross_only = problem.decomposition().l() > 0;
  const auto& grid = rep.grid;
  std::vector<double> rs, env, pot;
  const auto& pairs = problem.pairs();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (rep.envelope[g] == 0.0) continue;
    const Stacked X = spec.point(problem, grid[g]);
    double v = 0.0;
    for (int a = cross_only ? pairs.within_count() : 0; a < pairs.pair_count(); ++a)
      v += problem.system().a0 / pairs.combine(a, X).norm();
    rs.push_back(grid[g]);
    env.push_back(rep.envelope[g]);
    pot.push_back(v);
  }
  if (rs.size() < 5) throw InsufficientDataError("fewer than 5 usable points on the ray");
  rep.r_lo = rs.front();
  rep.r_hi = rs.back();
  rep.fit = fit_loglog(rs, env);
  rep.potential_fit = fit_loglog(rs, pot);
}

DecayReport ray_scan(const ScatteringProblem& problem, const RayScanSpec& spec) {
  DecayReport rep = evaluate_ray(problem, spec);
  fit_decay(problem, spec, rep);
  return rep;
}

}  // namespace asymcoul

#include "asymcoul/cluster_wavefunctions.hpp"

#include <algorithm>
#include <cmath>

#include "asymcoul/error.hpp"
#include "asymcoul/finite_difference.hpp"

namespace asymcoul {

namespace {

CoefficientMatrix sequential_pairs(int m) {
  if (m < 2) throw ConfigurationError("a cluster needs at least 2 particles");
  const ParticleSystem unit(m, 1.0);
  const auto d = ClusterDecomposition::all_singletons(m);
  return CoefficientMatrix(JacobiBasis::build(unit, d), d);
}

void check_shape(int m, const Blocks& Y, const Blocks& P) {
  if (static_cast<int>(Y.size()) != m - 1 || static_cast<int>(P.size()) != m - 1)
    throw ConfigurationError("cluster coordinates do not match the cluster size");
}

Vec3 combine(const CoefficientMatrix& c, int alpha, const Blocks& v) {
  Vec3 out = Vec3::Zero();
  for (std::size_t b = 0; b < v.size(); ++b) out += c.zeta()(alpha, b) * v[b];
  return out;
}

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

cplx phase(const Blocks& Y, const Blocks& P) {
  double s = 0.0;
  for (std::size_t b = 0; b < Y.size(); ++b) s += P[b].dot(Y[b]);
  return std::exp(kI * s);
}

}  // namespace

ClusterWavefunction::ClusterWavefunction(int m, double a0)
    : m_(m), a0_(a0), pairs_(sequential_pairs(m)) {
  if (a0 < 0.0) throw ConfigurationError("cluster coupling must be non-negative");
}

EnvelopeJet ClusterWavefunction::jet(const Blocks& Y, const Blocks& P) const {
  return fd_jet(*this, Y, P);
}

bool ClusterWavefunction::near_forward(const Blocks&, const Blocks&, double) const {
  return false;
}

cplx ClusterWavefunction::value(const Blocks& Y, const Blocks& P) const {
  return phase(Y, P) * envelope(Y, P);
}

std::vector<CVec3> ClusterWavefunction::grad_p(const Blocks& Y, const Blocks& P) const {
  const EnvelopeJet j = jet(Y, P);
  const cplx ph = phase(Y, P);
  std::vector<CVec3> g(Y.size());
  for (std::size_t b = 0; b < Y.size(); ++b)
    g[b] = ph * (kI * j.value * Y[b].cast<cplx>() + j.grad_p[b]);
  return g;
}

double ClusterWavefunction::potential(const Blocks& Y) const {
  double v = 0.0;
  for (int a = 0; a < pairs_.pair_count(); ++a) v += a0_ / combine(pairs_, a, Y).norm();
  return v;
}

double ClusterWavefunction::energy(const Blocks& P) {
  double e = 0.0;
  for (const auto& p : P) e += p.squaredNorm();
  return e;
}

double ClusterWavefunction::residual_selftest(const Blocks& Y, const Blocks& P, double h) const {
  check_shape(m_, Y, P);
  const Stacked y0 = stack(Y);
  const auto env = [&](const Stacked& y) { return envelope(unstack(y), P); };
  const std::vector<double> steps(y0.size(), h);
  const auto d = fd::laplacian_and_gradient(env, y0, steps);
  // (-Laplacian + V - |P|^2) (e^{i<P,Y>} env) = e^{i<P,Y>} (-L env - 2i P.grad env + V env)
  cplx drift = 0.0;
  for (std::size_t b = 0; b < P.size(); ++b)
    for (int c = 0; c < 3; ++c) drift += P[b](c) * d.gradient(3 * b + c);
  const cplx r = -d.laplacian - 2.0 * kI * drift + potential(Y) * d.value;
  return std::abs(r) / std::abs(d.value);
}

EnvelopeJet fd_jet(const ClusterWavefunction& chi, const Blocks& Y, const Blocks& P,
                   const FdJetOptions& opts) {
  check_shape(chi.size(), Y, P);
  const Stacked y0 = stack(Y);
  const auto env_y = [&](const Stacked& y) { return chi.envelope(unstack(y), P); };
  const std::vector<double> steps(y0.size(), opts.h_y);
  const auto d = fd::laplacian_and_gradient(env_y, y0, steps);
  EnvelopeJet j;
  j.value = d.value;
  j.laplacian_y = d.laplacian;
  j.grad_y.resize(Y.size());
  j.grad_p.resize(Y.size());
  for (std::size_t b = 0; b < Y.size(); ++b) j.grad_y[b] = d.gradient.segment<3>(3 * b);
  const Stacked p0 = stack(P);
  const auto env_p = [&](const Stacked& p) { return chi.envelope(Y, unstack(p)); };
  for (std::size_t b = 0; b < P.size(); ++b) {
    const double h = opts.h_p_rel * (1.0 + P[b].norm());
    for (int c = 0; c < 3; ++c) {
      const int idx = 3 * static_cast<int>(b) + c;
      const cplx g = fd::central_first(env_p, p0, idx, h);
      j.grad_p[b](c) =
          opts.richardson ? (4.0 * fd::central_first(env_p, p0, idx, 0.5 * h) - g) / 3.0 : g;
    }
  }
  return j;
}

FreeCluster::FreeCluster(int m) : ClusterWavefunction(m, 0.0) {}

cplx FreeCluster::envelope(const Blocks& Y, const Blocks& P) const {
  check_shape(size(), Y, P);
  return 1.0;
}

EnvelopeJet FreeCluster::jet(const Blocks& Y, const Blocks& P) const {
  check_shape(size(), Y, P);
  EnvelopeJet j;
  j.value = 1.0;
  j.laplacian_y = 0.0;
  j.grad_y.assign(Y.size(), CVec3::Zero());
  j.grad_p.assign(Y.size(), CVec3::Zero());
  return j;
}

CoulombProductCluster::CoulombProductCluster(int m, double a0, KummerOptions kummer)
    : ClusterWavefunction(m, a0), kummer_(kummer) {
  if (!(a0 > 0.0)) throw ConfigurationError("Coulomb cluster needs a positive coupling");
}

std::string CoulombProductCluster::name() const {
  return size() == 2 ? "two_body_coulomb" : "bbk_product";
}

cplx CoulombProductCluster::envelope(const Blocks& Y, const Blocks& P) const {
  check_shape(size(), Y, P);
  const auto& c = internal_pairs();
  cplx env = 1.0;
  for (int a = 0; a < c.pair_count(); ++a)
    env *= coulomb_distortion(combine(c, a, Y), combine(c, a, P), coupling(), kummer_).value;
  return env;
}

EnvelopeJet CoulombProductCluster::jet(const Blocks& Y, const Blocks& P) const {
  check_shape(size(), Y, P);
  const auto& c = internal_pairs();
  const std::size_t nb = Y.size();
  EnvelopeJet j;
  j.value = 1.0;
  // Per-factor logarithmic gradients, summed over factors.
  std::vector<CVec3> gy(nb, CVec3::Zero()), gp(nb, CVec3::Zero());
  cplx self = 0.0;   // sum_i Laplacian(Phi_i) / Phi_i
  cplx squares = 0.0;  // sum_i |grad log Phi_i|^2 (bilinear, over all blocks)
  for (int a = 0; a < c.pair_count(); ++a) {
    const Vec3 x = combine(c, a, Y);
    const Vec3 k = combine(c, a, P);
    const double xn = x.norm(), kn = k.norm();
    if (xn == 0.0) throw SingularInputError("coincident particles inside a cluster");
    const CoulombFactor f = coulomb_distortion(x, k, coupling(), kummer_);
    if (f.value == 0.0) throw NodeError("cluster factor vanishes");
    const double eta = coupling() / (2.0 * kn);
    const Vec3 grad_xw = kn * x / xn - k;
    const Vec3 grad_kw = xn * k / kn - x;
    const Vec3 grad_k_eta = -eta / kn * (k / kn);
    const cplx l1 = f.d1 / f.value;
    const cplx le = f.d_eta / f.value;
    self += (f.d2 * grad_xw.squaredNorm() + f.d1 * 2.0 * kn / xn) / f.value;
    squares += l1 * l1 * grad_xw.squaredNorm();
    for (std::size_t b = 0; b < nb; ++b) {
      const double z = c.zeta()(a, b);
      gy[b] += z * l1 * grad_xw.cast<cplx>();
      gp[b] += z * (l1 * grad_kw.cast<cplx>() + le * grad_k_eta.cast<cplx>());
    }
    j.value *= f.value;
  }
  cplx total_sq = 0.0;
  for (std::size_t b = 0; b < nb; ++b) total_sq += dotu(gy[b], gy[b]);
  // Laplacian of a product: sum of own Laplacians plus all cross terms.
  j.laplacian_y = j.value * (self + total_sq - squares);
  j.grad_y.resize(nb);
  j.grad_p.resize(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    j.grad_y[b] = j.value * gy[b];
    j.grad_p[b] = j.value * gp[b];
  }
  return j;
}

bool CoulombProductCluster::near_forward(const Blocks& Y, const Blocks& P,
                                         double delta_cone) const {
  const auto& c = internal_pairs();
  for (int a = 0; a < c.pair_count(); ++a) {
    const Vec3 x = combine(c, a, Y), k = combine(c, a, P);
    if (x.normalized().dot(k.normalized()) > 1.0 - delta_cone) return true;
  }
  return false;
}

ClusterPtr free_cluster(int m) { return std::make_shared<FreeCluster>(m); }

ClusterPtr two_body_coulomb(double a0) { return std::make_shared<CoulombProductCluster>(2, a0); }

ClusterPtr bbk_product_cluster(int m, double a0) {
  if (m < 3) throw ConfigurationError("BBK product clusters need at least 3 particles");
  return std::make_shared<CoulombProductCluster>(m, a0);
}

ClusterPtr make_cluster(const std::string& name, int m, double a0) {
  if (name == "free") return free_cluster(m);
  if (name == "two_body_coulomb") {
    if (m != 2) throw ConfigurationError("two_body_coulomb needs a cluster of 2 particles");
    return two_body_coulomb(a0);
  }
  if (name == "bbk_product") return bbk_product_cluster(m, a0);
  throw ConfigurationError("unknown cluster realization '" + name + "'");
}

UVectors u_vectors(const ClusterWavefunction& chi, const EnvelopeJet& jet, const Blocks& Y,
                   const Blocks& P, const NodeGuard& guard) {
  const double mag = std::abs(jet.value);
  if (!(mag >= guard.quick_accept)) {
    double scale = mag;
    Blocks probe = Y;
    for (std::size_t b = 0; b < Y.size(); ++b)
      for (int c = 0; c < 3; ++c)
        for (double s : {-guard.probe_radius, guard.probe_radius}) {
          probe[b](c) = Y[b](c) + s;
          scale = std::max(scale, std::abs(chi.envelope(probe, P)));
          probe[b](c) = Y[b](c);
        }
    if (!(mag >= guard.relative * scale))
      throw NodeError("cluster wavefunction too close to a node for the u substitution");
  }
  UVectors out;
  out.u.resize(Y.size());
  for (std::size_t b = 0; b < Y.size(); ++b)
    out.u[b] = Y[b].cast<cplx>() - kI * jet.grad_p[b] / jet.value;
  return out;
}

UVectors u_vectors(const ClusterWavefunction& chi, const Blocks& Y, const Blocks& P,
                   const NodeGuard& guard) {
  return u_vectors(chi, chi.jet(Y, P), Y, P, guard);
}

}  // namespace asymcoul

#include "asymcoul/ansatz.hpp"

#include <algorithm>
#include <cmath>

#include "asymcoul/error.hpp"

namespace asymcoul {

namespace {

bool is_real(const CVec3& v) { return v.imag().isZero(0.0); }

CoulombFactor distortion(const CVec3& x, const Vec3& k, double a0, const KummerOptions& opts) {
  if (is_real(x)) return coulomb_distortion(Vec3(x.real()), k, a0, opts);
  return coulomb_distortion(x, k, a0, opts);
}

double cosine(const Vec3& x, const Vec3& k) { return x.dot(k) / (x.norm() * k.norm()); }

}  // namespace

ScatteringProblem::ScatteringProblem(ParticleSystem system, ClusterDecomposition d,
                                     const JacobiBasisSpec& spec, std::vector<ClusterPtr> chi,
                                     Stacked Q)
    : system_(system),
      d_(std::move(d)),
      basis_(JacobiBasis::build(system_, d_, spec)),
      pairs_(basis_, d_),
      chi_(std::move(chi)),
      Q_(std::move(Q)) {
  if (static_cast<int>(chi_.size()) != d_.l())
    throw ConfigurationError("one cluster wavefunction is needed per cluster");
  for (int j = 0; j < d_.l(); ++j) {
    if (!chi_[j]) throw ConfigurationError("missing cluster wavefunction");
    if (chi_[j]->size() != d_.cluster_size(j))
      throw ConfigurationError("cluster wavefunction size does not match the decomposition");
  }
  if (Q_.size() != 3 * basis_.dim()) throw ConfigurationError("momentum vector has the wrong size");
  k_.resize(pairs_.pair_count());
  for (int a = 0; a < pairs_.pair_count(); ++a) {
    k_[a] = pairs_.combine(a, Q_);
    if (!pairs_.is_within(a) && k_[a].norm() == 0.0)
      throw SingularInputError("zero relative momentum of a cross pair");
  }
}

Blocks ScatteringProblem::cluster_blocks(const Stacked& v, int j) const {
  const auto [begin, count] = basis_.cluster_rows(j);
  Blocks b(count);
  for (int i = 0; i < count; ++i) b[i] = block(v, begin + i);
  return b;
}

Blocks ScatteringProblem::z_blocks(const Stacked& v) const {
  Blocks b(basis_.z_count());
  for (int i = 0; i < basis_.z_count(); ++i) b[i] = block(v, basis_.z_begin() + i);
  return b;
}

cplx AnsatzValue::reduced() const {
  cplx r = 1.0;
  for (const auto& e : envelope) r *= e;
  for (const auto& p : phi) r *= p;
  return r;
}

AnsatzValue bbk_fully_separated(const ParticleSystem& system, const JacobiBasis& basis,
                                const Stacked& X, const Stacked& Q, const AnsatzOptions& opts) {
  const auto d = ClusterDecomposition::all_singletons(system.n);
  const CoefficientMatrix pairs(basis, d);
  AnsatzValue v;
  v.plane_wave = std::exp(kI * Q.dot(X));
  v.psi = v.plane_wave;
  for (int a = 0; a < pairs.pair_count(); ++a) {
    const Vec3 x = pairs.combine(a, X);
    const Vec3 k = pairs.combine(a, Q);
    const CoulombFactor f = coulomb_distortion(x, k, system.a0, opts.kummer);
    v.phi.push_back(f.value);
    v.tilde_x.push_back(x.cast<cplx>());
    if (cosine(x, k) > 1.0 - opts.delta_cone) v.flags.forward_cone = true;
    v.psi *= f.value;
  }
  return v;
}

CVec3 tilde_x(const JacobiBasis& basis, const CoefficientMatrix& pairs,
              const std::vector<UVectors>& u_all, const Stacked& X, int alpha) {
  if (pairs.is_within(alpha))
    throw MisuseError("the modified coordinate is defined for cross pairs only");
  CVec3 x = CVec3::Zero();
  for (int j = 0; j < basis.cluster_count(); ++j) {
    const auto [begin, count] = basis.cluster_rows(j);
    for (int i = 0; i < count; ++i) {
      const double z = pairs.zeta()(alpha, begin + i);
      if (z != 0.0) x += z * u_all.at(j).u.at(i);
    }
  }
  for (int i = basis.z_begin(); i < basis.dim(); ++i)
    x += (pairs.zeta()(alpha, i) * block(X, i)).cast<cplx>();
  return x;
}

AnsatzValue cluster_ansatz(const ScatteringProblem& problem, const Stacked& X,
                           const AnsatzOptions& opts) {
  const auto& basis = problem.basis();
  const auto& pairs = problem.pairs();
  AnsatzValue v;
  double phase = 0.0;
  for (int i = basis.z_begin(); i < basis.dim(); ++i)
    phase += block(problem.Q(), i).dot(block(X, i));
  v.plane_wave = std::exp(kI * phase);
  v.psi = v.plane_wave;

  std::vector<UVectors> u_all;
  for (int j = 0; j < basis.cluster_count(); ++j) {
    const Blocks Y = problem.cluster_blocks(X, j);
    const Blocks P = problem.cluster_blocks(problem.Q(), j);
    const auto& chi = *problem.chi()[j];
    const EnvelopeJet jet = chi.jet(Y, P);
    if (std::abs(jet.value) < opts.node.quick_accept) v.flags.node = true;
    u_all.push_back(u_vectors(chi, jet, Y, P, opts.node));
    double py = 0.0;
    for (std::size_t b = 0; b < Y.size(); ++b) py += P[b].dot(Y[b]);
    v.envelope.push_back(jet.value);
    v.chi.push_back(std::exp(kI * py) * jet.value);
    v.psi *= v.chi.back();
  }
  for (int a = pairs.within_count(); a < pairs.pair_count(); ++a) {
    const CVec3 xt = tilde_x(basis, pairs, u_all, X, a);
    const CoulombFactor f = distortion(xt, problem.k(a), problem.system().a0, opts.kummer);
    v.tilde_x.push_back(xt);
    v.phi.push_back(f.value);
    if (cosine(pairs.combine(a, X), problem.k(a)) > 1.0 - opts.delta_cone)
      v.flags.forward_cone = true;
    v.psi *= f.value;
  }
  return v;
}

double max_forward_cosine(const ScatteringProblem& problem, const Stacked& X) {
  const auto& pairs = problem.pairs();
  double c = -1.0;
  for (int a = pairs.within_count(); a < pairs.pair_count(); ++a)
    c = std::max(c, cosine(pairs.combine(a, X), problem.k(a)));
  return c;
}

}  // namespace asymcoul

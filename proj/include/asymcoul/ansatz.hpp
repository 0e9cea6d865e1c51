#pragma once

// The asymptotic ansatz: plane wave times cluster wavefunctions times one
// (modified) Coulomb distortion factor per cross pair.

#include <vector>

#include "asymcoul/cluster_wavefunctions.hpp"
#include "asymcoul/kinematics.hpp"
#include "asymcoul/special_functions.hpp"

namespace asymcoul {

struct AnsatzOptions {
  double delta_cone = 0.05;
  NodeGuard node;
  KummerOptions kummer;
};

/// Everything that stays fixed while the configuration X varies.
class ScatteringProblem {
 public:
  /// `chi` holds one realization per cluster of `d`, sized to match. Throws
  /// ConfigurationError on mismatch and SingularInputError for a zero cross
  /// pair momentum.
  ScatteringProblem(ParticleSystem system, ClusterDecomposition d, const JacobiBasisSpec& spec,
                    std::vector<ClusterPtr> chi, Stacked Q);
  ScatteringProblem(ParticleSystem system, ClusterDecomposition d, std::vector<ClusterPtr> chi,
                    Stacked Q)
      : ScatteringProblem(system, d, JacobiBasisSpec::natural(d), std::move(chi), std::move(Q)) {}

  const ParticleSystem& system() const { return system_; }
  const ClusterDecomposition& decomposition() const { return d_; }
  const JacobiBasis& basis() const { return basis_; }
  const CoefficientMatrix& pairs() const { return pairs_; }
  const std::vector<ClusterPtr>& chi() const { return chi_; }
  const Stacked& Q() const { return Q_; }
  double energy() const { return Q_.squaredNorm(); }

  /// Pair momentum k_alpha.
  const Vec3& k(int alpha) const { return k_[alpha]; }

  /// The Jacobi blocks of cluster j taken out of a stacked vector.
  Blocks cluster_blocks(const Stacked& v, int j) const;
  /// The inter-cluster blocks.
  Blocks z_blocks(const Stacked& v) const;

 private:
  ParticleSystem system_;
  ClusterDecomposition d_;
  JacobiBasis basis_;
  CoefficientMatrix pairs_;
  std::vector<ClusterPtr> chi_;
  Stacked Q_;
  std::vector<Vec3> k_;
};

struct AnsatzFlags {
  bool forward_cone = false;
  bool node = false;
};

struct AnsatzValue {
  cplx psi;
  cplx plane_wave;             ///< e^{i<Q0,X0>}, inter-cluster part only
  std::vector<cplx> chi;       ///< full chi_j including its own plane wave
  std::vector<cplx> envelope;  ///< chi_j e^{-i<P_j,Y_j>}
  std::vector<cplx> phi;       ///< one per cross pair, in pair order
  std::vector<CVec3> tilde_x;  ///< one per cross pair
  AnsatzFlags flags;

  /// psi e^{-i<Q,X>}.
  cplx reduced() const;
};

/// e^{i<Q,X>} prod_alpha Phi_alpha(x_alpha, k_alpha) over all pairs.
AnsatzValue bbk_fully_separated(const ParticleSystem& system, const JacobiBasis& basis,
                                const Stacked& X, const Stacked& Q,
                                const AnsatzOptions& opts = {});

/// Modified coordinate of cross pair alpha: cluster coordinates replaced by
/// the u-vectors. `u_all` holds one entry per cluster. Throws MisuseError for
/// a within-cluster pair.
CVec3 tilde_x(const JacobiBasis& basis, const CoefficientMatrix& pairs,
              const std::vector<UVectors>& u_all, const Stacked& X, int alpha);

AnsatzValue cluster_ansatz(const ScatteringProblem& problem, const Stacked& X,
                           const AnsatzOptions& opts = {});

/// Largest <x_alpha^, k_alpha^> over the cross pairs at X.
double max_forward_cosine(const ScatteringProblem& problem, const Stacked& X);

}  // namespace asymcoul

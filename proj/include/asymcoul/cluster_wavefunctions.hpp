#pragma once

// Cluster eigenfunctions chi_j(Y, P) of isolated clusters and the u-vectors
// u_nu = -i grad_{p_nu} chi / chi that replace the finite cluster coordinates
// inside the cross-pair distortion factors.
//
// A realization works in the cluster's own sequential Jacobi basis (particles
// attached in the cluster order). It exposes the envelope chi e^{-i<P,Y>},
// which stays free of the large plane-wave phase, and its derivatives.

#include <memory>
#include <string>
#include <vector>

#include "asymcoul/kinematics.hpp"
#include "asymcoul/special_functions.hpp"
#include "asymcoul/types.hpp"

namespace asymcoul {

/// Envelope value and derivatives at one point (Y, P).
struct EnvelopeJet {
  cplx value;
  std::vector<CVec3> grad_y;
  cplx laplacian_y;
  std::vector<CVec3> grad_p;
};

struct NodeGuard {
  /// A point is a node when |chi| < relative * (local |chi| scale).
  double relative = 1e-8;
  /// Radius of the probe points used to estimate the local scale.
  double probe_radius = 0.25;
  /// Above this |chi| the local scale is not probed.
  double quick_accept = 1e-4;
};

class ClusterWavefunction {
 public:
  ClusterWavefunction(int m, double a0);
  virtual ~ClusterWavefunction() = default;

  int size() const { return m_; }
  double coupling() const { return a0_; }
  virtual std::string name() const = 0;

  virtual cplx envelope(const Blocks& Y, const Blocks& P) const = 0;
  /// Default: central finite differences of `envelope`.
  virtual EnvelopeJet jet(const Blocks& Y, const Blocks& P) const;
  virtual bool analytic_jet() const { return false; }
  /// True when some within-cluster pair lies in a forward cone, where the
  /// realization loses accuracy.
  virtual bool near_forward(const Blocks& Y, const Blocks& P, double delta_cone) const;

  cplx value(const Blocks& Y, const Blocks& P) const;
  /// grad_{p_nu} chi for nu = 1..m-1.
  std::vector<CVec3> grad_p(const Blocks& Y, const Blocks& P) const;

  /// Within-cluster Coulomb potential.
  double potential(const Blocks& Y) const;
  /// Cluster energy sum |p_nu|^2.
  static double energy(const Blocks& P);

  /// |(-Laplacian + V - E) chi| / |chi| with a centred 4th-order stencil of step h
  /// applied to the envelope; independent of any analytic derivatives.
  double residual_selftest(const Blocks& Y, const Blocks& P, double h = 1e-2) const;

  const CoefficientMatrix& internal_pairs() const { return pairs_; }

 private:
  int m_;
  double a0_;
  CoefficientMatrix pairs_;
};

using ClusterPtr = std::shared_ptr<const ClusterWavefunction>;

struct FdJetOptions {
  double h_y = 1e-2;
  double h_p_rel = 1e-5;  ///< step 1e-5 (1 + |p|)
  bool richardson = false;
};

EnvelopeJet fd_jet(const ClusterWavefunction& chi, const Blocks& Y, const Blocks& P,
                   const FdJetOptions& opts = {});

/// Plane wave, the a0 -> 0 solution; its coupling is zero.
class FreeCluster final : public ClusterWavefunction {
 public:
  explicit FreeCluster(int m);
  std::string name() const override { return "free"; }
  cplx envelope(const Blocks& Y, const Blocks& P) const override;
  EnvelopeJet jet(const Blocks& Y, const Blocks& P) const override;
  bool analytic_jet() const override { return true; }
};

/// Plane wave times one Coulomb distortion factor per within-cluster pair.
/// Exact for m = 2, asymptotic (residual O(1/rho^2)) for m >= 3.
class CoulombProductCluster final : public ClusterWavefunction {
 public:
  CoulombProductCluster(int m, double a0, KummerOptions kummer = {});
  std::string name() const override;
  cplx envelope(const Blocks& Y, const Blocks& P) const override;
  EnvelopeJet jet(const Blocks& Y, const Blocks& P) const override;
  bool analytic_jet() const override { return true; }
  bool near_forward(const Blocks& Y, const Blocks& P, double delta_cone) const override;

 private:
  KummerOptions kummer_;
};

ClusterPtr free_cluster(int m);
ClusterPtr two_body_coulomb(double a0);
ClusterPtr bbk_product_cluster(int m, double a0);

/// Realization by name: "free", "two_body_coulomb", "bbk_product".
ClusterPtr make_cluster(const std::string& name, int m, double a0);

struct UVectors {
  std::vector<CVec3> u;
};

/// u_nu = -i grad_{p_nu} chi / chi. Throws NodeError near zeros of chi.
UVectors u_vectors(const ClusterWavefunction& chi, const Blocks& Y, const Blocks& P,
                   const NodeGuard& guard = {});
/// Same, reusing an already computed jet at (Y, P).
UVectors u_vectors(const ClusterWavefunction& chi, const EnvelopeJet& jet, const Blocks& Y,
                   const Blocks& P, const NodeGuard& guard = {});

}  // namespace asymcoul

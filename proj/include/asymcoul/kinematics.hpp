#pragma once

// Jacobi bases for equal-mass n-body systems with an arbitrary cluster
// decomposition, and the coefficients expressing pair coordinates (and the
// conjugate pair momenta) over such a basis.
//
// Particles are indexed from 0 in the C++ API. A pair (i, j) with i < j is
// oriented as x = r_i - r_j.

#include <utility>
#include <vector>

#include "asymcoul/types.hpp"

namespace asymcoul {

struct ParticleSystem {
  int n;
  double a0;  ///< Coulomb coupling, energy * length

  ParticleSystem(int n, double a0);
};

using Pair = std::pair<int, int>;

/// Partition of the particles into clusters (size >= 2) and singletons.
class ClusterDecomposition {
 public:
  /// `clusters` lists every group of size >= 2; all remaining particles are
  /// singletons. Throws ConfigurationError on overlap, out-of-range indices or
  /// groups of size < 2.
  ClusterDecomposition(int n, std::vector<std::vector<int>> clusters);

  static ClusterDecomposition all_singletons(int n);

  int n() const { return n_; }
  int l() const { return static_cast<int>(clusters_.size()); }
  const std::vector<std::vector<int>>& clusters() const { return clusters_; }
  const std::vector<int>& singletons() const { return singletons_; }
  int cluster_size(int j) const { return static_cast<int>(clusters_[j].size()); }

  /// Number of within-cluster Jacobi coordinates, sum of (m_j - 1).
  int N() const;
  /// Number of within-cluster pairs, sum of m_j (m_j - 1) / 2.
  int M() const;
  /// Index of the cluster containing `particle`, or -1 for a singleton.
  int cluster_of(int particle) const;
  bool same_cluster(int i, int j) const;

 private:
  int n_;
  std::vector<std::vector<int>> clusters_;
  std::vector<int> singletons_;
  std::vector<int> owner_;
};

/// Choice of Jacobi basis for a decomposition: the order in which particles
/// are attached inside every cluster, and the order in which the units
/// (clusters as quasi-particles, and singletons) are attached to each other.
struct JacobiBasisSpec {
  std::vector<std::vector<int>> cluster_orders;  ///< one permutation per cluster
  std::vector<int> unit_order;  ///< one particle per unit, naming the unit containing it

  /// Clusters in ascending particle order; units ordered as the clusters,
  /// then the singletons ascending.
  static JacobiBasisSpec natural(const ClusterDecomposition& d);

  /// Throws ConfigurationError if the orders do not match `d`.
  void validate(const ClusterDecomposition& d) const;
};

/// Linear map B from particle positions to Jacobi coordinates. Rows are
/// ordered cluster 1, ..., cluster l, then the inter-cluster rows z.
class JacobiBasis {
 public:
  static JacobiBasis build(const ParticleSystem& system, const ClusterDecomposition& d,
                           const JacobiBasisSpec& spec);
  static JacobiBasis build(const ParticleSystem& system, const ClusterDecomposition& d) {
    return build(system, d, JacobiBasisSpec::natural(d));
  }

  int n() const { return static_cast<int>(matrix_.cols()); }
  int dim() const { return static_cast<int>(matrix_.rows()); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }

  int cluster_count() const { return static_cast<int>(cluster_rows_.size()); }
  /// First row and row count of cluster j.
  std::pair<int, int> cluster_rows(int j) const { return cluster_rows_[j]; }
  int z_begin() const { return z_begin_; }
  int z_count() const { return dim() - z_begin_; }

  /// Stacked Jacobi coordinates of the particle positions.
  Stacked coordinates(const std::vector<Vec3>& r) const;
  /// Particle positions (centre of mass at the origin) for stacked coordinates.
  std::vector<Vec3> positions(const Stacked& X) const;

  /// zeta such that r_i - r_j = sum_k zeta_k X_k for every configuration.
  Eigen::RowVectorXd pair_coefficients(int i, int j) const;
  /// zeta such that k_ij = sum_k zeta_k Q_k; the same row as for coordinates.
  Eigen::RowVectorXd momentum_coefficients(int i, int j) const {
    return pair_coefficients(i, j);
  }

  /// Orthogonal map taking coordinates in this basis to coordinates in `other`.
  Eigen::MatrixXd rotation_to(const JacobiBasis& other) const;

 private:
  Eigen::MatrixXd matrix_;
  std::vector<std::pair<int, int>> cluster_rows_;
  int z_begin_ = 0;
};

struct PairClasses {
  std::vector<Pair> within;  ///< M1, pairs inside a cluster
  std::vector<Pair> cross;   ///< M0, all other pairs
};

PairClasses classify_pairs(const ClusterDecomposition& d);

/// All pair rows of zeta. Pairs are enumerated with the within-cluster pairs
/// first, each group lexicographic in (i, j).
class CoefficientMatrix {
 public:
  CoefficientMatrix(const JacobiBasis& basis, const ClusterDecomposition& d);

  int pair_count() const { return static_cast<int>(pairs_.size()); }
  int within_count() const { return within_count_; }
  const Pair& pair(int alpha) const { return pairs_[alpha]; }
  int alpha(int i, int j) const;
  bool is_within(int alpha) const { return alpha < within_count_; }
  const Eigen::MatrixXd& zeta() const { return zeta_; }
  Eigen::RowVectorXd row(int alpha) const { return zeta_.row(alpha); }

  /// Pair coordinate x_alpha = sum_k zeta_{alpha k} X_k.
  Vec3 combine(int alpha, const Stacked& X) const;

 private:
  std::vector<Pair> pairs_;
  int within_count_ = 0;
  Eigen::MatrixXd zeta_;
};

/// Coulomb potential sum_alpha a0 / |x_alpha| over all pairs.
double potential(const ParticleSystem& system, const CoefficientMatrix& zeta, const Stacked& X);

/// Hyperradius (sum over pairs of |x_alpha|^2)^(1/2).
double hyperradius(const CoefficientMatrix& zeta, const Stacked& X);

}  // namespace asymcoul

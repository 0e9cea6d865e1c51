#include "asymcoul/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "asymcoul/error.hpp"

namespace asymcoul {

ParticleSystem::ParticleSystem(int n_, double a0_) : n(n_), a0(a0_) {
  if (n < 2) throw ConfigurationError("particle count must be at least 2");
  if (!(a0 > 0.0) || !std::isfinite(a0)) throw ConfigurationError("a0 must be positive");
}

ClusterDecomposition::ClusterDecomposition(int n, std::vector<std::vector<int>> clusters)
    : n_(n), clusters_(std::move(clusters)), owner_(n, -1) {
  if (n < 2) throw ConfigurationError("particle count must be at least 2");
  for (int j = 0; j < l(); ++j) {
    if (clusters_[j].size() < 2)
      throw ConfigurationError("cluster " + std::to_string(j + 1) + " has fewer than 2 particles");
    for (int p : clusters_[j]) {
      if (p < 0 || p >= n)
        throw ConfigurationError("particle index " + std::to_string(p + 1) + " out of range");
      if (owner_[p] != -1)
        throw ConfigurationError("particle " + std::to_string(p + 1) + " is in two clusters");
      owner_[p] = j;
    }
  }
  for (int p = 0; p < n; ++p)
    if (owner_[p] == -1) singletons_.push_back(p);
}

ClusterDecomposition ClusterDecomposition::all_singletons(int n) { return {n, {}}; }

int ClusterDecomposition::N() const {
  int total = 0;
  for (const auto& c : clusters_) total += static_cast<int>(c.size()) - 1;
  return total;
}

int ClusterDecomposition::M() const {
  int total = 0;
  for (const auto& c : clusters_) {
    const int m = static_cast<int>(c.size());
    total += m * (m - 1) / 2;
  }
  return total;
}

int ClusterDecomposition::cluster_of(int particle) const { return owner_.at(particle); }

bool ClusterDecomposition::same_cluster(int i, int j) const {
  return owner_.at(i) != -1 && owner_.at(i) == owner_.at(j);
}

JacobiBasisSpec JacobiBasisSpec::natural(const ClusterDecomposition& d) {
  JacobiBasisSpec spec;
  for (auto c : d.clusters()) {
    std::sort(c.begin(), c.end());
    spec.cluster_orders.push_back(c);
    spec.unit_order.push_back(c.front());
  }
  for (int s : d.singletons()) spec.unit_order.push_back(s);
  return spec;
}

void JacobiBasisSpec::validate(const ClusterDecomposition& d) const {
  if (static_cast<int>(cluster_orders.size()) != d.l())
    throw ConfigurationError("basis spec lists " + std::to_string(cluster_orders.size()) +
                             " cluster orders for " + std::to_string(d.l()) + " clusters");
  for (int j = 0; j < d.l(); ++j) {
    auto a = cluster_orders[j];
    auto b = d.clusters()[j];
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b)
      throw ConfigurationError("order for cluster " + std::to_string(j + 1) +
                               " is not a permutation of its particles");
  }
  const int units = d.l() + static_cast<int>(d.singletons().size());
  if (static_cast<int>(unit_order.size()) != units)
    throw ConfigurationError("unit order must name each of the " + std::to_string(units) +
                             " units exactly once");
  std::vector<int> seen(units, 0);
  for (int p : unit_order) {
    if (p < 0 || p >= d.n()) throw ConfigurationError("unit order names an unknown particle");
    const int c = d.cluster_of(p);
    const int unit =
        c >= 0 ? c
               : d.l() + static_cast<int>(std::find(d.singletons().begin(), d.singletons().end(), p) -
                                          d.singletons().begin());
    if (seen[unit]++) throw ConfigurationError("unit order names a unit twice");
  }
}

namespace {

// Row for the coordinate of group b relative to group a:
// sqrt(2 M_a M_b / (M_a + M_b)) (centre(a) - centre(b)).
Eigen::RowVectorXd attach_row(int n, const std::vector<int>& a, const std::vector<int>& b) {
  const double ma = static_cast<double>(a.size());
  const double mb = static_cast<double>(b.size());
  const double scale = std::sqrt(2.0 * ma * mb / (ma + mb));
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
  for (int p : a) row(p) += scale / ma;
  for (int p : b) row(p) -= scale / mb;
  return row;
}

}  // namespace

JacobiBasis JacobiBasis::build(const ParticleSystem& system, const ClusterDecomposition& d,
                               const JacobiBasisSpec& spec) {
  if (d.n() != system.n) throw ConfigurationError("decomposition and system disagree on n");
  spec.validate(d);
  const int n = system.n;
  JacobiBasis basis;
  basis.matrix_.resize(n - 1, n);
  int row = 0;
  for (const auto& order : spec.cluster_orders) {
    const int begin = row;
    std::vector<int> acc{order.front()};
    for (std::size_t k = 1; k < order.size(); ++k) {
      basis.matrix_.row(row++) = attach_row(n, acc, {order[k]});
      acc.push_back(order[k]);
    }
    basis.cluster_rows_.emplace_back(begin, row - begin);
  }
  basis.z_begin_ = row;
  std::vector<int> acc;
  for (int p : spec.unit_order) {
    const int c = d.cluster_of(p);
    std::vector<int> unit = c >= 0 ? d.clusters()[c] : std::vector<int>{p};
    if (!acc.empty()) basis.matrix_.row(row++) = attach_row(n, acc, unit);
    acc.insert(acc.end(), unit.begin(), unit.end());
  }
  return basis;
}

Stacked JacobiBasis::coordinates(const std::vector<Vec3>& r) const {
  if (static_cast<int>(r.size()) != n()) throw ConfigurationError("position count mismatch");
  Stacked X = Stacked::Zero(3 * dim());
  for (int k = 0; k < dim(); ++k) {
    Vec3 acc = Vec3::Zero();
    for (int p = 0; p < n(); ++p) acc += matrix_(k, p) * r[p];
    set_block(X, k, acc);
  }
  return X;
}

std::vector<Vec3> JacobiBasis::positions(const Stacked& X) const {
  // Rows are orthogonal with |row|^2 = 2 and span the complement of (1,...,1),
  // so r = B^T X / 2 is the centre-of-mass-free preimage.
  const Eigen::MatrixXd gram = matrix_ * matrix_.transpose();
  std::vector<Vec3> r(n(), Vec3::Zero());
  for (int c = 0; c < 3; ++c) {
    Eigen::VectorXd xc(dim());
    for (int k = 0; k < dim(); ++k) xc(k) = X(3 * k + c);
    const Eigen::VectorXd rc = matrix_.transpose() * gram.ldlt().solve(xc);
    for (int p = 0; p < n(); ++p) r[p](c) = rc(p);
  }
  return r;
}

Eigen::RowVectorXd JacobiBasis::pair_coefficients(int i, int j) const {
  if (i < 0 || j < 0 || i >= n() || j >= n() || i == j)
    throw ConfigurationError("invalid pair (" + std::to_string(i + 1) + "," +
                             std::to_string(j + 1) + ")");
  // Solve B^T zeta = e_i - e_j through the normal equations (B B^T) zeta = B d.
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n());
  d(i) = 1.0;
  d(j) = -1.0;
  const Eigen::MatrixXd gram = matrix_ * matrix_.transpose();
  return gram.ldlt().solve(matrix_ * d).transpose();
}

Eigen::MatrixXd JacobiBasis::rotation_to(const JacobiBasis& other) const {
  if (other.n() != n()) throw ConfigurationError("bases belong to different systems");
  // X_other = B_other r and r = B^T (B B^T)^{-1} X.
  const Eigen::MatrixXd gram = matrix_ * matrix_.transpose();
  return other.matrix_ * matrix_.transpose() * gram.inverse();
}

PairClasses classify_pairs(const ClusterDecomposition& d) {
  PairClasses out;
  for (int i = 0; i < d.n(); ++i)
    for (int j = i + 1; j < d.n(); ++j)
      (d.same_cluster(i, j) ? out.within : out.cross).emplace_back(i, j);
  return out;
}

CoefficientMatrix::CoefficientMatrix(const JacobiBasis& basis, const ClusterDecomposition& d) {
  if (basis.n() != d.n()) throw ConfigurationError("basis and decomposition disagree on n");
  auto classes = classify_pairs(d);
  within_count_ = static_cast<int>(classes.within.size());
  pairs_ = std::move(classes.within);
  pairs_.insert(pairs_.end(), classes.cross.begin(), classes.cross.end());
  zeta_.resize(pair_count(), basis.dim());
  for (int a = 0; a < pair_count(); ++a)
    zeta_.row(a) = basis.pair_coefficients(pairs_[a].first, pairs_[a].second);
}

int CoefficientMatrix::alpha(int i, int j) const {
  if (i > j) std::swap(i, j);
  for (int a = 0; a < pair_count(); ++a)
    if (pairs_[a] == Pair{i, j}) return a;
  throw ConfigurationError("unknown pair");
}

Vec3 CoefficientMatrix::combine(int alpha, const Stacked& X) const {
  Vec3 x = Vec3::Zero();
  for (int k = 0; k < zeta_.cols(); ++k) x += zeta_(alpha, k) * block(X, k);
  return x;
}

double potential(const ParticleSystem& system, const CoefficientMatrix& zeta, const Stacked& X) {
  double v = 0.0;
  for (int a = 0; a < zeta.pair_count(); ++a) v += system.a0 / zeta.combine(a, X).norm();
  return v;
}

double hyperradius(const CoefficientMatrix& zeta, const Stacked& X) {
  double s = 0.0;
  for (int a = 0; a < zeta.pair_count(); ++a) s += zeta.combine(a, X).squaredNorm();
  return std::sqrt(s);
}

}  // namespace asymcoul

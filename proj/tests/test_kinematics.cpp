#include <cmath>
#include <random>

#include "asymcoul/error.hpp"
#include "asymcoul/kinematics.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace asymcoul;

namespace {

std::vector<Vec3> random_positions(std::mt19937_64& rng, int n) {
  std::vector<Vec3> r;
  for (int i = 0; i < n; ++i) r.push_back(testutil::random_vec(rng, 3.0));
  return r;
}

}  // namespace

TEST_CASE("two-body basis is the single row r1 - r2") {
  ParticleSystem s(2, 1.0);
  const auto b = JacobiBasis::build(s, ClusterDecomposition::all_singletons(2));
  REQUIRE(b.dim() == 1);
  CHECK(b.matrix()(0, 0) == doctest::Approx(1.0));
  CHECK(b.matrix()(0, 1) == doctest::Approx(-1.0));
  CoefficientMatrix z(b, ClusterDecomposition::all_singletons(2));
  CHECK(z.zeta()(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("three-body natural basis") {
  ParticleSystem s(3, 1.0);
  const auto d = ClusterDecomposition::all_singletons(3);
  const auto b = JacobiBasis::build(s, d);
  const Eigen::MatrixXd& B = b.matrix();
  const double c = std::sqrt(4.0 / 3.0);
  CHECK(B(0, 0) == doctest::Approx(1.0));
  CHECK(B(0, 1) == doctest::Approx(-1.0));
  CHECK(B(0, 2) == doctest::Approx(0.0));
  CHECK(B(1, 0) == doctest::Approx(c / 2));
  CHECK(B(1, 1) == doctest::Approx(c / 2));
  CHECK(B(1, 2) == doctest::Approx(-c));

  CoefficientMatrix z(b, d);
  const int a = z.alpha(1, 2);
  CHECK(z.zeta()(a, 0) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(z.zeta()(a, 1) == doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-14));
}

TEST_CASE("zeta of pair (2,3) matches a least-squares fit over random configurations") {
  std::mt19937_64 rng(7);
  ParticleSystem s(3, 1.0);
  const auto d = ClusterDecomposition::all_singletons(3);
  const auto b = JacobiBasis::build(s, d);
  Eigen::MatrixXd A(30, 2);
  Eigen::VectorXd rhs(30);
  for (int t = 0; t < 10; ++t) {
    const auto r = random_positions(rng, 3);
    const Stacked X = b.coordinates(r);
    for (int c = 0; c < 3; ++c) {
      A(3 * t + c, 0) = X(c);
      A(3 * t + c, 1) = X(3 + c);
      rhs(3 * t + c) = r[1](c) - r[2](c);
    }
  }
  const Eigen::VectorXd fit = A.colPivHouseholderQr().solve(rhs);
  CHECK((A * fit - rhs).norm() < 1e-12);
  const auto row = b.pair_coefficients(1, 2);
  CHECK(std::abs(fit(0) - row(0)) < 1e-12);
  CHECK(std::abs(fit(1) - row(1)) < 1e-12);
}

TEST_CASE("basis rows are orthogonal with norm sqrt(2) and annihilate translations") {
  for (int n = 2; n <= 7; ++n) {
    ParticleSystem s(n, 1.0);
    const auto B = JacobiBasis::build(s, ClusterDecomposition::all_singletons(n)).matrix();
    const Eigen::MatrixXd G = B * B.transpose();
    CHECK((G - 2.0 * Eigen::MatrixXd::Identity(n - 1, n - 1)).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((B * Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("n=4 with cluster {1,2,3}: cluster rows first, one quasi-particle row") {
  ParticleSystem s(4, 1.0);
  ClusterDecomposition d(4, {{0, 1, 2}});
  const auto b = JacobiBasis::build(s, d);
  CHECK(b.cluster_count() == 1);
  CHECK(b.cluster_rows(0).first == 0);
  CHECK(b.cluster_rows(0).second == 2);
  CHECK(b.z_begin() == 2);
  CHECK(b.z_count() == 1);
  const Eigen::MatrixXd& B = b.matrix();
  // cluster rows do not see particle 4
  CHECK(B(0, 3) == 0.0);
  CHECK(B(1, 3) == 0.0);
  const Eigen::MatrixXd G = B * B.transpose();
  CHECK((G - Eigen::MatrixXd(G.diagonal().asDiagonal())).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pair reconstruction and zeta normalization for random decompositions") {
  std::mt19937_64 rng(11);
  const std::vector<std::pair<int, std::vector<std::vector<int>>>> cases{
      {3, {}}, {3, {{0, 1}}}, {4, {{0, 1}, {2, 3}}}, {5, {{0, 2, 4}}}, {6, {{1, 5}, {0, 2, 3}}}};
  for (const auto& [n, clusters] : cases) {
    ParticleSystem s(n, 1.0);
    ClusterDecomposition d(n, clusters);
    const auto b = JacobiBasis::build(s, d);
    CoefficientMatrix z(b, d);
    for (int a = 0; a < z.pair_count(); ++a)
      CHECK(std::abs(z.row(a).squaredNorm() - 1.0) < 1e-12);
    for (int t = 0; t < 50; ++t) {
      const auto r = random_positions(rng, n);
      const Stacked X = b.coordinates(r);
      for (int a = 0; a < z.pair_count(); ++a) {
        const auto [i, j] = z.pair(a);
        CHECK((z.combine(a, X) - (r[i] - r[j])).norm() < 1e-12 * (1.0 + X.norm()));
      }
    }
  }
}

TEST_CASE("within-cluster pairs have no inter-cluster components") {
  ParticleSystem s(5, 1.0);
  ClusterDecomposition d(5, {{0, 1, 2}, {3, 4}});
  const auto b = JacobiBasis::build(s, d);
  CoefficientMatrix z(b, d);
  CHECK(z.within_count() == 4);
  for (int a = 0; a < z.within_count(); ++a)
    for (int k = b.z_begin(); k < b.dim(); ++k) CHECK(z.zeta()(a, k) == 0.0);
}

TEST_CASE("momentum coefficients equal coordinate coefficients") {
  ParticleSystem s(4, 1.0);
  const auto d = ClusterDecomposition::all_singletons(4);
  const auto b = JacobiBasis::build(s, d);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      CHECK((b.momentum_coefficients(i, j) - b.pair_coefficients(i, j)).norm() == 0.0);
}

TEST_CASE("pair sum of <k, x> equals (n/2) <Q, X>") {
  // sum over pairs of zeta^T zeta is (n/2) I for unit masses.
  std::mt19937_64 rng(5);
  ParticleSystem s(3, 1.0);
  const auto d = ClusterDecomposition::all_singletons(3);
  const auto b = JacobiBasis::build(s, d);
  CoefficientMatrix z(b, d);
  const Stacked X = testutil::random_stacked(rng, 2);
  const Stacked Q = testutil::random_stacked(rng, 2);
  double pairs = 0.0;
  for (int a = 0; a < z.pair_count(); ++a) pairs += z.combine(a, X).dot(z.combine(a, Q));
  CHECK(pairs == doctest::Approx(1.5 * Q.dot(X)).epsilon(1e-13));
}

TEST_CASE("basis change between two specs is orthogonal") {
  ParticleSystem s(5, 1.0);
  ClusterDecomposition d(5, {{0, 1, 2}});
  const auto A = JacobiBasis::build(s, d);
  JacobiBasisSpec spec = JacobiBasisSpec::natural(d);
  spec.cluster_orders[0] = {2, 0, 1};
  spec.unit_order = {4, 0, 3};
  const auto B = JacobiBasis::build(s, d, spec);
  const Eigen::MatrixXd R = A.rotation_to(B);
  CHECK((R.transpose() * R - Eigen::MatrixXd::Identity(R.rows(), R.cols())).cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("pair classes and counts") {
  {
    const auto c = classify_pairs(ClusterDecomposition(3, {{0, 1}}));
    REQUIRE(c.within.size() == 1);
    CHECK(c.within[0] == Pair{0, 1});
    REQUIRE(c.cross.size() == 2);
    CHECK(c.cross[0] == Pair{0, 2});
    CHECK(c.cross[1] == Pair{1, 2});
  }
  {
    ClusterDecomposition d(4, {{0, 1}, {2, 3}});
    const auto c = classify_pairs(d);
    CHECK(c.within.size() == 2);
    CHECK(c.cross.size() == 4);
    CHECK(d.N() == 2);
    CHECK(d.M() == 2);
  }
  {
    ClusterDecomposition d(5, {{0, 1, 2}});
    const auto c = classify_pairs(d);
    CHECK(d.M() == 3);
    CHECK(c.cross.size() == 7);
    CHECK(d.N() == 2);
  }
}

TEST_CASE("invalid decompositions and specs are rejected") {
  CHECK_THROWS_AS(ClusterDecomposition(4, {{0, 1}, {1, 2}}), ConfigurationError);
  CHECK_THROWS_AS(ClusterDecomposition(3, {{0, 3}}), ConfigurationError);
  CHECK_THROWS_AS(ClusterDecomposition(3, {{0}}), ConfigurationError);
  CHECK_THROWS_AS(ParticleSystem(1, 1.0), ConfigurationError);
  ClusterDecomposition d(4, {{0, 1}});
  JacobiBasisSpec spec = JacobiBasisSpec::natural(d);
  spec.cluster_orders[0] = {0, 2};
  CHECK_THROWS_AS(spec.validate(d), ConfigurationError);
  CHECK_THROWS_AS(JacobiBasis::build(ParticleSystem(4, 1.0), d, spec), ConfigurationError);
}

TEST_CASE("translation invariance and position round trip") {
  std::mt19937_64 rng(3);
  ParticleSystem s(4, 1.0);
  const auto b = JacobiBasis::build(s, ClusterDecomposition(4, {{1, 3}}));
  auto r = random_positions(rng, 4);
  const Stacked X = b.coordinates(r);
  const Vec3 shift(10.0, -4.0, 2.5);
  for (auto& v : r) v += shift;
  CHECK((b.coordinates(r) - X).norm() < 1e-12);
  const auto back = b.positions(X);
  CHECK((b.coordinates(back) - X).norm() < 1e-12);
}

TEST_CASE("potential and hyperradius") {
  ParticleSystem s(2, 2.0);
  const auto d = ClusterDecomposition::all_singletons(2);
  const auto b = JacobiBasis::build(s, d);
  CoefficientMatrix z(b, d);
  Stacked X(3);
  X << 3.0, 0.0, 4.0;
  CHECK(potential(s, z, X) == doctest::Approx(2.0 / 5.0));
  CHECK(hyperradius(z, X) == doctest::Approx(5.0));
}

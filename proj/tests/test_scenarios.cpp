#include <cmath>

#include "asymcoul/error.hpp"
#include "asymcoul/scenarios.hpp"
#include "doctest.h"

using namespace asymcoul;

namespace {

bool all_pass(const std::vector<Check>& checks) {
  for (const auto& c : checks) {
    INFO(c.name << " measured " << c.measured << " threshold " << c.threshold);
    CHECK(c.passed);
    if (!c.passed) return false;
  }
  return !checks.empty();
}

RayPlan small_plan() {
  RayPlan plan;
  plan.points = 8;
  plan.envelope_samples = 4;
  plan.threads = 2;
  return plan;
}

}  // namespace

TEST_CASE("kinematics validation passes for small n") {
  Rng rng(1);
  for (int n = 2; n <= 5; ++n) {
    const auto rep = validate_kinematics(n, 100, rng);
    CHECK(rep.samples == 100);
    CHECK(all_pass(rep.checks));
  }
}

TEST_CASE("two-body calibration") {
  Rng rng(2);
  const auto rep = calibrate_two_body(1.0, 5, 0.4, 3, rng);
  REQUIRE(rep.points.size() == 5);
  for (const auto& p : rep.points) {
    CHECK(p.residuals.size() == 4);
    CHECK(p.ratios.size() == 3);
  }
  CHECK(all_pass(rep.checks));
}

TEST_CASE("random momenta respect the bounds") {
  Rng rng(3);
  ParticleSystem s(4, 1.0);
  ClusterDecomposition d(4, {{0, 1}});
  for (int t = 0; t < 20; ++t) {
    const Stacked Q = random_momenta(s, d, rng, 0.5, 1.5);
    REQUIRE(Q.size() == 9);
    for (int b = 0; b < 3; ++b) {
      CHECK(block(Q, b).norm() >= 0.5);
      CHECK(block(Q, b).norm() <= 1.5);
    }
    ScatteringProblem pb(s, d, {two_body_coulomb(1.0)}, Q);
    for (int a = pb.pairs().within_count(); a < pb.pairs().pair_count(); ++a)
      CHECK(pb.k(a).norm() > 0.1);
  }
}

TEST_CASE("random rays stay outside the forward cones") {
  Rng rng(4);
  ParticleSystem s(4, 1.0);
  ClusterDecomposition d(4, {{0, 1, 2}});
  ScatteringProblem pb(s, d, {bbk_product_cluster(3, 1.0)}, random_momenta(s, d, rng));
  const RayPlan plan = small_plan();
  for (int t = 0; t < 10; ++t) {
    const auto ray = random_ray(pb, plan, rng);
    CHECK_NOTHROW(ray.validate(pb));
    CHECK(ray.r_min == doctest::Approx(1e2 * 3.0));
    for (int b = 0; b < 2; ++b) {
      CHECK(block(ray.Y, b).norm() >= 0.5);
      CHECK(block(ray.Y, b).norm() <= plan.omega);
    }
    CHECK(max_forward_cosine(pb, ray.point(pb, ray.r_min)) < 0.95);
    CHECK(max_forward_cosine(pb, ray.point(pb, ray.r_max)) < 0.95);
  }
}

TEST_CASE("sigma identity on a short sample") {
  Rng rng(5);
  ParticleSystem s(3, 1.0);
  ClusterDecomposition d(3, {{0, 1}});
  ScatteringProblem pb(s, d, {two_body_coulomb(1.0)}, random_momenta(s, d, rng));
  const auto rep = sigma_check(pb, 8, 2.0, 20.0, 200.0, 1e-2, rng);
  CHECK(rep.points.size() >= 8);
  CHECK(all_pass(rep.checks));
}

TEST_CASE("fully separated residual scan") {
  Rng rng(6);
  ParticleSystem s(3, 1.0);
  const auto d = ClusterDecomposition::all_singletons(3);
  ScatteringProblem pb(s, d, {}, random_momenta(s, d, rng));
  const auto rep = residual_scan(pb, small_plan(), 2, -1.7, 0.1, rng);
  CHECK(rep.reports.size() == 2);
  CHECK(all_pass(rep.checks));
}

TEST_CASE("scans are reproducible from the seed") {
  ParticleSystem s(3, 1.0);
  ClusterDecomposition d(3, {{0, 1}});
  const auto once = [&] {
    Rng rng(7);
    ScatteringProblem pb(s, d, {two_body_coulomb(1.0)}, random_momenta(s, d, rng));
    return residual_scan(pb, small_plan(), 1, -1.7, 0.1, rng);
  };
  const auto a = once(), b = once();
  CHECK(a.worst_slope == b.worst_slope);
  CHECK(a.reports[0].envelope == b.reports[0].envelope);
  CHECK(a.checks.size() == 2);
}

TEST_CASE("intermediate estimates scan") {
  Rng rng(8);
  ParticleSystem s(3, 1.0);
  ClusterDecomposition d(3, {{0, 1}});
  ScatteringProblem pb(s, d, {two_body_coulomb(1.0)}, random_momenta(s, d, rng));
  const auto rep = estimates_scan(pb, small_plan(), 3, -0.8, rng);
  CHECK(rep.rays.size() == 3);
  CHECK(all_pass(rep.checks));
}

TEST_CASE("cluster ansatz approaches the fully separated product") {
  Rng rng(9);
  ParticleSystem s(4, 1.0);
  ClusterDecomposition d(4, {{0, 1, 2}});
  ScatteringProblem pb(s, d, {bbk_product_cluster(3, 1.0)}, random_momenta(s, d, rng));
  const auto rep = asymptotic_consistency(pb, {10, 100, 1000, 10000}, 0.05, rng);
  CHECK(rep.deviation.size() == 4);
  CHECK(all_pass(rep.checks));
}

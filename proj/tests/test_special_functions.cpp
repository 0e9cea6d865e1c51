#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "asymcoul/error.hpp"
#include "asymcoul/special_functions.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace asymcoul;
using testutil::rel;

namespace {

struct OracleRow {
  double eta;
  cplx w;
  cplx value;
};

std::vector<OracleRow> load(const std::string& name, bool complex_w) {
  std::ifstream in(std::string(ASYMCOUL_TEST_DATA) + "/" + name);
  REQUIRE(in.good());
  std::vector<OracleRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double eta, wr, wi = 0.0, re, im;
    ss >> eta >> wr;
    if (complex_w) ss >> wi;
    ss >> re >> im;
    rows.push_back({eta, {wr, wi}, {re, im}});
  }
  return rows;
}

// Corrected ODE: w F'' + (1 - i w) F' - eta F = 0.
double ode_residual(const CoulombFactor& f, double eta) {
  const cplx r = f.w * f.d2 + (1.0 - kI * f.w) * f.d1 - eta * f.value;
  const double scale = std::max({std::abs(f.value), std::abs(f.d1), std::abs(f.d2)});
  return std::abs(r) / scale;
}

}  // namespace

TEST_CASE("sommerfeld parameter") {
  CHECK(sommerfeld(2.0, 1.0).eta == doctest::Approx(1.0));
  CHECK(sommerfeld(1.0, 0.5).eta == doctest::Approx(1.0));
  CHECK_THROWS_AS(sommerfeld(1.0, 0.0), SingularInputError);
}

TEST_CASE("trivial values") {
  for (double w : {0.0, 0.5, 10.0, 1e3}) {
    const auto f = kummer({0.0}, w);
    CHECK(std::abs(f.value - 1.0) < 1e-15);
    CHECK(std::abs(f.d1) < 1e-15);
  }
  for (double eta : {0.1, 1.0, 7.0}) {
    const auto f = kummer({eta}, 0.0);
    CHECK(f.value == cplx(1.0, 0.0));
  }
  CHECK_THROWS_AS(kummer({1.0}, -1.0), DomainError);
}

TEST_CASE("eta = 1, w = 1 against a 50-digit reference") {
  const auto f = kummer({1.0}, 1.0);
  CHECK(rel(f.value, {2.204557452042820866469, 0.3304266746267593056125}) < 1e-13);
}

TEST_CASE("real-argument oracle table") {
  const auto rows = load("kummer_oracle.txt", false);
  CHECK(rows.size() >= 200);
  double worst = 0.0;
  for (const auto& r : rows) {
    const auto f = kummer({r.eta}, r.w.real());
    worst = std::max(worst, rel(f.value, r.value));
  }
  MESSAGE("worst relative error " << worst);
  CHECK(worst < 1e-10);
}

TEST_CASE("complex-argument oracle table") {
  const auto rows = load("kummer_oracle_complex.txt", true);
  CHECK(rows.size() >= 50);
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, rel(kummer({r.eta}, r.w).value, r.value));
  CHECK(worst < 1e-10);
}

TEST_CASE("ODE residual across regimes") {
  double worst = 0.0;
  for (double eta : {0.1, 0.5, 1.0, 2.5, 5.0})
    for (double w = 1e-3; w <= 1e4; w *= 1.7) worst = std::max(worst, ode_residual(kummer({eta}, w), eta));
  CHECK(worst < 1e-8);
  // complex arguments inside the accepted sector
  for (double eta : {0.3, 2.0})
    for (cplx w : {cplx(3.0, 1.0), cplx(80.0, -15.0), cplx(500.0, 40.0)}) {
      const auto f = kummer({eta}, w);
      CHECK(ode_residual(f, eta) < 1e-8);
    }
}

TEST_CASE("derivatives agree with finite differences") {
  for (double eta : {0.3, 1.5})
    for (double w : {0.7, 12.0, 35.0, 90.0, 2500.0}) {
      const auto f = kummer({eta}, w);
      const double h = 1e-4;  // the oscillation scale is 1 in w
      const cplx d1 = (kummer({eta}, w + h).value - kummer({eta}, w - h).value) / (2 * h);
      const cplx d2 = (kummer({eta}, w + h).d1 - kummer({eta}, w - h).d1) / (2 * h);
      CHECK(rel(f.d1, d1) < 1e-6);
      CHECK(rel(f.d2, d2) < 1e-6);
      const double he = 1e-5;
      const cplx de = (kummer({eta + he}, w).value - kummer({eta - he}, w).value) / (2 * he);
      CHECK(rel(f.d_eta, de) < 1e-6);
    }
}

TEST_CASE("series and asymptotic regimes agree in an overlap window") {
  for (double eta : {0.2, 1.0, 3.0})
    for (double w : {30.0, 40.0, 60.0}) {
      const auto s = detail::kummer_series(eta, cplx(w), 400);
      const auto a = detail::kummer_asymptotic(eta, cplx(w), 200);
      if (a.error_estimate > 1e-12) continue;
      CHECK(rel(s.value, a.factor.value) < 1e-9);
    }
}

TEST_CASE("regime selection") {
  CHECK(kummer({1.0}, 5.0).method == KummerMethod::series);
  CHECK(kummer({1.0}, 500.0).method == KummerMethod::asymptotic);
  CHECK(kummer({0.5}, 60.0).value == kummer({0.5}, 60.0).value);  // deterministic
  CHECK(rel(kummer({0.5}, 60.0).value, {-1.752268431686763865149, 1.9819928383197819056}) < 1e-12);
}

TEST_CASE("coulomb distortion geometry") {
  const Vec3 k(0.3, -0.4, 1.2);
  const double a0 = 1.3;
  SUBCASE("forward alignment gives w = 0") {
    const auto f = coulomb_distortion(Vec3(2.5 * k), k, a0);
    CHECK(std::abs(f.w) < 1e-15);
    CHECK(std::abs(f.value - 1.0) < 1e-15);
  }
  SUBCASE("backward direction gives w = 2 r |k|") {
    const Vec3 x = -7.0 * k.normalized();
    CHECK(distortion_argument(x, k) == doctest::Approx(14.0 * k.norm()));
  }
  SUBCASE("singular inputs") {
    CHECK_THROWS_AS(coulomb_distortion(Vec3::Zero().eval(), k, a0), SingularInputError);
    CHECK_THROWS_AS(coulomb_distortion(Vec3(1, 0, 0), Vec3::Zero().eval(), a0), SingularInputError);
  }
  SUBCASE("near-forward argument is free of cancellation") {
    const Vec3 x = 1e6 * k + Vec3(1e-3, 0.0, 0.0);
    const double w = distortion_argument(x, k);
    const Vec3 c = k.cross(x);
    CHECK(w == doctest::Approx(c.squaredNorm() / (k.norm() * x.norm() + k.dot(x))).epsilon(1e-14));
    CHECK(w > 0.0);
  }
}

TEST_CASE("complex distortion argument is holomorphic in x") {
  const Vec3 k(0.4, 0.9, -0.3);
  const CVec3 x(cplx(30.0, 0.4), cplx(-12.0, -0.2), cplx(50.0, 0.7));
  // both branches of the evaluation agree with |k| sqrt(x.x) - k.x
  const cplx naive = k.norm() * std::sqrt(dotu(x, x)) - dotu(k, x);
  CHECK(rel(distortion_argument(x, k), naive) < 1e-12);
  const CVec3 xm = -x;
  const cplx naive_m = k.norm() * std::sqrt(dotu(xm, xm)) - dotu(k, xm);
  CHECK(rel(distortion_argument(xm, k), naive_m) < 1e-12);
  // complex derivative is direction independent
  const CVec3 e = CVec3(0.3, -0.5, 0.8);
  const double h = 1e-5;
  const cplx dr = (distortion_argument(CVec3(x + h * e), k) - distortion_argument(CVec3(x - h * e), k)) / (2 * h);
  const cplx di = (distortion_argument(CVec3(x + kI * h * e), k) -
                   distortion_argument(CVec3(x - kI * h * e), k)) / (2.0 * kI * h);
  CHECK(rel(dr, di) < 1e-7);
  // a real vector reproduces the real evaluation
  const Vec3 xr(3.0, -1.0, 2.0);
  CHECK(rel(distortion_argument(CVec3(xr.cast<cplx>()), k), distortion_argument(xr, k)) < 1e-14);
}

TEST_CASE("log gamma matches the standard library on the real axis") {
  for (double x : {0.3, 1.0, 2.5, 7.0, 30.0})
    CHECK(std::abs(log_gamma(cplx(x)).real() - std::lgamma(x)) < 1e-12 * std::max(1.0, std::abs(std::lgamma(x))));
  // |Gamma(1 + i y)|^2 = pi y / sinh(pi y)
  for (double y : {0.2, 1.0, 4.0}) {
    const double lhs = 2.0 * log_gamma(cplx(1.0, y)).real();
    CHECK(lhs == doctest::Approx(std::log(M_PI * y / std::sinh(M_PI * y))).epsilon(1e-12));
  }
}

TEST_CASE("eta above the supported range is an error") {
  CHECK_THROWS_AS(kummer({60.0}, 10.0), DomainError);
}

#include "asymcoul/special_functions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "asymcoul/error.hpp"

namespace asymcoul {

namespace {

constexpr double kPi = std::numbers::pi;

// Minimal complex arithmetic for the extended-precision Maclaurin sums.
// Terms reach e^|w| while the sum stays O(1): binary128 keeps |w| <= 40
// clean, the x87 80-bit format is enough for small |w| and much faster.
using quad = __float128;

template <typename R>
struct XComplex {
  R re = 0;
  R im = 0;
};

template <typename R>
inline XComplex<R> operator+(XComplex<R> a, XComplex<R> b) {
  return {a.re + b.re, a.im + b.im};
}
template <typename R>
inline XComplex<R> operator*(XComplex<R> a, XComplex<R> b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
template <typename R>
inline XComplex<R> operator*(XComplex<R> a, R s) {
  return {a.re * s, a.im * s};
}
template <typename R>
inline XComplex<R>& operator+=(XComplex<R>& a, XComplex<R> b) {
  return a = a + b;
}
template <typename R>
inline double xabs(XComplex<R> a) {
  return std::hypot(static_cast<double>(a.re), static_cast<double>(a.im));
}
template <typename R>
inline cplx to_cplx(XComplex<R> a) {
  return {static_cast<double>(a.re), static_cast<double>(a.im)};
}

// Below this |w| the 80-bit sum is accurate to ~1e-17 relative.
constexpr double kLongDoubleLimit = 6.0;

}  // namespace

SommerfeldParameter sommerfeld(double a0, double k_mag) {
  if (!(k_mag > 0.0) || !std::isfinite(k_mag))
    throw SingularInputError("Sommerfeld parameter needs a non-zero momentum");
  if (a0 < 0.0) throw DomainError("negative coupling");
  return {a0 / (2.0 * k_mag)};
}

cplx log_gamma(cplx z) {
  static constexpr std::array<double, 9> c = {
      0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
      771.32342877765313,   -176.61502916214059,   12.507343278686905,
      -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  if (z.real() < 0.5) {
    // Reflection: Gamma(z) Gamma(1 - z) = pi / sin(pi z).
    return std::log(kPi) - std::log(std::sin(kPi * z)) - log_gamma(1.0 - z);
  }
  z -= 1.0;
  cplx x = c[0];
  for (int i = 1; i < 9; ++i) x += c[i] / (z + static_cast<double>(i));
  const cplx t = z + 7.5;
  return 0.5 * std::log(2.0 * kPi) + (z + 0.5) * std::log(t) - t + std::log(x);
}

cplx digamma(cplx z) {
  if (z.real() < 0.5) return digamma(1.0 - z) - kPi / std::tan(kPi * z);
  cplx shift = 0.0;
  while (z.real() < 12.0) {
    shift -= 1.0 / z;
    z += 1.0;
  }
  const cplx r = 1.0 / (z * z);
  // Bernoulli tail: -sum B_2k / (2k z^2k).
  const cplx tail =
      r * (1.0 / 12 - r * (1.0 / 120 - r * (1.0 / 252 - r * (1.0 / 240 - r * (1.0 / 132)))));
  return shift + std::log(z) - 0.5 / z - tail;
}

namespace detail {

namespace {

struct SeriesJet {
  CoulombFactor factor;
  cplx d1_eta;  // d^2 Phi / dw deta
};

template <typename R>
SeriesJet series_jet_impl(double eta, cplx w, int max_terms) {
  // Phi = sum e_k z^k with e_k = (a)_k / (k!)^2, a = -i eta, z = i w.
  // f_k = d e_k / d a, built by the product rule so a = 0 needs no special case.
  using C = XComplex<R>;
  const C z{-static_cast<R>(w.imag()), static_cast<R>(w.real())};
  const R a_im = -static_cast<R>(eta);
  C e{1, 0}, f{0, 0};
  C zk{1, 0}, zk1{0, 0}, zk2{0, 0};
  C val{0, 0}, dz{0, 0}, dzz{0, 0}, da{0, 0}, daz{0, 0};
  const double zmag = std::abs(w);
  bool converged = false;
  for (int k = 0; k < max_terms; ++k) {
    const C t0 = e * zk;
    const C t1 = e * zk1 * static_cast<R>(k);
    const C t2 = e * zk2 * static_cast<R>(k * (k - 1));
    const C t3 = f * zk;
    const C t4 = f * zk1 * static_cast<R>(k);
    val += t0;
    dz += t1;
    dzz += t2;
    da += t3;
    daz += t4;
    if (k > 2.0 * zmag + 4.0) {
      constexpr double small = 1e-22;
      if (xabs(t0) <= small * xabs(val) && xabs(t1) <= small * xabs(dz) + 1e-300 &&
          xabs(t2) <= small * xabs(dzz) + 1e-300 && xabs(t3) <= small * xabs(da) + 1e-300 &&
          xabs(t4) <= small * xabs(daz) + 1e-300) {
        converged = true;
        break;
      }
    }
    const C apk{static_cast<R>(k), a_im};
    const R inv = 1 / (static_cast<R>(k + 1) * static_cast<R>(k + 1));
    const C e_next = e * apk * inv;
    f = (f * apk + e) * inv;
    e = e_next;
    zk2 = zk1;
    zk1 = zk;
    zk = zk * z;
  }
  if (!converged) throw RangeError("Maclaurin series for 1F1 did not converge within the term cap");
  SeriesJet out;
  out.factor.w = w;
  out.factor.value = to_cplx(val);
  out.factor.d1 = kI * to_cplx(dz);
  out.factor.d2 = -to_cplx(dzz);
  out.factor.d_eta = -kI * to_cplx(da);
  out.factor.method = KummerMethod::series;
  // d/deta (d/dw) = (-i d/da)(i d/dz) = d/da d/dz
  out.d1_eta = to_cplx(daz);
  return out;
}

SeriesJet series_jet(double eta, cplx w, int max_terms) {
  return std::abs(w) <= kLongDoubleLimit ? series_jet_impl<long double>(eta, w, max_terms)
                                         : series_jet_impl<quad>(eta, w, max_terms);
}

}  // namespace

CoulombFactor kummer_series(double eta, cplx w, int max_terms) {
  return series_jet(eta, w, max_terms).factor;
}

AsymptoticResult kummer_asymptotic(double eta, cplx w, int max_terms) {
  // 1F1(a;1;z) ~ P1 S1 + P2 S2 for large |z|, -pi/2 < arg z < 3 pi/2, with
  //   P1 = e^{i pi a} z^{-a} / Gamma(1 - a),  S1 = sum (a)_s^2 / s! (-z)^{-s},
  //   P2 = e^z z^{a-1} / Gamma(a),            S2 = sum (1-a)_s^2 / s! z^{-s}.
  const cplx a{0.0, -eta};
  const cplx z = kI * w;
  const cplx lz = std::log(z);
  const cplx log_p1 = kI * kPi * a - a * lz - log_gamma(1.0 - a);
  const cplx log_p2_base = z + (a - 1.0) * lz - log_gamma(1.0 + a);
  if (log_p1.real() > 700.0 || log_p2_base.real() > 700.0)
    throw RangeError("Gamma prefactor of the asymptotic expansion overflows");
  const cplx p1 = std::exp(log_p1);
  const cplx e2 = std::exp(log_p2_base);  // e^z z^{a-1} / Gamma(1+a)
  const cplx p2 = a * e2;                 // 1/Gamma(a) = a/Gamma(1+a)
  const cplx dp1 = p1 * (kI * kPi - lz + digamma(1.0 - a));
  const cplx dp2 = e2 * (lz * a + 1.0 - a * digamma(1.0 + a));

  struct Branch {
    cplx sum = 1.0, dsum_z = 0.0, dsum_a = 0.0;
    double last = 1.0;
  };
  const double amag = std::abs(a);
  // T_{s+1} = T_s (c + s)^2 / ((s + 1) sz), c = shift, dc/da = dsign.
  auto run = [&](cplx shift, cplx sz, double dsign) {
    Branch b;
    cplx t = 1.0, dt = 0.0;
    for (int s = 0; s < max_terms; ++s) {
      const cplx cs = shift + static_cast<double>(s);
      const cplx denom = static_cast<double>(s + 1) * sz;
      const cplx ratio = cs * cs / denom;
      if (s >= amag + 1.0 && std::abs(ratio) >= 1.0) break;
      dt = (dt * cs * cs + dsign * 2.0 * cs * t) / denom;
      t *= ratio;
      b.sum += t;
      b.dsum_z += -static_cast<double>(s + 1) / z * t;
      b.dsum_a += dt;
      b.last = std::abs(t);
      if (b.last <= 1e-17 * std::abs(b.sum)) break;
    }
    return b;
  };
  const Branch s1 = run(a, -z, 1.0);
  const Branch s2 = run(1.0 - a, z, -1.0);

  CoulombFactor out;
  out.w = w;
  out.method = KummerMethod::asymptotic;
  out.value = p1 * s1.sum + p2 * s2.sum;
  const cplx phi_z = p1 * (-a / z * s1.sum + s1.dsum_z) +
                     p2 * ((1.0 + (a - 1.0) / z) * s2.sum + s2.dsum_z);
  // Kummer's equation z M'' + (1 - z) M' - a M = 0.
  const cplx phi_zz = ((z - 1.0) * phi_z + a * out.value) / z;
  const cplx phi_a = dp1 * s1.sum + p1 * s1.dsum_a + dp2 * s2.sum + p2 * s2.dsum_a;
  out.d1 = kI * phi_z;
  out.d2 = -phi_zz;
  out.d_eta = -kI * phi_a;
  const double err =
      (std::abs(p1) * s1.last + std::abs(p2) * s2.last) / std::max(std::abs(out.value), 1e-300);
  return {out, err};
}

CoulombFactor kummer_continuation(double eta, cplx w, double start_radius, int max_terms) {
  // In w the factor obeys w Phi'' + (1 - i w) Phi' - eta Phi = 0, and its
  // eta-derivative D obeys the same equation with source Phi. Both are
  // advanced by local Taylor series along the straight path from the series
  // region; steps stay well inside the convergence radius |w0|.
  const double dist_total = std::abs(w);
  const cplx dir = w / dist_total;
  cplx w0 = start_radius * dir;
  const SeriesJet start = series_jet(eta, w0, max_terms);
  cplx phi = start.factor.value, dphi = start.factor.d1;
  cplx dv = start.factor.d_eta, ddv = start.d1_eta;

  constexpr double max_step = 4.0;
  constexpr int max_taylor = 80;
  const int steps = static_cast<int>(std::ceil((dist_total - start_radius) / max_step));
  if (steps > 4000) throw RangeError("ODE continuation of 1F1 needs too many steps");
  const cplx h = (w - w0) / static_cast<double>(std::max(steps, 1));
  std::array<cplx, max_taylor + 2> c{}, d{};
  for (int step = 0; step < steps; ++step) {
    c[0] = phi;
    c[1] = dphi;
    d[0] = dv;
    d[1] = ddv;
    cplx phi_n = c[0] + c[1] * h, dphi_n = c[1];
    cplx dv_n = d[0] + d[1] * h, ddv_n = d[1];
    cplx hk = h;  // h^(k+1) for the coefficient k+2 below
    const double scale = std::abs(phi) + std::abs(dphi) * std::abs(h);
    const double dscale = std::abs(dv) + std::abs(ddv) * std::abs(h);
    bool done = false;
    for (int k = 0; k < max_taylor; ++k) {
      const double kk = static_cast<double>(k);
      const cplx lead = (kk + 1.0) * (kk + 1.0 - kI * w0);
      const cplx denom = w0 * (kk + 2.0) * (kk + 1.0);
      c[k + 2] = ((kI * kk + eta) * c[k] - lead * c[k + 1]) / denom;
      d[k + 2] = ((kI * kk + eta) * d[k] + c[k] - lead * d[k + 1]) / denom;
      const cplx tc = c[k + 2] * hk * h;
      const cplx td = d[k + 2] * hk * h;
      phi_n += tc;
      dv_n += td;
      dphi_n += (kk + 2.0) * c[k + 2] * hk;
      ddv_n += (kk + 2.0) * d[k + 2] * hk;
      hk *= h;
      if (k > 4 && std::abs(tc) < 1e-19 * scale && std::abs(td) < 1e-19 * (dscale + scale) &&
          (kk + 2.0) * std::abs(c[k + 2] * hk) < 1e-19 * scale * (1.0 + std::abs(h))) {
        done = true;
        break;
      }
    }
    if (!done) throw RangeError("Taylor step of the 1F1 continuation did not converge");
    phi = phi_n;
    dphi = dphi_n;
    dv = dv_n;
    ddv = ddv_n;
    w0 += h;
  }
  CoulombFactor out;
  out.w = w;
  out.method = KummerMethod::continuation;
  out.value = phi;
  out.d1 = dphi;
  out.d2 = (eta * phi - (1.0 - kI * w) * dphi) / w;
  out.d_eta = dv;
  return out;
}

}  // namespace detail

}  // namespace asymcoul

namespace asymcoul {

CoulombFactor kummer(SommerfeldParameter eta, cplx w, const KummerOptions& opts) {
  if (!(eta.eta >= 0.0) || eta.eta > opts.max_eta)
    throw DomainError("Sommerfeld parameter " + std::to_string(eta.eta) +
                      " outside the supported range [0, " + std::to_string(opts.max_eta) + "]");
  if (!std::isfinite(w.real()) || !std::isfinite(w.imag()))
    throw DomainError("non-finite argument to 1F1");
  const double mag = std::abs(w);
  CoulombFactor out;
  if (mag <= opts.series_limit) {
    out = detail::kummer_series(eta.eta, w, opts.max_terms);
  } else {
    if (std::abs(std::arg(w)) > 0.25 * std::numbers::pi + 1e-12)
      throw DomainError("complex argument of 1F1 outside the validated sector");
    const auto asym = detail::kummer_asymptotic(eta.eta, w, opts.max_terms);
    if (asym.error_estimate <= opts.asymptotic_tolerance)
      out = asym.factor;
    else
      out = detail::kummer_continuation(eta.eta, w, opts.series_limit, opts.max_terms);
  }
  if (eta.eta == 0.0) {
    out.value = 1.0;
    out.d1 = 0.0;
    out.d2 = 0.0;
  }
  return out;
}

CoulombFactor kummer(SommerfeldParameter eta, double w, const KummerOptions& opts) {
  if (!(w >= 0.0)) throw DomainError("1F1 argument w must be non-negative");
  return kummer(eta, cplx{w, 0.0}, opts);
}

double distortion_argument(const Vec3& x, const Vec3& k) {
  const double kx = k.dot(x);
  const double prod = k.norm() * x.norm();
  if (kx <= 0.0) return prod - kx;
  // |k||x| - k.x = |k x x|^2 / (|k||x| + k.x), free of cancellation near x || k.
  return k.cross(x).squaredNorm() / (prod + kx);
}

cplx distortion_argument(const CVec3& x, const Vec3& k) {
  const cplx xx = dotu(x, x);
  const cplx len = std::sqrt(xx);
  const cplx kx = dotu(k, x);
  const double kn = k.norm();
  if (kx.real() <= 0.0) return kn * len - kx;
  // Eigen's cross() conjugates complex operands; spell it out bilinearly.
  const CVec3 cr(k(1) * x(2) - k(2) * x(1), k(2) * x(0) - k(0) * x(2),
                 k(0) * x(1) - k(1) * x(0));
  return dotu(cr, cr) / (kn * len + kx);
}

CoulombFactor coulomb_distortion(const Vec3& x, const Vec3& k, double a0,
                                 const KummerOptions& opts) {
  if (x.norm() == 0.0) throw SingularInputError("Coulomb factor at zero pair distance");
  const auto eta = sommerfeld(a0, k.norm());
  return kummer(eta, std::max(0.0, distortion_argument(x, k)), opts);
}

CoulombFactor coulomb_distortion(const CVec3& x, const Vec3& k, double a0,
                                 const KummerOptions& opts) {
  if (x.norm() == 0.0) throw SingularInputError("Coulomb factor at zero pair distance");
  const auto eta = sommerfeld(a0, k.norm());
  return kummer(eta, distortion_argument(x, k), opts);
}

}  // namespace asymcoul

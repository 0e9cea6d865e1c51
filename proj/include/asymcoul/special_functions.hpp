#pragma once

// Coulomb distortion factor Phi(-i eta, 1, i w) = 1F1(-i eta; 1; i w) with
// its w-derivatives and its eta-derivative.

#include "asymcoul/types.hpp"

namespace asymcoul {

struct SommerfeldParameter {
  double eta = 0.0;
};

/// eta = a0 / (2 |k|) for the pair Hamiltonian -Laplacian + a0/|x|.
SommerfeldParameter sommerfeld(double a0, double k_mag);

enum class KummerMethod { series, asymptotic, continuation };

struct CoulombFactor {
  cplx value;
  cplx d1;     ///< d/dw
  cplx d2;     ///< d^2/dw^2
  cplx d_eta;  ///< d/d eta at fixed w
  cplx w;
  KummerMethod method = KummerMethod::series;
};

struct KummerOptions {
  /// Maclaurin summation (in quad precision) for |w| up to this value.
  double series_limit = 40.0;
  /// Largest accepted error estimate of the asymptotic expansion; above it the
  /// value is continued along the ODE from the series region instead.
  double asymptotic_tolerance = 1e-15;
  int max_terms = 200;
  double max_eta = 50.0;
};

/// 1F1(-i eta; 1; i w) for real w >= 0.
CoulombFactor kummer(SommerfeldParameter eta, double w, const KummerOptions& opts = {});

/// Holomorphic extension to complex w. Beyond the series region only
/// |arg w| <= pi/4 is accepted.
CoulombFactor kummer(SommerfeldParameter eta, cplx w, const KummerOptions& opts = {});

/// Phi(-i eta, 1, i(|k||x| - <k,x>)) with eta = sommerfeld(a0, |k|).
CoulombFactor coulomb_distortion(const Vec3& x, const Vec3& k, double a0,
                                 const KummerOptions& opts = {});

/// Same with a complex (modified) coordinate; |x| is the principal square
/// root of the bilinear x.x.
CoulombFactor coulomb_distortion(const CVec3& x, const Vec3& k, double a0,
                                 const KummerOptions& opts = {});

/// |k||x| - <k,x>, evaluated without cancellation near the forward direction.
double distortion_argument(const Vec3& x, const Vec3& k);
cplx distortion_argument(const CVec3& x, const Vec3& k);

/// log Gamma(z) by the Lanczos approximation (g = 7, 9 terms); any branch of
/// the imaginary part may be returned.
cplx log_gamma(cplx z);
cplx digamma(cplx z);

namespace detail {

CoulombFactor kummer_series(double eta, cplx w, int max_terms);

struct AsymptoticResult {
  CoulombFactor factor;
  double error_estimate;  ///< relative, from the smallest retained term
};
AsymptoticResult kummer_asymptotic(double eta, cplx w, int max_terms);

/// Taylor-series continuation of the Kummer ODE from the series region.
CoulombFactor kummer_continuation(double eta, cplx w, double start_radius, int max_terms);

}  // namespace detail

}  // namespace asymcoul

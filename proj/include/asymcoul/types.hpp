#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace asymcoul {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;

/// Stacked 3-vectors: a point X (or momentum Q) in Jacobi coordinates, 3(n-1) entries.
using Stacked = Eigen::VectorXd;

/// The 3-vectors of one cluster (m-1 Jacobi coordinates or momenta).
using Blocks = std::vector<Vec3>;

inline constexpr cplx kI{0.0, 1.0};

inline Vec3 block(const Stacked& v, int i) { return v.segment<3>(3 * i); }

inline void set_block(Stacked& v, int i, const Vec3& b) { v.segment<3>(3 * i) = b; }

/// Bilinear (not Hermitian) product; used for holomorphic extensions.
inline cplx dotu(const CVec3& a, const CVec3& b) { return a.cwiseProduct(b).sum(); }

inline cplx dotu(const Vec3& a, const CVec3& b) {
  return a.cast<cplx>().cwiseProduct(b).sum();
}

}  // namespace asymcoul

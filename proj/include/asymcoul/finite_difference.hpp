#pragma once

// Centred finite-difference stencils on functions of a stacked real vector.

#include <Eigen/Dense>
#include <vector>

#include "asymcoul/types.hpp"

namespace asymcoul::fd {

struct Derivatives {
  cplx value;
  Eigen::VectorXcd gradient;
  cplx laplacian;
};

/// 4th-order five-point stencils along each coordinate with its own step.
template <class F>
Derivatives laplacian_and_gradient(const F& f, const Eigen::VectorXd& x0,
                                   const std::vector<double>& steps) {
  Derivatives d;
  d.value = f(x0);
  d.gradient.resize(x0.size());
  d.laplacian = 0.0;
  Eigen::VectorXd x = x0;
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    const double h = steps[static_cast<std::size_t>(i)];
    x(i) = x0(i) + h;
    const cplx p1 = f(x);
    x(i) = x0(i) - h;
    const cplx m1 = f(x);
    x(i) = x0(i) + 2 * h;
    const cplx p2 = f(x);
    x(i) = x0(i) - 2 * h;
    const cplx m2 = f(x);
    x(i) = x0(i);
    d.gradient(i) = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
    d.laplacian += (16.0 * (p1 + m1) - (p2 + m2) - 30.0 * d.value) / (12.0 * h * h);
  }
  return d;
}

template <class F>
cplx central_first(const F& f, const Eigen::VectorXd& x0, Eigen::Index i, double h) {
  Eigen::VectorXd x = x0;
  x(i) = x0(i) + h;
  const cplx p = f(x);
  x(i) = x0(i) - h;
  return (p - f(x)) / (2.0 * h);
}

}  // namespace asymcoul::fd

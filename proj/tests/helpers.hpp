#pragma once

#include <random>

#include "asymcoul/types.hpp"

namespace testutil {

inline asymcoul::Vec3 random_vec(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g;
  return scale * asymcoul::Vec3(g(rng), g(rng), g(rng));
}

inline asymcoul::Stacked random_stacked(std::mt19937_64& rng, int blocks, double scale = 1.0) {
  asymcoul::Stacked s(3 * blocks);
  for (int b = 0; b < blocks; ++b) asymcoul::set_block(s, b, random_vec(rng, scale));
  return s;
}

inline double rel(asymcoul::cplx a, asymcoul::cplx b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

}  // namespace testutil

#pragma once

#include <cmath>
#include <cstddef>
#include <random>

#include "pima/numerics/tensor.hpp"

namespace pima {

using Rng = std::mt19937_64;

/// Trainable rows x cols tensor, uniform in +-1/sqrt(fan_in).
inline Tensor uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t = Tensor::zeros(rows, cols, true);
  for (double& v : t.mutable_data()) v = dist(rng);
  return t;
}

}  // namespace pima

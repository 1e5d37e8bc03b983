#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "pima/numerics/tensor.hpp"

namespace testing {

inline pima::Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -1.0,
                                  double hi = 1.0, bool requires_grad = true) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(rows * cols);
  for (double& x : v) x = dist(rng);
  return pima::Tensor::from(rows, cols, std::move(v), requires_grad);
}

inline std::vector<std::vector<double>> to_rows(const pima::Tensor& t) {
  std::vector<std::vector<double>> out(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) out[r][c] = t.at(r, c);
  }
  return out;
}

inline int uniform_int(int lo, int hi, std::mt19937_64& rng) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace testing

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pima/numerics/init.hpp"
#include "pima/numerics/tensor.hpp"

namespace pima::encoders {

/// Width of the shared text/image space.
inline constexpr std::size_t kProjectionWidth = 256;

/// Two affine layers with GELU between, mapping into the shared space.
struct ProjectionParams {
  Tensor hidden_weight, hidden_bias;  // h x d_in, 1 x h
  Tensor out_weight, out_bias;        // out x h, 1 x out

  std::size_t input_width() const { return hidden_weight.cols(); }
  std::size_t output_width() const { return out_weight.rows(); }

  static ProjectionParams init(std::size_t input_width, std::size_t hidden_width, Rng& rng,
                               std::size_t output_width = kProjectionWidth);
};

/// W2 gelu(W1 x + b1) + b2 applied to each row of `x`.
Tensor project(const Tensor& x, const ProjectionParams& params);

/// A precomputed pill visual feature vector.
struct PillFeatureRecord {
  std::string id;
  std::vector<double> features;
};

/// Validates width and finiteness; returns the features unchanged.
std::vector<double> ingest_pill_features(const PillFeatureRecord& record, std::size_t expected_width);

}  // namespace pima::encoders

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pima/numerics/init.hpp"
#include "pima/numerics/tensor.hpp"

namespace pima::encoders {

/// One single-head transformer block over token embeddings.
struct EncoderParams {
  Tensor token_embedding;  // |V| x d
  Tensor query, key, value, output;  // d x d, applied as X W^T
  Tensor ff_in_weight, ff_in_bias;    // h x d, 1 x h
  Tensor ff_out_weight, ff_out_bias;  // d x h, 1 x d
  Tensor norm1_gain, norm1_bias;      // 1 x d
  Tensor norm2_gain, norm2_bias;      // 1 x d

  std::size_t width() const { return token_embedding.cols(); }
  std::size_t vocab_size() const { return token_embedding.rows(); }

  static EncoderParams init(std::size_t vocab_size, std::size_t width, std::size_t ff_hidden, Rng& rng);
};

/// Fixed sinusoidal position codes, length x width.
Tensor positional_encoding(std::size_t length, std::size_t width);

/// softmax(Q K^T / sqrt(d)) V W_o^T over the rows of `x`.
Tensor self_attention(const Tensor& x, const EncoderParams& params);

/// Embeds tokens, adds positions, runs attention and feed-forward sublayers
/// (each residual + layer norm) and mean-pools into a 1 x d text embedding.
Tensor encode_text(std::span<const int> tokens, const EncoderParams& params);

/// encode_text() for each sequence, stacked into an N x d matrix.
Tensor encode_texts(std::span<const std::vector<int>> sequences, const EncoderParams& params);

}  // namespace pima::encoders

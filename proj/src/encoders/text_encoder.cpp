#include "pima/encoders/text_encoder.hpp"

#include <cmath>

#include "pima/error.hpp"
#include "pima/numerics/ops.hpp"

namespace pima::encoders {

EncoderParams EncoderParams::init(std::size_t vocab_size, std::size_t width, std::size_t ff_hidden, Rng& rng) {
  EncoderParams p;
  p.token_embedding = uniform_init(vocab_size, width, width, rng);
  p.query = uniform_init(width, width, width, rng);
  p.key = uniform_init(width, width, width, rng);
  p.value = uniform_init(width, width, width, rng);
  p.output = uniform_init(width, width, width, rng);
  p.ff_in_weight = uniform_init(ff_hidden, width, width, rng);
  p.ff_in_bias = uniform_init(1, ff_hidden, width, rng);
  p.ff_out_weight = uniform_init(width, ff_hidden, ff_hidden, rng);
  p.ff_out_bias = uniform_init(1, width, ff_hidden, rng);
  p.norm1_gain = Tensor::filled(1, width, 1.0, true);
  p.norm1_bias = Tensor::zeros(1, width, true);
  p.norm2_gain = Tensor::filled(1, width, 1.0, true);
  p.norm2_bias = Tensor::zeros(1, width, true);
  return p;
}

Tensor positional_encoding(std::size_t length, std::size_t width) {
  Tensor pe = Tensor::zeros(length, width);
  for (std::size_t pos = 0; pos < length; ++pos) {
    for (std::size_t i = 0; i < width; ++i) {
      const double exponent = static_cast<double>(2 * (i / 2)) / static_cast<double>(width);
      const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
      pe.at(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

Tensor self_attention(const Tensor& x, const EncoderParams& params) {
  using namespace ops;
  const Tensor q = matmul(x, transpose(params.query));
  const Tensor k = matmul(x, transpose(params.key));
  const Tensor v = matmul(x, transpose(params.value));
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(x.cols()));
  const Tensor weights = softmax_rows(scale(matmul(q, transpose(k)), inv_sqrt_d));
  return matmul(matmul(weights, v), transpose(params.output));
}

Tensor encode_text(std::span<const int> tokens, const EncoderParams& params) {
  using namespace ops;
  if (tokens.empty()) throw ShapeError("encode_text: empty token sequence");
  for (int id : tokens) {
    if (id < 0 || static_cast<std::size_t>(id) >= params.vocab_size()) {
      throw ShapeError("encode_text: token id " + std::to_string(id) + " out of range for vocabulary of " +
                       std::to_string(params.vocab_size()));
    }
  }
  const Tensor x = add(gather_rows(params.token_embedding, tokens), positional_encoding(tokens.size(), params.width()));
  const Tensor h1 = layer_norm_rows(add(x, self_attention(x, params)), params.norm1_gain, params.norm1_bias);
  const Tensor ff = add(matmul(gelu(add(matmul(h1, transpose(params.ff_in_weight)), params.ff_in_bias)),
                               transpose(params.ff_out_weight)),
                        params.ff_out_bias);
  const Tensor h2 = layer_norm_rows(add(h1, ff), params.norm2_gain, params.norm2_bias);
  return col_mean(h2);
}

Tensor encode_texts(std::span<const std::vector<int>> sequences, const EncoderParams& params) {
  std::vector<Tensor> rows;
  rows.reserve(sequences.size());
  for (const auto& seq : sequences) rows.push_back(encode_text(seq, params));
  return ops::vconcat(rows);
}

}  // namespace pima::encoders

#include "pima/encoders/projection.hpp"

#include <cmath>

#include "pima/error.hpp"
#include "pima/numerics/ops.hpp"

namespace pima::encoders {

ProjectionParams ProjectionParams::init(std::size_t input_width, std::size_t hidden_width, Rng& rng,
                                        std::size_t output_width) {
  ProjectionParams p;
  p.hidden_weight = uniform_init(hidden_width, input_width, input_width, rng);
  p.hidden_bias = uniform_init(1, hidden_width, input_width, rng);
  p.out_weight = uniform_init(output_width, hidden_width, hidden_width, rng);
  p.out_bias = uniform_init(1, output_width, hidden_width, rng);
  return p;
}

Tensor project(const Tensor& x, const ProjectionParams& params) {
  using namespace ops;
  if (x.cols() != params.input_width()) {
    throw ShapeError("project: input " + x.shape().str() + " for projection expecting width " +
                     std::to_string(params.input_width()));
  }
  const Tensor hidden = gelu(add(matmul(x, transpose(params.hidden_weight)), params.hidden_bias));
  return add(matmul(hidden, transpose(params.out_weight)), params.out_bias);
}

std::vector<double> ingest_pill_features(const PillFeatureRecord& record, std::size_t expected_width) {
  if (record.features.size() != expected_width) {
    throw ShapeError("pill " + record.id + ": feature width " + std::to_string(record.features.size()) +
                     ", expected " + std::to_string(expected_width));
  }
  for (std::size_t i = 0; i < record.features.size(); ++i) {
    if (!std::isfinite(record.features[i])) {
      throw NumericError("pill " + record.id + ": non-finite feature at index " + std::to_string(i));
    }
  }
  return record.features;
}

}  // namespace pima::encoders

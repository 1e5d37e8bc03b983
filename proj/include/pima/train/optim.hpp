#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pima/model/model.hpp"

namespace pima::train {

struct AdamWConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;

  void validate() const;
  bool operator==(const AdamWConfig&) const = default;
};

struct OptimizerState {
  AdamWConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;

  static OptimizerState for_parameters(std::span<const model::NamedTensor> params, const AdamWConfig& config);
  bool operator==(const OptimizerState&) const = default;
};

/// One bias-corrected AdamW update with decoupled weight decay. All gradients
/// are checked before any parameter changes.
void adamw_step(std::span<const model::NamedTensor> params, std::span<const std::vector<double>> grads,
                OptimizerState& state);

}  // namespace pima::train

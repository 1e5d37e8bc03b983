#include "pima/train/optim.hpp"

#include <cmath>

#include "pima/error.hpp"

namespace pima::train {

void AdamWConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("optimizer: lr must be finite and >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("optimizer: beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("optimizer: beta2 must be in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("optimizer: eps must be > 0");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    throw ConfigError("optimizer: weight_decay must be finite and >= 0");
  }
}

OptimizerState OptimizerState::for_parameters(std::span<const model::NamedTensor> params, const AdamWConfig& config) {
  config.validate();
  OptimizerState s;
  s.config = config;
  for (const auto& p : params) {
    s.first_moment.emplace_back(p.tensor.size(), 0.0);
    s.second_moment.emplace_back(p.tensor.size(), 0.0);
  }
  return s;
}

void adamw_step(std::span<const model::NamedTensor> params, std::span<const std::vector<double>> grads,
                OptimizerState& state) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw ShapeError("adamw_step: " + std::to_string(params.size()) + " parameters, " + std::to_string(grads.size()) +
                     " gradients, " + std::to_string(state.first_moment.size()) + " moment slots");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const std::size_t n = params[k].tensor.size();
    if (grads[k].size() != n || state.first_moment[k].size() != n || state.second_moment[k].size() != n) {
      throw ShapeError("adamw_step: size mismatch for parameter " + params[k].name);
    }
    for (double g : grads[k]) {
      if (!std::isfinite(g)) throw NumericError("adamw_step: non-finite gradient for parameter " + params[k].name);
    }
  }
  const AdamWConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor p = params[k].tensor;
    auto values = p.mutable_data();
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    const auto& g = grads[k];
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] -= c.lr * c.weight_decay * values[i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      values[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

}  // namespace pima::train

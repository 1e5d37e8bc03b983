#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "pima/numerics/tensor.hpp"

namespace pima {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_tensor = 0;
  std::size_t worst_index = 0;
  std::size_t coordinates_checked = 0;
};

/// Compares the tape gradient of a scalar function against central
/// differences: max over coordinates of |analytic - numeric| / max(1, |numeric|).
/// `h` must lie in [1e-7, 1e-3]. Throws NumericError naming the coordinate if
/// any evaluation is non-finite.
double finite_difference_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                               double h = 1e-5);

/// Same check over a set of leaf tensors perturbed in place. `loss` rebuilds
/// the forward pass from the current leaf values. When `max_coords_per_tensor`
/// is nonzero, at most that many coordinates per tensor are sampled (seeded).
GradCheckResult finite_difference_check(const std::function<Tensor()>& loss, std::vector<Tensor> leaves,
                                        double h = 1e-5, std::size_t max_coords_per_tensor = 0,
                                        std::uint64_t seed = 0);

}  // namespace pima

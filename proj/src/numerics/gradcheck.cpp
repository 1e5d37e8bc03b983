#include "pima/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "pima/error.hpp"

namespace pima {
namespace {

void check_step(double h) {
  if (!(h >= 1e-7 && h <= 1e-3)) throw ConfigError("finite_difference_check: step outside [1e-7, 1e-3]");
}

double eval_scalar(const std::function<Tensor()>& loss, std::size_t tensor, std::size_t index) {
  NoGradGuard guard;
  const Tensor y = loss();
  const double v = y.item();
  if (!std::isfinite(v)) {
    throw NumericError("finite_difference_check: non-finite value at tensor " + std::to_string(tensor) +
                       " coordinate " + std::to_string(index));
  }
  return v;
}

}  // namespace

double finite_difference_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h) {
  Tensor leaf = x.clone();
  leaf.set_requires_grad(true);
  return finite_difference_check([&] { return f(leaf); }, {leaf}, h).max_rel_error;
}

GradCheckResult finite_difference_check(const std::function<Tensor()>& loss, std::vector<Tensor> leaves,
                                        double h, std::size_t max_coords_per_tensor, std::uint64_t seed) {
  check_step(h);
  for (Tensor& leaf : leaves) {
    leaf.set_requires_grad(true);
    leaf.zero_grad();
  }
  const Tensor y = loss();
  if (!std::isfinite(y.item())) throw NumericError("finite_difference_check: non-finite loss");
  backward(y);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(leaves.size());
  for (const Tensor& leaf : leaves) analytic.emplace_back(leaf.grad().begin(), leaf.grad().end());

  std::mt19937_64 rng(seed);
  GradCheckResult result;
  for (std::size_t t = 0; t < leaves.size(); ++t) {
    Tensor& leaf = leaves[t];
    std::vector<std::size_t> coords(leaf.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (max_coords_per_tensor != 0 && coords.size() > max_coords_per_tensor) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(max_coords_per_tensor);
      std::sort(coords.begin(), coords.end());
    }
    auto values = leaf.mutable_data();
    for (std::size_t i : coords) {
      const double original = values[i];
      values[i] = original + h;
      const double up = eval_scalar(loss, t, i);
      values[i] = original - h;
      const double down = eval_scalar(loss, t, i);
      values[i] = original;
      const double numeric = (up - down) / (2.0 * h);
      const double err = std::abs(analytic[t][i] - numeric) / std::max(1.0, std::abs(numeric));
      if (!std::isfinite(err)) {
        throw NumericError("finite_difference_check: non-finite gradient at tensor " + std::to_string(t) +
                           " coordinate " + std::to_string(i));
      }
      ++result.coordinates_checked;
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_tensor = t;
        result.worst_index = i;
      }
    }
  }
  return result;
}

}  // namespace pima

#pragma once

// Differentiable tensor ops. Every op validates its operand shapes (throwing
// ShapeError naming the op and both shapes) and rejects non-finite inputs
// (NumericError naming the op). Outputs record a tape entry whenever an input
// requires grad and grad mode is on.

#include <limits>
#include <span>
#include <vector>

#include "pima/numerics/tensor.hpp"

namespace pima::ops {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

/// a + b. `b` may be the same shape as `a` or a 1 x cols row broadcast over rows.
Tensor add(const Tensor& a, const Tensor& b);
/// a - b, same broadcasting as add().
Tensor sub(const Tensor& a, const Tensor& b);
/// Elementwise product, equal shapes.
Tensor mul(const Tensor& a, const Tensor& b);
/// Elementwise quotient, equal shapes.
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);
/// Row i of `x` times g(i, 0); g is rows x 1.
Tensor scale_rows(const Tensor& x, const Tensor& g);

/// [a | b]: per-row concatenation, equal row counts.
Tensor hconcat(const Tensor& a, const Tensor& b);
/// Stacks the rows of equal-width tensors.
Tensor vconcat(std::span<const Tensor> parts);
/// Rows `ids` of `table`, in order.
Tensor gather_rows(const Tensor& table, std::span<const int> ids);

/// Mean of each row: rows x 1.
Tensor row_mean(const Tensor& a);
/// Mean over rows: 1 x cols.
Tensor col_mean(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
/// x * Phi(x) with the exact erf-based normal CDF.
Tensor gelu(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
/// Euclidean norm of each row: rows x 1. Gradient at the zero row is zero.
Tensor l2norm_rows(const Tensor& a);
Tensor square(const Tensor& a);
/// max(0, x).
Tensor hinge(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi = std::numeric_limits<double>::infinity());
/// Natural log; inputs must be > 0.
Tensor log(const Tensor& a);

/// Per-row layer normalization: gain * (x - mean) / sqrt(var + eps) + bias,
/// gain and bias 1 x cols.
Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

}  // namespace pima::ops

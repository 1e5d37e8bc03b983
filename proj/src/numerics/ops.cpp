#include "pima/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pima/error.hpp"
#include "pima/numerics/kernels.hpp"

namespace pima::ops {
namespace {

using detail::TensorImpl;

void check_finite(const char* op, const Tensor& t) {
  for (double v : t.data()) {
    if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite input");
  }
}

[[noreturn]] void shape_mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
}

bool tracks(const std::shared_ptr<TensorImpl>& t) { return t->requires_grad; }

// Builds the op output and, when needed, its tape entry.
Tensor make_output(const char* op, Shape shape, std::vector<double> values,
                   std::initializer_list<Tensor> inputs, detail::BackwardFn backward_fn) {
  Tensor out = Tensor::from(shape.rows, shape.cols, std::move(values));
  if (!grad_mode_enabled()) return out;
  bool any = false;
  for (const Tensor& in : inputs) any = any || in.requires_grad();
  if (!any) return out;
  auto entry = std::make_shared<detail::TapeEntry>();
  entry->op = op;
  for (const Tensor& in : inputs) entry->inputs.push_back(in.impl());
  entry->backward = std::move(backward_fn);
  out.impl()->creator = std::move(entry);
  out.impl()->requires_grad = true;
  return out;
}

template <typename F>
Tensor unary(const char* op, const Tensor& a, F&& forward, double (*derivative)(double x, double y)) {
  check_finite(op, a);
  std::vector<double> values(a.data().begin(), a.data().end());
  for (double& v : values) v = forward(v);
  auto in = a.impl();
  return make_output(op, a.shape(), std::move(values), {a}, [in, derivative](TensorImpl& out) {
    if (!tracks(in)) return;
    auto& g = in->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i] * derivative(in->data[i], out.data[i]);
  });
}

bool row_broadcast(const Tensor& a, const Tensor& b) {
  return b.rows() == 1 && a.rows() > 1 && b.cols() == a.cols();
}

Tensor add_sub(const char* op, const Tensor& a, const Tensor& b, double sign) {
  check_finite(op, a);
  check_finite(op, b);
  const bool broadcast = row_broadcast(a, b);
  if (!broadcast && a.shape() != b.shape()) shape_mismatch(op, a, b);
  const std::size_t cols = a.cols();
  std::vector<double> values(a.data().begin(), a.data().end());
  const auto bd = b.data();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += sign * bd[broadcast ? i % cols : i];
  auto ia = a.impl();
  auto ib = b.impl();
  return make_output(op, a.shape(), std::move(values), {a, b}, [ia, ib, broadcast, cols, sign](TensorImpl& out) {
    if (tracks(ia)) {
      auto& g = ia->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i];
    }
    if (tracks(ib)) {
      auto& g = ib->ensure_grad();
      for (std::size_t i = 0; i < out.grad.size(); ++i) g[broadcast ? i % cols : i] += sign * out.grad[i];
    }
  });
}

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_finite("matmul", a);
  check_finite("matmul", b);
  if (a.cols() != b.rows()) shape_mismatch("matmul", a, b);
  std::vector<double> values(a.rows() * b.cols());
  kernels::gemm({a.data(), a.rows(), a.cols()}, {b.data(), b.rows(), b.cols()}, values, false);
  auto ia = a.impl();
  auto ib = b.impl();
  return make_output("matmul", {a.rows(), b.cols()}, std::move(values), {a, b}, [ia, ib](TensorImpl& out) {
    const kernels::MatrixView g{out.grad, out.shape.rows, out.shape.cols};
    if (tracks(ia)) {
      // dA += G * B^T
      kernels::gemm(g, {ib->data, ib->shape.rows, ib->shape.cols, true}, ia->ensure_grad(), true);
    }
    if (tracks(ib)) {
      // dB += A^T * G
      kernels::gemm({ia->data, ia->shape.rows, ia->shape.cols, true}, g, ib->ensure_grad(), true);
    }
  });
}

Tensor transpose(const Tensor& a) {
  check_finite("transpose", a);
  const std::size_t r = a.rows();
  const std::size_t c = a.cols();
  std::vector<double> values(r * c);
  const auto ad = a.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) values[j * r + i] = ad[i * c + j];
  auto ia = a.impl();
  return make_output("transpose", {c, r}, std::move(values), {a}, [ia, r, c](TensorImpl& out) {
    if (!tracks(ia)) return;
    auto& g = ia->ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += out.grad[j * r + i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) { return add_sub("add", a, b, 1.0); }

Tensor sub(const Tensor& a, const Tensor& b) { return add_sub("sub", a, b, -1.0); }

Tensor mul(const Tensor& a, const Tensor& b) {
  check_finite("mul", a);
  check_finite("mul", b);
  if (a.shape() != b.shape()) shape_mismatch("mul", a, b);
  std::vector<double> values(a.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = a.data()[i] * b.data()[i];
  auto ia = a.impl();
  auto ib = b.impl();
  return make_output("mul", a.shape(), std::move(values), {a, b}, [ia, ib](TensorImpl& out) {
    if (tracks(ia)) {
      auto& g = ia->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i] * ib->data[i];
    }
    if (tracks(ib)) {
      auto& g = ib->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i] * ia->data[i];
    }
  });
}

Tensor div(const Tensor& a, const Tensor& b) {
  check_finite("div", a);
  check_finite("div", b);
  if (a.shape() != b.shape()) shape_mismatch("div", a, b);
  std::vector<double> values(a.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (b.data()[i] == 0.0) throw NumericError("div: division by zero");
    values[i] = a.data()[i] / b.data()[i];
  }
  auto ia = a.impl();
  auto ib = b.impl();
  return make_output("div", a.shape(), std::move(values), {a, b}, [ia, ib](TensorImpl& out) {
    if (tracks(ia)) {
      auto& g = ia->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i] / ib->data[i];
    }
    if (tracks(ib)) {
      auto& g = ib->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= out.grad[i] * out.data[i] / ib->data[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  check_finite("scale", a);
  std::vector<double> values(a.data().begin(), a.data().end());
  for (double& v : values) v *= factor;
  auto ia = a.impl();
  return make_output("scale", a.shape(), std::move(values), {a}, [ia, factor](TensorImpl& out) {
    if (!tracks(ia)) return;
    auto& g = ia->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * out.grad[i];
  });
}

Tensor add_scalar(const Tensor& a, double value) {
  check_finite("add_scalar", a);
  std::vector<double> values(a.data().begin(), a.data().end());
  for (double& v : values) v += value;
  auto ia = a.impl();
  return make_output("add_scalar", a.shape(), std::move(values), {a}, [ia](TensorImpl& out) {
    if (!tracks(ia)) return;
    auto& g = ia->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i];
  });
}

Tensor scale_rows(const Tensor& x, const Tensor& g) {
  check_finite("scale_rows", x);
  check_finite("scale_rows", g);
  if (g.cols() != 1 || g.rows() != x.rows()) shape_mismatch("scale_rows", x, g);
  const std::size_t cols = x.cols();
  std::vector<double> values(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] *= g.data()[i / cols];
  auto ix = x.impl();
  auto ig = g.impl();
  return make_output("scale_rows", x.shape(), std::move(values), {x, g}, [ix, ig, cols](TensorImpl& out) {
    if (tracks(ix)) {
      auto& d = ix->ensure_grad();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += out.grad[i] * ig->data[i / cols];
    }
    if (tracks(ig)) {
      auto& d = ig->ensure_grad();
      for (std::size_t i = 0; i < out.grad.size(); ++i) d[i / cols] += out.grad[i] * ix->data[i];
    }
  });
}

Tensor hconcat(const Tensor& a, const Tensor& b) {
  check_finite("hconcat", a);
  check_finite("hconcat", b);
  if (a.rows() != b.rows()) shape_mismatch("hconcat", a, b);
  const std::size_t rows = a.rows();
  const std::size_t ca = a.cols();
  const std::size_t cb = b.cols();
  std::vector<double> values;
  values.reserve(rows * (ca + cb));
  for (std::size_t i = 0; i < rows; ++i) {
    values.insert(values.end(), a.data().begin() + i * ca, a.data().begin() + (i + 1) * ca);
    values.insert(values.end(), b.data().begin() + i * cb, b.data().begin() + (i + 1) * cb);
  }
  auto ia = a.impl();
  auto ib = b.impl();
  return make_output("hconcat", {rows, ca + cb}, std::move(values), {a, b}, [ia, ib, rows, ca, cb](TensorImpl& out) {
    const std::size_t w = ca + cb;
    if (tracks(ia)) {
      auto& g = ia->ensure_grad();
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < ca; ++j) g[i * ca + j] += out.grad[i * w + j];
    }
    if (tracks(ib)) {
      auto& g = ib->ensure_grad();
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cb; ++j) g[i * cb + j] += out.grad[i * w + ca + j];
    }
  });
}

Tensor vconcat(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("vconcat: no inputs");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const Tensor& p : parts) {
    check_finite("vconcat", p);
    if (p.cols() != cols) shape_mismatch("vconcat", parts.front(), p);
    rows += p.rows();
  }
  std::vector<double> values;
  values.reserve(rows * cols);
  for (const Tensor& p : parts) values.insert(values.end(), p.data().begin(), p.data().end());

  Tensor out = Tensor::from(rows, cols, std::move(values));
  const bool any = grad_mode_enabled() &&
                   std::any_of(parts.begin(), parts.end(), [](const Tensor& p) { return p.requires_grad(); });
  if (!any) return out;
  auto entry = std::make_shared<detail::TapeEntry>();
  entry->op = "vconcat";
  for (const Tensor& p : parts) entry->inputs.push_back(p.impl());
  // The entry owns its inputs; the closure only needs their order.
  std::weak_ptr<detail::TapeEntry> weak = entry;
  entry->backward = [weak](TensorImpl& o) {
    auto self = weak.lock();
    std::size_t offset = 0;
    for (const auto& in : self->inputs) {
      const std::size_t n = in->data.size();
      if (tracks(in)) {
        auto& g = in->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) g[i] += o.grad[offset + i];
      }
      offset += n;
    }
  };
  out.impl()->creator = std::move(entry);
  out.impl()->requires_grad = true;
  return out;
}

Tensor gather_rows(const Tensor& table, std::span<const int> ids) {
  check_finite("gather_rows", table);
  if (ids.empty()) throw ShapeError("gather_rows: empty id list");
  const std::size_t cols = table.cols();
  std::vector<double> values;
  values.reserve(ids.size() * cols);
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= table.rows()) {
      throw ShapeError("gather_rows: id " + std::to_string(id) + " out of range for table " +
                       table.shape().str());
    }
    const auto begin = table.data().begin() + static_cast<std::ptrdiff_t>(id * cols);
    values.insert(values.end(), begin, begin + static_cast<std::ptrdiff_t>(cols));
  }
  auto it = table.impl();
  std::vector<int> rows_taken(ids.begin(), ids.end());
  return make_output("gather_rows", {ids.size(), cols}, std::move(values), {table},
                     [it, rows_taken = std::move(rows_taken), cols](TensorImpl& out) {
                       if (!tracks(it)) return;
                       auto& g = it->ensure_grad();
                       for (std::size_t r = 0; r < rows_taken.size(); ++r) {
                         const std::size_t base = static_cast<std::size_t>(rows_taken[r]) * cols;
                         for (std::size_t j = 0; j < cols; ++j) g[base + j] += out.grad[r * cols + j];
                       }
                     });
}

Tensor row_mean(const Tensor& a) {
  check_finite("row_mean", a);
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  std::vector<double> values(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) values[i] += a.data()[i * cols + j];
    values[i] /= static_cast<double>(cols);
  }
  auto ia = a.impl();
  return make_output("row_mean", {rows, 1}, std::move(values), {a}, [ia, cols](TensorImpl& out) {
    if (!tracks(ia)) return;
    auto& g = ia->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i / cols] / static_cast<double>(cols);
  });
}

Tensor col_mean(const Tensor& a) {
  check_finite("col_mean", a);
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  std::vector<double> values(cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) values[j] += a.data()[i * cols + j];
  for (double& v : values) v /= static_cast<double>(rows);
  auto ia = a.impl();
  return make_output("col_mean", {1, cols}, std::move(values), {a}, [ia, rows, cols](TensorImpl& out) {
    if (!tracks(ia)) return;
    auto& g = ia->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i % cols] / static_cast<double>(rows);
  });
}

Tensor sum(const Tensor& a) {
  check_finite("sum", a);
  double total = 0.0;
  for (double v : a.data()) total += v;
  auto ia = a.impl();
  return make_output("sum", {1, 1}, {total}, {a}, [ia](TensorImpl& out) {
    if (!tracks(ia)) return;
    for (double& g : ia->ensure_grad()) g += out.grad[0];
  });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

Tensor sigmoid(const Tensor& a) {
  return unary("sigmoid", a, sigmoid_value, [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& a) {
  return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor hinge(const Tensor& a) {
  return unary("hinge", a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor gelu(const Tensor& a) {
  return unary(
      "gelu", a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); },
      [](double x, double) {
        return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
      });
}

Tensor tanh(const Tensor& a) {
  return unary("tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor square(const Tensor& a) {
  return unary("square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor log(const Tensor& a) {
  for (double v : a.data()) {
    if (!(v > 0.0)) throw NumericError("log: input outside (0, inf)");
  }
  return unary("log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (!(lo <= hi)) throw NumericError("clamp: lo > hi");
  check_finite("clamp", a);
  std::vector<double> values(a.data().begin(), a.data().end());
  for (double& v : values) v = std::clamp(v, lo, hi);
  auto ia = a.impl();
  return make_output("clamp", a.shape(), std::move(values), {a}, [ia, lo, hi](TensorImpl& out) {
    if (!tracks(ia)) return;
    auto& g = ia->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = ia->data[i];
      if (x >= lo && x <= hi) g[i] += out.grad[i];
    }
  });
}

Tensor softmax_rows(const Tensor& a) {
  check_finite("softmax_rows", a);
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  std::vector<double> values(a.data().begin(), a.data().end());
  for (std::size_t i = 0; i < rows; ++i) {
    double* row = values.data() + i * cols;
    const double hi = *std::max_element(row, row + cols);
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) total += (row[j] = std::exp(row[j] - hi));
    for (std::size_t j = 0; j < cols; ++j) row[j] /= total;
  }
  auto ia = a.impl();
  return make_output("softmax_rows", a.shape(), std::move(values), {a}, [ia, rows, cols](TensorImpl& out) {
    if (!tracks(ia)) return;
    auto& g = ia->ensure_grad();
    for (std::size_t i = 0; i < rows; ++i) {
      const double* s = out.data.data() + i * cols;
      const double* go = out.grad.data() + i * cols;
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += go[j] * s[j];
      for (std::size_t j = 0; j < cols; ++j) g[i * cols + j] += s[j] * (go[j] - dot);
    }
  });
}

Tensor l2norm_rows(const Tensor& a) {
  check_finite("l2norm_rows", a);
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  std::vector<double> values(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) values[i] += a.data()[i * cols + j] * a.data()[i * cols + j];
    values[i] = std::sqrt(values[i]);
  }
  auto ia = a.impl();
  return make_output("l2norm_rows", {rows, 1}, std::move(values), {a}, [ia, cols](TensorImpl& out) {
    if (!tracks(ia)) return;
    auto& g = ia->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double norm = out.data[i / cols];
      if (norm > 0.0) g[i] += out.grad[i / cols] * ia->data[i] / norm;
    }
  });
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  check_finite("layer_norm_rows", x);
  check_finite("layer_norm_rows", gain);
  check_finite("layer_norm_rows", bias);
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  if (gain.rows() != 1 || gain.cols() != cols) shape_mismatch("layer_norm_rows", x, gain);
  if (bias.rows() != 1 || bias.cols() != cols) shape_mismatch("layer_norm_rows", x, bias);

  std::vector<double> xhat(rows * cols);
  std::vector<double> inv_std(rows);
  std::vector<double> values(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* xr = x.data().data() + i * cols;
    double mu = 0.0;
    for (std::size_t j = 0; j < cols; ++j) mu += xr[j];
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t j = 0; j < cols; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<double>(cols);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < cols; ++j) {
      xhat[i * cols + j] = (xr[j] - mu) * inv_std[i];
      values[i * cols + j] = gain.data()[j] * xhat[i * cols + j] + bias.data()[j];
    }
  }
  auto ix = x.impl();
  auto ig = gain.impl();
  auto ib = bias.impl();
  return make_output(
      "layer_norm_rows", x.shape(), std::move(values), {x, gain, bias},
      [ix, ig, ib, rows, cols, xhat = std::move(xhat), inv_std = std::move(inv_std)](TensorImpl& out) {
        if (tracks(ig)) {
          auto& g = ig->ensure_grad();
          for (std::size_t i = 0; i < rows * cols; ++i) g[i % cols] += out.grad[i] * xhat[i];
        }
        if (tracks(ib)) {
          auto& g = ib->ensure_grad();
          for (std::size_t i = 0; i < rows * cols; ++i) g[i % cols] += out.grad[i];
        }
        if (tracks(ix)) {
          auto& g = ix->ensure_grad();
          const double n = static_cast<double>(cols);
          for (std::size_t i = 0; i < rows; ++i) {
            double mean_d = 0.0;
            double mean_dx = 0.0;
            for (std::size_t j = 0; j < cols; ++j) {
              const double d = out.grad[i * cols + j] * ig->data[j];
              mean_d += d;
              mean_dx += d * xhat[i * cols + j];
            }
            mean_d /= n;
            mean_dx /= n;
            for (std::size_t j = 0; j < cols; ++j) {
              const double d = out.grad[i * cols + j] * ig->data[j];
              g[i * cols + j] += inv_std[i] * (d - mean_d - xhat[i * cols + j] * mean_dx);
            }
          }
        }
      });
}

}  // namespace pima::ops

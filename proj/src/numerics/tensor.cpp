#include "pima/numerics/tensor.hpp"

#include <algorithm>
#include <unordered_set>

#include "pima/error.hpp"

namespace pima {
namespace {

thread_local bool t_grad_enabled = true;

std::shared_ptr<detail::TensorImpl> make_impl(Shape shape, std::vector<double> data, bool rg) {
  if (shape.rows == 0 || shape.cols == 0) {
    throw ShapeError("tensor: dimensions must be positive, got " + shape.str());
  }
  if (data.size() != shape.size()) {
    throw ShapeError("tensor: " + std::to_string(data.size()) + " values for shape " + shape.str());
  }
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = shape;
  impl->data = std::move(data);
  impl->requires_grad = rg;
  return impl;
}

}  // namespace

std::string Shape::str() const { return "[" + std::to_string(rows) + " x " + std::to_string(cols) + "]"; }

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
  return filled(rows, cols, 0.0, requires_grad);
}

Tensor Tensor::filled(std::size_t rows, std::size_t cols, double value, bool requires_grad) {
  return Tensor(make_impl({rows, cols}, std::vector<double>(rows * cols, value), requires_grad));
}

Tensor Tensor::from(std::size_t rows, std::size_t cols, std::vector<double> values, bool requires_grad) {
  return Tensor(make_impl({rows, cols}, std::move(values), requires_grad));
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows, bool requires_grad) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("tensor: ragged row list");
    values.insert(values.end(), row.begin(), row.end());
  }
  return from(r, c, std::move(values), requires_grad);
}

Tensor Tensor::row(std::vector<double> values, bool requires_grad) {
  const std::size_t n = values.size();
  return from(1, n, std::move(values), requires_grad);
}

Tensor Tensor::column(std::vector<double> values, bool requires_grad) {
  const std::size_t n = values.size();
  return from(n, 1, std::move(values), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from(1, 1, {value}, requires_grad); }

Tensor Tensor::identity(std::size_t n) {
  Tensor t = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

const Shape& Tensor::shape() const {
  if (!impl_) throw Error("tensor: use of undefined tensor");
  return impl_->shape;
}

std::span<const double> Tensor::data() const {
  shape();
  return impl_->data;
}

std::span<double> Tensor::mutable_data() {
  shape();
  return impl_->data;
}

double Tensor::at(std::size_t r, std::size_t c) const {
  const Shape& s = shape();
  if (r >= s.rows || c >= s.cols) throw ShapeError("tensor: index out of range for " + s.str());
  return impl_->data[r * s.cols + c];
}

double& Tensor::at(std::size_t r, std::size_t c) {
  const Shape& s = shape();
  if (r >= s.rows || c >= s.cols) throw ShapeError("tensor: index out of range for " + s.str());
  return impl_->data[r * s.cols + c];
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("tensor: item() on non-scalar " + shape().str());
  return impl_->data[0];
}

std::span<const double> Tensor::grad() const {
  shape();
  return impl_->ensure_grad();
}

std::span<double> Tensor::mutable_grad() {
  shape();
  return impl_->ensure_grad();
}

void Tensor::zero_grad() {
  shape();
  impl_->grad.assign(impl_->data.size(), 0.0);
}

bool Tensor::requires_grad() const { return shape(), impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool value) {
  shape();
  impl_->requires_grad = value;
  return *this;
}

bool Tensor::is_leaf() const { return shape(), impl_->creator == nullptr; }

Tensor Tensor::clone() const { return from(rows(), cols(), std::vector<double>(impl_->data)); }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }

NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

bool grad_mode_enabled() { return t_grad_enabled; }

ComputationTape ComputationTape::record(const Tensor& output) {
  ComputationTape tape;
  tape.output_ = output.impl();
  if (!tape.output_) throw Error("backward: undefined tensor");

  // Iterative post-order DFS over op outputs.
  std::unordered_set<const detail::TensorImpl*> visited;
  std::vector<std::pair<std::shared_ptr<detail::TensorImpl>, std::size_t>> stack;
  if (tape.output_->creator) {
    stack.emplace_back(tape.output_, 0);
    visited.insert(tape.output_.get());
  }
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    const auto& inputs = node->creator->inputs;
    if (next < inputs.size()) {
      const auto& child = inputs[next++];
      if (child->creator && visited.insert(child.get()).second) stack.emplace_back(child, 0);
    } else {
      tape.order_.push_back(node);
      stack.pop_back();
    }
  }
  return tape;
}

std::vector<std::string> ComputationTape::ops() const {
  std::vector<std::string> names;
  names.reserve(order_.size());
  for (const auto& node : order_) names.emplace_back(node->creator->op);
  return names;
}

void ComputationTape::backward() {
  if (!output_) throw Error("backward: undefined tensor");
  if (output_->shape.size() != 1) {
    throw ShapeError("backward: output must be a scalar, got " + output_->shape.str());
  }
  if (order_.empty()) throw Error("backward: output was not produced by any recorded op");
  for (const auto& node : order_) node->grad.assign(node->data.size(), 0.0);
  output_->grad[0] = 1.0;
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    detail::TensorImpl& node = **it;
    node.creator->backward(node);
  }
}

void backward(const Tensor& loss) { ComputationTape::record(loss).backward(); }

}  // namespace pima

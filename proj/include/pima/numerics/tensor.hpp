#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pima {

/// Rows x cols. Vectors are 1 x n rows, scalars are 1 x 1.
struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

namespace detail {

struct TensorImpl;

// Local backward rule: reads `out.grad` and accumulates into the inputs.
using BackwardFn = std::function<void(TensorImpl& out)>;

struct TapeEntry {
  const char* op = "";
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  BackwardFn backward;
};

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first needed
  bool requires_grad = false;
  std::shared_ptr<TapeEntry> creator;  // null for leaves

  std::vector<double>& ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

/// Dense row-major float64 matrix with an optional gradient accumulator.
///
/// Copies share storage (handle semantics), like most autograd tensors; use
/// clone() for an independent copy. Ops that consume a tensor with
/// requires_grad() record a tape entry on their output.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
  static Tensor filled(std::size_t rows, std::size_t cols, double value, bool requires_grad = false);
  static Tensor from(std::size_t rows, std::size_t cols, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows,
                          bool requires_grad = false);
  static Tensor row(std::vector<double> values, bool requires_grad = false);
  static Tensor column(std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor identity(std::size_t n);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rows() const { return shape().rows; }
  std::size_t cols() const { return shape().cols; }
  std::size_t size() const { return shape().size(); }

  std::span<const double> data() const;
  std::span<double> mutable_data();
  double at(std::size_t r, std::size_t c) const;
  double& at(std::size_t r, std::size_t c);
  /// Value of a 1 x 1 tensor.
  double item() const;

  /// Gradient accumulator; all zeros if nothing has been accumulated yet.
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  bool requires_grad() const;
  Tensor& set_requires_grad(bool value);
  /// True for tensors not produced by a recorded op.
  bool is_leaf() const;

  /// Independent copy of the values with no gradient history.
  Tensor clone() const;
  /// Same values, detached from the tape; shares no storage.
  Tensor detach() const { return clone(); }

  const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

/// Disables tape recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

/// Ordered record of the ops that produced a tensor, in topological order
/// (inputs before outputs).
class ComputationTape {
 public:
  static ComputationTape record(const Tensor& output);

  std::size_t size() const { return order_.size(); }
  bool empty() const { return order_.empty(); }
  std::vector<std::string> ops() const;

  /// Seeds d(output)/d(output) = 1 and replays every entry once in reverse.
  void backward();

 private:
  std::shared_ptr<detail::TensorImpl> output_;
  std::vector<std::shared_ptr<detail::TensorImpl>> order_;  // non-leaf tensors
};

/// Backpropagates from a scalar. Leaf gradients accumulate across calls.
void backward(const Tensor& loss);

}  // namespace pima

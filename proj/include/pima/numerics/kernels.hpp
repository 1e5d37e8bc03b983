#pragma once

// Dense matrix kernels used by the tensor ops.
//
// Every kernel comes in two flavours: a serial reference and an OpenMP
// version that splits the output rows across threads. Each output element is
// reduced in the same order in both, so the two are bit-identical and the
// serial path serves as the test oracle for the parallel one.

#include <cstddef>
#include <span>

namespace pima::kernels {

/// Read-only row-major matrix view, optionally read as its transpose.
struct MatrixView {
  std::span<const double> data;
  std::size_t rows = 0;  // stored rows
  std::size_t cols = 0;  // stored cols
  bool transposed = false;

  std::size_t logical_rows() const { return transposed ? cols : rows; }
  std::size_t logical_cols() const { return transposed ? rows : cols; }
  double at(std::size_t r, std::size_t c) const {
    return transposed ? data[c * cols + r] : data[r * cols + c];
  }
};

/// C (m x n) = op(A) * op(B), or C += ... when `accumulate`.
void gemm_serial(const MatrixView& a, const MatrixView& b, std::span<double> c, bool accumulate);
void gemm_parallel(const MatrixView& a, const MatrixView& b, std::span<double> c, bool accumulate);

/// Dispatches to the parallel kernel when the product is large enough and
/// OpenMP is available, otherwise to the serial one.
void gemm(const MatrixView& a, const MatrixView& b, std::span<double> c, bool accumulate);

/// Work (m*n*k) above which gemm() goes parallel.
inline constexpr std::size_t kParallelThreshold = std::size_t{1} << 16;

/// True when the library was built with OpenMP.
bool parallel_enabled();

/// Number of threads an OpenMP region would use (1 without OpenMP).
int max_threads();

}  // namespace pima::kernels

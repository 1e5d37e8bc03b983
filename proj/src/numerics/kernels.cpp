#include "pima/numerics/kernels.hpp"

#include <algorithm>
#include <string>

#include "pima/error.hpp"

#ifdef PIMA_HAVE_OPENMP
#include <omp.h>
#endif

namespace pima::kernels {
namespace {

void check_dims(const MatrixView& a, const MatrixView& b, std::span<double> c) {
  if (a.logical_cols() != b.logical_rows() || c.size() != a.logical_rows() * b.logical_cols()) {
    throw ShapeError("gemm: inner dimensions " + std::to_string(a.logical_cols()) + " vs " +
                     std::to_string(b.logical_rows()));
  }
}

// One output row. Shared by both kernels so their reduction order matches.
inline void gemm_row(const MatrixView& a, const MatrixView& b, double* out, std::size_t i,
                     bool accumulate) {
  const std::size_t n = b.logical_cols();
  const std::size_t k = a.logical_cols();
  if (!accumulate) std::fill(out, out + n, 0.0);
  if (!b.transposed) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a.at(i, p);
      if (aip == 0.0) continue;
      const double* brow = b.data.data() + p * b.cols;
      for (std::size_t j = 0; j < n; ++j) out[j] += aip * brow[j];
    }
  } else {
    // op(B)(p, j) = B(j, p): dot products against stored rows of B.
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b.data.data() + j * b.cols;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a.at(i, p) * brow[p];
      out[j] += acc;
    }
  }
}

}  // namespace

void gemm_serial(const MatrixView& a, const MatrixView& b, std::span<double> c, bool accumulate) {
  check_dims(a, b, c);
  const std::size_t m = a.logical_rows();
  const std::size_t n = b.logical_cols();
  for (std::size_t i = 0; i < m; ++i) gemm_row(a, b, c.data() + i * n, i, accumulate);
}

void gemm_parallel(const MatrixView& a, const MatrixView& b, std::span<double> c, bool accumulate) {
  check_dims(a, b, c);
  const auto m = static_cast<std::ptrdiff_t>(a.logical_rows());
  const std::size_t n = b.logical_cols();
  double* out = c.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    gemm_row(a, b, out + static_cast<std::size_t>(i) * n, static_cast<std::size_t>(i), accumulate);
  }
}

void gemm(const MatrixView& a, const MatrixView& b, std::span<double> c, bool accumulate) {
  const std::size_t work = a.logical_rows() * a.logical_cols() * b.logical_cols();
  if (parallel_enabled() && max_threads() > 1 && work >= kParallelThreshold &&
      a.logical_rows() > 1) {
    gemm_parallel(a, b, c, accumulate);
  } else {
    gemm_serial(a, b, c, accumulate);
  }
}

bool parallel_enabled() {
#ifdef PIMA_HAVE_OPENMP
  return true;
#else
  return false;
#endif
}

int max_threads() {
#ifdef PIMA_HAVE_OPENMP
  return omp_in_parallel() ? 1 : omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace pima::kernels

#include "mog/kernels.hpp"

#include <cstring>

namespace mog::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double* y, double alpha, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemm(std::size_t m, std::size_t k, std::size_t n,
          const double* a, const double* b, double* c) {
  std::memset(c, 0, m * n * sizeof(double));
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t l = 0; l < k; ++l) {
      const double av = arow[l];
      if (av == 0.0) continue;
      const double* brow = b + l * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void spmm(std::size_t rows, const std::size_t* row_ptr, const std::int32_t* col,
          const double* val, const double* x, std::size_t d, double* y) {
  for (std::size_t i = 0; i < rows; ++i) {
    double* yrow = y + i * d;
    std::memset(yrow, 0, d * sizeof(double));
    for (std::size_t e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
      const double v = val[e];
      const double* xrow = x + static_cast<std::size_t>(col[e]) * d;
      for (std::size_t j = 0; j < d; ++j) yrow[j] += v * xrow[j];
    }
  }
}

void sddmm(std::size_t rows, const std::size_t* row_ptr, const std::int32_t* col,
           const double* a, const double* b, std::size_t d, double* out) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* arow = a + i * d;
    for (std::size_t e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
      out[e] = dot(arow, b + static_cast<std::size_t>(col[e]) * d, d);
    }
  }
}

} // namespace mog::kernels::scalar

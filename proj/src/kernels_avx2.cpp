// AVX2+FMA variants. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after the dispatcher has checked CPU support.
#include "mog/kernels.hpp"

#if MOG_HAVE_AVX2_LANE

#include <cstring>
#include <immintrin.h>

namespace mog::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

} // namespace

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double* y, double alpha, const double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
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
      axpy(crow, av, b + l * n, n);
    }
  }
}

void spmm(std::size_t rows, const std::size_t* row_ptr, const std::int32_t* col,
          const double* val, const double* x, std::size_t d, double* y) {
  for (std::size_t i = 0; i < rows; ++i) {
    double* yrow = y + i * d;
    std::memset(yrow, 0, d * sizeof(double));
    for (std::size_t e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
      axpy(yrow, val[e], x + static_cast<std::size_t>(col[e]) * d, d);
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

} // namespace mog::kernels::avx2

#endif // MOG_HAVE_AVX2_LANE

#pragma once

#include <cstddef>
#include <cstdint>

// Data-parallel inner loops behind a runtime-dispatched table. Every entry
// has a scalar reference implementation (namespace scalar) and, on x86-64
// with AVX2 available, a vectorized variant selected at startup. Set
// MOG_KERNELS=scalar|avx2 to force a lane; the two are equivalence-tested.
namespace mog::kernels {

enum class Isa { Scalar, Avx2 };

/// ISA the dispatch table currently resolves to.
Isa active_isa();
const char* isa_name(Isa isa);

/// Force a lane (throws DataError if unsupported on this CPU).
void select_isa(Isa isa);

double dot(const double* a, const double* b, std::size_t n);

/// y += alpha * x
void axpy(double* y, double alpha, const double* x, std::size_t n);

/// C = A * B with row-major A (m x k), B (k x n), C (m x n). C is overwritten.
void gemm(std::size_t m, std::size_t k, std::size_t n,
          const double* a, const double* b, double* c);

/// Y = S * X for CSR S (rows x rows) and row-major dense X (rows x d).
/// Row-parallel safe: each output row touches only its own slice of Y.
void spmm(std::size_t rows, const std::size_t* row_ptr, const std::int32_t* col,
          const double* val, const double* x, std::size_t d, double* y);

/// out[e] = dot(A[row(e),:], B[col(e),:]) for every stored entry of the CSR
/// pattern; the sampled dense-dense product used by the aggregation backward.
void sddmm(std::size_t rows, const std::size_t* row_ptr, const std::int32_t* col,
           const double* a, const double* b, std::size_t d, double* out);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double* y, double alpha, const double* x, std::size_t n);
void gemm(std::size_t m, std::size_t k, std::size_t n,
          const double* a, const double* b, double* c);
void spmm(std::size_t rows, const std::size_t* row_ptr, const std::int32_t* col,
          const double* val, const double* x, std::size_t d, double* y);
void sddmm(std::size_t rows, const std::size_t* row_ptr, const std::int32_t* col,
           const double* a, const double* b, std::size_t d, double* out);
} // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define MOG_HAVE_AVX2_LANE 1
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double* y, double alpha, const double* x, std::size_t n);
void gemm(std::size_t m, std::size_t k, std::size_t n,
          const double* a, const double* b, double* c);
void spmm(std::size_t rows, const std::size_t* row_ptr, const std::int32_t* col,
          const double* val, const double* x, std::size_t d, double* y);
void sddmm(std::size_t rows, const std::size_t* row_ptr, const std::int32_t* col,
           const double* a, const double* b, std::size_t d, double* out);
} // namespace avx2
#else
#define MOG_HAVE_AVX2_LANE 0
#endif

} // namespace mog::kernels

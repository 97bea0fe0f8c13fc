#include "mog/kernels.hpp"

#include "mog/common.hpp"

#include <cstdlib>
#include <cstring>
#include <mutex>

namespace mog::kernels {

namespace {

struct Table {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double*, double, const double*, std::size_t);
  void (*gemm)(std::size_t, std::size_t, std::size_t, const double*, const double*, double*);
  void (*spmm)(std::size_t, const std::size_t*, const std::int32_t*, const double*,
               const double*, std::size_t, double*);
  void (*sddmm)(std::size_t, const std::size_t*, const std::int32_t*, const double*,
                const double*, std::size_t, double*);
  Isa isa;
};

constexpr Table kScalar{scalar::dot, scalar::axpy, scalar::gemm, scalar::spmm,
                        scalar::sddmm, Isa::Scalar};

#if MOG_HAVE_AVX2_LANE
constexpr Table kAvx2{avx2::dot, avx2::axpy, avx2::gemm, avx2::spmm,
                      avx2::sddmm, Isa::Avx2};
#endif

bool avx2_supported() {
#if MOG_HAVE_AVX2_LANE
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Table g_table = kScalar;
std::once_flag g_init;

void init_from_env() {
  const char* env = std::getenv("MOG_KERNELS");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) {
    g_table = kScalar;
    return;
  }
#if MOG_HAVE_AVX2_LANE
  if (avx2_supported()) {
    g_table = kAvx2;
    return;
  }
#endif
  if (env != nullptr && std::strcmp(env, "avx2") == 0) {
    throw DataError("MOG_KERNELS=avx2 requested but this CPU lacks AVX2/FMA");
  }
  g_table = kScalar;
}

const Table& table() {
  std::call_once(g_init, init_from_env);
  return g_table;
}

} // namespace

Isa active_isa() { return table().isa; }

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "?";
}

void select_isa(Isa isa) {
  std::call_once(g_init, init_from_env);
  if (isa == Isa::Scalar) {
    g_table = kScalar;
    return;
  }
#if MOG_HAVE_AVX2_LANE
  if (avx2_supported()) {
    g_table = kAvx2;
    return;
  }
#endif
  throw DataError("requested kernel ISA not supported on this CPU");
}

double dot(const double* a, const double* b, std::size_t n) { return table().dot(a, b, n); }

void axpy(double* y, double alpha, const double* x, std::size_t n) {
  table().axpy(y, alpha, x, n);
}

void gemm(std::size_t m, std::size_t k, std::size_t n,
          const double* a, const double* b, double* c) {
  table().gemm(m, k, n, a, b, c);
}

void spmm(std::size_t rows, const std::size_t* row_ptr, const std::int32_t* col,
          const double* val, const double* x, std::size_t d, double* y) {
  table().spmm(rows, row_ptr, col, val, x, d, y);
}

void sddmm(std::size_t rows, const std::size_t* row_ptr, const std::int32_t* col,
           const double* a, const double* b, std::size_t d, double* out) {
  table().sddmm(rows, row_ptr, col, a, b, d, out);
}

} // namespace mog::kernels

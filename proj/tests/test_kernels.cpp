#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mog/kernels.hpp"
#include "mog/rng.hpp"
#include "oracles.hpp"

#include <vector>

using namespace mog;

namespace {

std::vector<double> random_vec(std::size_t n, RngStream& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.next_uniform(-1.0, 1.0);
  return v;
}

struct CsrFixture {
  std::size_t n;
  std::vector<std::size_t> row_ptr;
  std::vector<std::int32_t> col;
  std::vector<double> val;
};

CsrFixture random_csr(std::size_t n, double density, RngStream& rng) {
  CsrFixture f;
  f.n = n;
  f.row_ptr.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      if (rng.next_uniform() < density) {
        f.col.push_back(static_cast<std::int32_t>(j));
        f.val.push_back(rng.next_uniform(-1.0, 1.0));
      }
    f.row_ptr[i + 1] = f.col.size();
  }
  return f;
}

} // namespace

TEST_CASE("scalar dot/axpy match a plain loop") {
  RngStream rng(7, 1);
  for (std::size_t n : {1u, 3u, 8u, 17u, 64u, 67u}) {
    const auto a = random_vec(n, rng);
    const auto b = random_vec(n, rng);
    double want = 0.0;
    for (std::size_t i = 0; i < n; ++i) want += a[i] * b[i];
    CHECK(kernels::scalar::dot(a.data(), b.data(), n) == doctest::Approx(want).epsilon(1e-13));
  }
}

TEST_CASE("avx2 variants agree with scalar references") {
#if MOG_HAVE_AVX2_LANE
  if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma")) return;
  RngStream rng(11, 2);
  for (std::size_t n : {1u, 2u, 4u, 5u, 7u, 8u, 9u, 31u, 64u, 100u, 257u}) {
    const auto a = random_vec(n, rng);
    const auto b = random_vec(n, rng);
    const double ds = kernels::scalar::dot(a.data(), b.data(), n);
    const double dv = kernels::avx2::dot(a.data(), b.data(), n);
    CHECK(oracle::rel_err(dv, ds) < 1e-12);

    auto y1 = random_vec(n, rng);
    auto y2 = y1;
    kernels::scalar::axpy(y1.data(), 0.37, a.data(), n);
    kernels::avx2::axpy(y2.data(), 0.37, a.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(oracle::rel_err(y2[i], y1[i]) < 1e-12);
  }

  for (auto [m, k, n] : {std::array<std::size_t, 3>{3, 4, 5}, {8, 8, 8}, {13, 7, 9}}) {
    const auto a = random_vec(m * k, rng);
    const auto b = random_vec(k * n, rng);
    std::vector<double> c1(m * n), c2(m * n);
    kernels::scalar::gemm(m, k, n, a.data(), b.data(), c1.data());
    kernels::avx2::gemm(m, k, n, a.data(), b.data(), c2.data());
    for (std::size_t i = 0; i < m * n; ++i) CHECK(oracle::rel_err(c2[i], c1[i]) < 1e-12);
  }

  const auto csr = random_csr(23, 0.2, rng);
  const auto x = random_vec(csr.n * 6, rng);
  std::vector<double> y1(csr.n * 6), y2(csr.n * 6);
  kernels::scalar::spmm(csr.n, csr.row_ptr.data(), csr.col.data(), csr.val.data(), x.data(), 6,
                        y1.data());
  kernels::avx2::spmm(csr.n, csr.row_ptr.data(), csr.col.data(), csr.val.data(), x.data(), 6,
                      y2.data());
  for (std::size_t i = 0; i < y1.size(); ++i) CHECK(oracle::rel_err(y2[i], y1[i]) < 1e-12);

  std::vector<double> s1(csr.col.size()), s2(csr.col.size());
  const auto aa = random_vec(csr.n * 6, rng);
  kernels::scalar::sddmm(csr.n, csr.row_ptr.data(), csr.col.data(), aa.data(), x.data(), 6,
                         s1.data());
  kernels::avx2::sddmm(csr.n, csr.row_ptr.data(), csr.col.data(), aa.data(), x.data(), 6,
                       s2.data());
  for (std::size_t i = 0; i < s1.size(); ++i) CHECK(oracle::rel_err(s2[i], s1[i]) < 1e-12);
#endif
}

TEST_CASE("spmm against the dense multiply oracle") {
  RngStream rng(3, 3);
  const auto csr = random_csr(9, 0.3, rng);
  Matrix dense(csr.n, csr.n);
  for (std::size_t i = 0; i < csr.n; ++i)
    for (std::size_t e = csr.row_ptr[i]; e < csr.row_ptr[i + 1]; ++e)
      dense(i, static_cast<std::size_t>(csr.col[e])) = csr.val[e];
  const Matrix x = oracle::random_matrix(csr.n, 4, rng);
  const Matrix want = oracle::dense_matmul(dense, x);
  Matrix got(csr.n, 4);
  kernels::spmm(csr.n, csr.row_ptr.data(), csr.col.data(), csr.val.data(), x.data(), 4,
                got.data());
  CHECK(max_abs_diff(got, want) < 1e-12);
}

TEST_CASE("spmm: identity and zero") {
  std::vector<std::size_t> row_ptr{0, 1, 2, 3};
  std::vector<std::int32_t> col{0, 1, 2};
  std::vector<double> val{1.0, 1.0, 1.0};
  RngStream rng(5, 4);
  const auto x = random_vec(9, rng);
  std::vector<double> y(9);
  kernels::spmm(3, row_ptr.data(), col.data(), val.data(), x.data(), 3, y.data());
  for (std::size_t i = 0; i < 9; ++i) CHECK(y[i] == x[i]);

  std::vector<std::size_t> empty_ptr{0, 0, 0, 0};
  kernels::spmm(3, empty_ptr.data(), col.data(), val.data(), x.data(), 3, y.data());
  for (double v : y) CHECK(v == 0.0);
}

TEST_CASE("dispatch table resolves and is overridable") {
  const auto isa = kernels::active_isa();
  CHECK((isa == kernels::Isa::Scalar || isa == kernels::Isa::Avx2));
  kernels::select_isa(kernels::Isa::Scalar);
  CHECK(kernels::active_isa() == kernels::Isa::Scalar);
  std::vector<double> a{1.0, 2.0}, b{3.0, 4.0};
  CHECK(kernels::dot(a.data(), b.data(), 2) == 11.0);
#if MOG_HAVE_AVX2_LANE
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    kernels::select_isa(kernels::Isa::Avx2);
    CHECK(kernels::active_isa() == kernels::Isa::Avx2);
    CHECK(kernels::dot(a.data(), b.data(), 2) == 11.0);
  }
#endif
}

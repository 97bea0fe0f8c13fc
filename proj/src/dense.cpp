#include "mog/dense.hpp"

#include "mog/common.hpp"
#include "mog/kernels.hpp"
#include "mog/rng.hpp"

#include <cmath>

namespace mog {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DataError("matmul: inner dimensions disagree");
  Matrix c(a.rows(), b.cols());
  kernels::gemm(a.rows(), a.cols(), b.cols(), a.data(), b.data(), c.data());
  return c;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DataError("subtract: shape mismatch");
  Matrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.storage().size(); ++i)
    c.storage()[i] = a.storage()[i] - b.storage()[i];
  return c;
}

void add_scaled(Matrix& a, double s, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DataError("add_scaled: shape mismatch");
  kernels::axpy(a.data(), s, b.data(), a.storage().size());
}

double frobenius_norm(const Matrix& m) {
  return std::sqrt(kernels::dot(m.data(), m.data(), m.storage().size()));
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.storage().size(); ++i)
    d = std::max(d, std::abs(a.storage()[i] - b.storage()[i]));
  return d;
}

Matrix random_orthonormal(std::size_t n, std::size_t p, RngStream& rng) {
  if (p > n) throw DataError("random_orthonormal: p > n");
  Matrix q(n, p);
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = rng.next_normal();
    // two rounds of Gram-Schmidt for numerical orthogonality
    for (int round = 0; round < 2; ++round) {
      for (std::size_t l = 0; l < j; ++l) {
        double proj = 0.0;
        for (std::size_t i = 0; i < n; ++i) proj += q(i, l) * v[i];
        for (std::size_t i = 0; i < n; ++i) v[i] -= proj * q(i, l);
      }
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-12) {
      // degenerate draw; retry with a fresh vector
      --j;
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) q(i, j) = v[i] / norm;
  }
  return q;
}

} // namespace mog

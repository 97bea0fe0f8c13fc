#pragma once

#include "mog/dense.hpp"

#include <cstddef>
#include <vector>

namespace mog {

struct EigenResult {
  std::vector<double> values; // ascending
  Matrix vectors;             // column j pairs with values[j]
};

struct JacobiOptions {
  std::size_t max_n = 512;    // ego graphs are small; guard against misuse
  double symmetric_tol = 1e-10;
  double off_tol_scale = 1e-12; // stop when off-diag Frobenius < scale * ||M||_F
  std::size_t max_sweeps = 64;
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Deterministic:
/// fixed sweep order, stable ascending sort, and each eigenvector's
/// largest-|entry| coordinate (first such on ties) is made positive.
EigenResult jacobi_eigen_sym(const Matrix& m, const JacobiOptions& opt = {});

} // namespace mog

// Test-only oracles, kept independent of the implementation paths they check.
#pragma once

#include "mog/common.hpp"
#include "mog/dense.hpp"
#include "mog/eigensolver.hpp"
#include "mog/graph.hpp"
#include "mog/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace mog::oracle {

/// Naive triple-loop product, no kernel involvement.
inline Matrix dense_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

/// Effective resistance through the spectral pseudoinverse of the
/// combinatorial Laplacian (independent of the grounded-Cholesky route).
inline double er_pinv(std::size_t n, std::span<const LocalEdge> edges, std::size_t which) {
  Matrix l = laplacian(n, edges, false);
  const EigenResult eig = jacobi_eigen_sym(l);
  const double tol = 1e-9;
  const auto& e = edges[which];
  double r = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    if (std::abs(eig.values[c]) < tol) continue;
    const double comp = eig.vectors(e.u, c) - eig.vectors(e.v, c);
    r += comp * comp / eig.values[c];
  }
  return r;
}

/// Central finite difference of f at x with step h.
inline double central_diff(const std::function<double(double)>& f, double x, double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double rel_err(double got, double want) {
  const double denom = std::max({std::abs(got), std::abs(want), 1e-10});
  return std::abs(got - want) / denom;
}

/// Gradient comparison: relative 1e-4 with a small absolute floor so
/// near-zero pairs do not blow up the ratio.
inline bool grad_close(double got, double want, double rel = 1e-4, double abs_tol = 1e-8) {
  return std::abs(got - want) <= abs_tol + rel * std::max(std::abs(got), std::abs(want));
}

/// All connected simple graphs on n nodes (edge subsets of K_n), as local
/// edge lists with unit weights. Small n only.
inline std::vector<std::vector<LocalEdge>> connected_graphs(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) all.push_back({i, j});
  std::vector<std::vector<LocalEdge>> out;
  const std::size_t total = 1ull << all.size();
  for (std::size_t mask = 1; mask < total; ++mask) {
    std::vector<LocalEdge> edges;
    for (std::size_t b = 0; b < all.size(); ++b)
      if (mask & (1ull << b)) edges.push_back({all[b].first, all[b].second, 1.0});
    if (is_connected(n, edges)) out.push_back(std::move(edges));
  }
  return out;
}

/// Random connected unit-weight graph: a random spanning tree plus extra edges.
inline std::vector<EdgeTriple> random_connected_edges(std::size_t n, double extra_prob,
                                                      RngStream& rng) {
  std::vector<EdgeTriple> edges;
  for (std::size_t v = 1; v < n; ++v) {
    const auto u = static_cast<NodeId>(rng.next_below(v));
    edges.push_back({u, static_cast<NodeId>(v), 1.0});
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.next_uniform() < extra_prob)
        edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j), 1.0});
  return edges;
}

inline Matrix random_matrix(std::size_t r, std::size_t c, RngStream& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (auto& v : m.storage()) v = rng.next_uniform(-scale, scale);
  return m;
}

inline Matrix random_symmetric(std::size_t n, RngStream& rng, double scale = 1.0) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double v = rng.next_uniform(-scale, scale);
      m(i, j) = v;
      m(j, i) = v;
    }
  return m;
}

/// Spearman rank correlation with average ranks for ties.
inline double spearman(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  auto ranks = [n](std::span<const double> v) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&v](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va <= 0.0 || vb <= 0.0) return 1.0; // both constant counts as agreement
  return cov / std::sqrt(va * vb);
}

/// Random symmetric PSD matrix A^T A.
inline Matrix random_psd(std::size_t n, RngStream& rng) {
  const Matrix a = random_matrix(n, n, rng);
  Matrix c(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += a(k, i) * a(k, j);
      c(i, j) = s;
    }
  return c;
}

} // namespace mog::oracle

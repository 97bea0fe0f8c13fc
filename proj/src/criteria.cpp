#include "mog/criteria.hpp"

#include "mog/common.hpp"

#include <algorithm>
#include <cmath>

namespace mog {

const char* criterion_name(Criterion c) {
  switch (c) {
    case Criterion::Degree: return "degree";
    case Criterion::Jaccard: return "jaccard";
    case Criterion::EffectiveResistance: return "effective_resistance";
    case Criterion::GradientMagnitude: return "gradient_magnitude";
  }
  return "?";
}

Criterion criterion_from_name(const std::string& name) {
  if (name == "degree") return Criterion::Degree;
  if (name == "jaccard") return Criterion::Jaccard;
  if (name == "effective_resistance" || name == "er") return Criterion::EffectiveResistance;
  if (name == "gradient_magnitude" || name == "grad") return Criterion::GradientMagnitude;
  throw DataError("unknown criterion: " + name);
}

double degree_prior(const Graph& g, EdgeId e) {
  const auto ends = g.edge_ends(e);
  return 0.5 * (static_cast<double>(g.degree(ends[0])) + static_cast<double>(g.degree(ends[1])));
}

double jaccard_prior(const Graph& g, EdgeId e) {
  const auto ends = g.edge_ends(e);
  const auto ni = g.neighbors(ends[0]);
  const auto nj = g.neighbors(ends[1]);
  std::size_t inter = 0;
  std::size_t a = 0, b = 0;
  while (a < ni.size() && b < nj.size()) {
    if (ni[a] == nj[b]) {
      ++inter;
      ++a;
      ++b;
    } else if (ni[a] < nj[b]) {
      ++a;
    } else {
      ++b;
    }
  }
  const std::size_t uni = ni.size() + nj.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

// Dense Cholesky inverse of the Laplacian grounded at the last node. For a
// connected graph the grounded matrix is positive definite, and
// ER(i,j) = B[i,i] + B[j,j] - 2 B[i,j] with B entries of ground extended by 0.
class GroundedErSolver {
public:
  GroundedErSolver(std::size_t n, std::span<const LocalEdge> edges) : n_(n) {
    if (n < 2) throw DataError("er_exact: need at least two nodes");
    if (!is_connected(n, edges)) throw DataError("er_exact: graph is disconnected");
    const std::size_t m = n - 1;
    Matrix l(m, m);
    for (const auto& e : edges) {
      if (e.w < 0.0) throw DataError("er_exact: negative weight");
      if (e.u < m) l(e.u, e.u) += e.w;
      if (e.v < m) l(e.v, e.v) += e.w;
      if (e.u < m && e.v < m) {
        l(e.u, e.v) -= e.w;
        l(e.v, e.u) -= e.w;
      }
    }
    // in-place lower Cholesky
    for (std::size_t j = 0; j < m; ++j) {
      double d = l(j, j);
      for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
      if (d <= 0.0) throw NumericError("er_exact: grounded Laplacian not positive definite");
      l(j, j) = std::sqrt(d);
      for (std::size_t i = j + 1; i < m; ++i) {
        double s = l(i, j);
        for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
        l(i, j) = s / l(j, j);
      }
    }
    // B = L^{-T} L^{-1} column by column
    inv_ = Matrix(m, m);
    std::vector<double> col(m);
    for (std::size_t c = 0; c < m; ++c) {
      std::fill(col.begin(), col.end(), 0.0);
      col[c] = 1.0;
      for (std::size_t i = c; i < m; ++i) {
        double s = col[i];
        for (std::size_t k = c; k < i; ++k) s -= l(i, k) * col[k];
        col[i] = s / l(i, i);
      }
      for (std::size_t i = m; i-- > 0;) {
        double s = col[i];
        for (std::size_t k = i + 1; k < m; ++k) s -= l(k, i) * col[k];
        col[i] = s / l(i, i);
      }
      for (std::size_t i = 0; i < m; ++i) inv_(i, c) = col[i];
    }
  }

  double resistance(std::size_t u, std::size_t v) const {
    auto b = [this](std::size_t i, std::size_t j) {
      if (i >= n_ - 1 || j >= n_ - 1) return 0.0;
      return inv_(i, j);
    };
    return b(u, u) + b(v, v) - 2.0 * b(u, v);
  }

private:
  std::size_t n_;
  Matrix inv_;
};

} // namespace

double er_exact(std::size_t n, std::span<const LocalEdge> edges, std::size_t which_edge) {
  if (which_edge >= edges.size()) throw DataError("er_exact: edge index out of range");
  GroundedErSolver solver(n, edges);
  return solver.resistance(edges[which_edge].u, edges[which_edge].v);
}

std::vector<double> er_exact_all(std::size_t n, std::span<const LocalEdge> edges) {
  GroundedErSolver solver(n, edges);
  std::vector<double> out(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i)
    out[i] = solver.resistance(edges[i].u, edges[i].v);
  return out;
}

double er_approx(const Graph& g, EdgeId e) {
  const auto ends = g.edge_ends(e);
  return 1.0 / static_cast<double>(g.degree(ends[0])) +
         1.0 / static_cast<double>(g.degree(ends[1]));
}

double grad_magnitude_prior(const Graph& g, EdgeId e) {
  if (!g.grad_cache_valid()) return 0.0;
  return std::abs(g.grad_cache()[static_cast<std::size_t>(e)]);
}

EdgePrior compute_prior(const Graph& g, Criterion kind, ErMode er_mode,
                        std::size_t er_exact_cap) {
  EdgePrior prior;
  prior.kind = kind;
  prior.values.resize(g.n_edges());
  switch (kind) {
    case Criterion::Degree:
      for (std::size_t e = 0; e < g.n_edges(); ++e)
        prior.values[e] = degree_prior(g, static_cast<EdgeId>(e));
      break;
    case Criterion::Jaccard:
      for (std::size_t e = 0; e < g.n_edges(); ++e)
        prior.values[e] = jaccard_prior(g, static_cast<EdgeId>(e));
      break;
    case Criterion::EffectiveResistance: {
      if (er_mode == ErMode::Approx) {
        for (std::size_t e = 0; e < g.n_edges(); ++e)
          prior.values[e] = er_approx(g, static_cast<EdgeId>(e));
      } else {
        if (g.n_nodes() > er_exact_cap)
          throw DataError("exact effective resistance limited to small graphs");
        std::vector<LocalEdge> edges(g.n_edges());
        for (std::size_t e = 0; e < g.n_edges(); ++e) {
          const auto ends = g.edge_ends(static_cast<EdgeId>(e));
          edges[e] = {static_cast<std::size_t>(ends[0]), static_cast<std::size_t>(ends[1]),
                      g.edge_weight(static_cast<EdgeId>(e))};
        }
        prior.values = er_exact_all(g.n_nodes(), edges);
      }
      break;
    }
    case Criterion::GradientMagnitude:
      prior.stale = !g.grad_cache_valid();
      for (std::size_t e = 0; e < g.n_edges(); ++e)
        prior.values[e] = grad_magnitude_prior(g, static_cast<EdgeId>(e));
      break;
  }
  return prior;
}

std::vector<double> normalize_prior(std::span<const double> values) {
  std::vector<double> out(values.size(), 0.0);
  if (values.empty()) return out;
  double lo = values[0], hi = values[0];
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi <= lo) return out; // constant prior carries no signal
  const double inv = 1.0 / (hi - lo);
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) * inv;
  return out;
}

} // namespace mog

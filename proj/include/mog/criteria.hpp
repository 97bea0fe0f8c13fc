#pragma once

#include "mog/graph.hpp"

#include <span>
#include <string>
#include <vector>

namespace mog {

enum class Criterion { Degree, Jaccard, EffectiveResistance, GradientMagnitude };

const char* criterion_name(Criterion c);
Criterion criterion_from_name(const std::string& name);

/// Per-canonical-edge prior values for one criterion. `stale` is set when the
/// gradient-magnitude prior is requested before any backward pass has filled
/// the edge-gradient cache.
struct EdgePrior {
  Criterion kind = Criterion::Degree;
  std::vector<double> values;
  bool stale = false;
};

double degree_prior(const Graph& g, EdgeId e);

/// Open neighborhoods: |N(i) ∩ N(j)| / |N(i) ∪ N(j)|.
double jaccard_prior(const Graph& g, EdgeId e);

/// (1_i - 1_j)^T L^+ (1_i - 1_j) for the combinatorial Laplacian, via a
/// grounded-Laplacian Cholesky inverse. Requires the (nodes, edges) graph to
/// be connected; throws DataError otherwise.
double er_exact(std::size_t n, std::span<const LocalEdge> edges, std::size_t which_edge);

/// All effective resistances at once (one factorization).
std::vector<double> er_exact_all(std::size_t n, std::span<const LocalEdge> edges);

/// Degree-based approximation 1/deg(i) + 1/deg(j).
double er_approx(const Graph& g, EdgeId e);

double grad_magnitude_prior(const Graph& g, EdgeId e);

enum class ErMode { Approx, Exact };

/// Whole-graph prior vector for one criterion. Exact ER is limited to graphs
/// with at most `er_exact_cap` nodes (throws DataError beyond it).
EdgePrior compute_prior(const Graph& g, Criterion kind, ErMode er_mode = ErMode::Approx,
                        std::size_t er_exact_cap = 2000);

/// Min-max normalization of a prior to [0,1]; a constant vector maps to 0.
std::vector<double> normalize_prior(std::span<const double> values);

} // namespace mog

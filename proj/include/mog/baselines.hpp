#pragma once

#include "mog/graph.hpp"

#include <cstdint>
#include <string>

namespace mog {

enum class BaselineKind { Random, GSpar, LocalDegree, Scan, ErSample };

const char* baseline_name(BaselineKind k);
BaselineKind baseline_from_name(const std::string& name);

struct BaselineConfig {
  BaselineKind kind = BaselineKind::Random;
  double s = 0.0; // target removal ratio in [0,1)
  std::uint64_t seed = 0;
  double alpha_tol = 0.01;          // LocalDegree sparsity tolerance
  std::size_t er_exact_cap = 2000;  // ErSample node limit
};

/// SCAN structural similarity with closed neighborhoods,
/// |Γ(u) ∩ Γ(v)| / sqrt(|Γ(u)||Γ(v)|) with Γ = N ∪ {self}.
double scan_similarity(const Graph& g, EdgeId e);

/// Keeps floor(|E|*(1-s)) edges (LocalDegree: within ±alpha_tol of the
/// target ratio, alpha solved by bisection). Kept edges keep their weights.
Graph baseline_sparsify(const BaselineConfig& cfg, const Graph& g);

} // namespace mog

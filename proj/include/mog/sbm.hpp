#pragma once

#include "mog/graph.hpp"

#include <cstdint>

namespace mog {

/// Stochastic block model with Gaussian class-conditional features and an
/// optional budget of injected random cross-block noise edges (the
/// task-irrelevant edges a sparsifier should learn to drop).
struct SbmConfig {
  std::size_t n_nodes = 400;
  std::size_t blocks = 3;        // 2..5
  double avg_degree_in = 7.0;    // expected within-block degree
  double avg_degree_out = 3.0;   // expected cross-block degree
  std::size_t feat_dim = 16;
  double feature_scale = 1.0;    // distance between class means
  double feature_noise = 1.0;    // per-coordinate sigma
  double noise_edge_fraction = 0.0; // extra random cross-block edges / base edges
  std::uint64_t seed = 1;
};

Graph generate_sbm(const SbmConfig& cfg);

/// Deterministic train/val/test node split from a seeded shuffle.
struct Split {
  std::vector<std::int32_t> train, val, test;
};

Split make_split(std::size_t n, double train_fraction, double val_fraction, std::uint64_t seed);

} // namespace mog

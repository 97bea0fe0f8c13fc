#pragma once

#include "mog/graph.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mog {

struct BenchRow {
  std::size_t edge_count = 0;
  double sparsity = 0.0;
  double mean_ms = 0.0;
  double std_ms = 0.0;
  std::size_t repeats = 0;
  double speedup = 1.0; // vs the sparsity-0 row
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::size_t feature_width = 0;
  std::size_t threads = 0;

  std::string to_text() const;
};

/// Times Y = A X for the graph's adjacency CSR (both arcs) against a random
/// dense X. repeats >= 10 timed iterations after >= 3 warmup runs;
/// median-of-means over 5 groups, monotonic clock.
struct SpmmTiming {
  double mean_ms = 0.0;
  double std_ms = 0.0;
};
SpmmTiming time_spmm(const Graph& g, std::size_t width, std::size_t repeats,
                     std::uint64_t seed);

/// Random uniform sparsification at each grid point, timed against the dense
/// (sparsity 0) baseline.
BenchReport bench_speedup(const Graph& g, const std::vector<double>& grid, std::size_t width,
                          std::size_t repeats, std::uint64_t seed);

} // namespace mog

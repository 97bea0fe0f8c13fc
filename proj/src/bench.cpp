#include "mog/bench.hpp"

#include "mog/baselines.hpp"
#include "mog/common.hpp"
#include "mog/kernels.hpp"
#include "mog/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace mog {

namespace {

struct Csr {
  std::size_t n = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<std::int32_t> col;
  std::vector<double> val;
};

Csr adjacency_csr(const Graph& g) {
  Csr csr;
  csr.n = g.n_nodes();
  csr.row_ptr = g.row_ptr();
  csr.col = g.col();
  csr.val.resize(g.col().size());
  for (std::size_t u = 0; u < csr.n; ++u) {
    const auto inc = g.incident_edges(static_cast<NodeId>(u));
    for (std::size_t i = 0; i < inc.size(); ++i)
      csr.val[g.row_ptr()[u] + i] = g.edge_weight(inc[i]);
  }
  return csr;
}

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

} // namespace

SpmmTiming time_spmm(const Graph& g, std::size_t width, std::size_t repeats,
                     std::uint64_t seed) {
  if (repeats < 10) throw DataError("bench: repeats must be >= 10");
  const Csr csr = adjacency_csr(g);
  Matrix x(csr.n, width);
  RngStream rng(seed, 0x62656e63ull);
  for (auto& v : x.storage()) v = rng.next_uniform(-1.0, 1.0);
  Matrix y(csr.n, width);

  auto run_once = [&] {
    parallel_for(csr.n, [&](std::size_t begin, std::size_t end) {
      kernels::spmm(end - begin, csr.row_ptr.data() + begin, csr.col.data(), csr.val.data(),
                    x.data(), width, y.data() + begin * width);
    });
  };
  for (int i = 0; i < 3; ++i) run_once(); // warmup excluded

  std::vector<double> times(repeats);
  for (std::size_t r = 0; r < repeats; ++r) {
    const double t0 = now_ms();
    run_once();
    times[r] = now_ms() - t0;
  }
  // median of 5 group means
  const std::size_t groups = std::min<std::size_t>(5, repeats);
  std::vector<double> means(groups, 0.0);
  std::vector<std::size_t> counts(groups, 0);
  for (std::size_t r = 0; r < repeats; ++r) {
    means[r % groups] += times[r];
    ++counts[r % groups];
  }
  for (std::size_t gidx = 0; gidx < groups; ++gidx) means[gidx] /= counts[gidx];
  std::sort(means.begin(), means.end());
  SpmmTiming t;
  t.mean_ms = means[groups / 2];
  double mu = 0.0;
  for (double v : times) mu += v;
  mu /= repeats;
  double var = 0.0;
  for (double v : times) var += (v - mu) * (v - mu);
  t.std_ms = std::sqrt(var / repeats);
  return t;
}

BenchReport bench_speedup(const Graph& g, const std::vector<double>& grid, std::size_t width,
                          std::size_t repeats, std::uint64_t seed) {
  BenchReport report;
  report.feature_width = width;
  report.threads = thread_count();
  double dense_ms = 0.0;
  for (double s : grid) {
    if (s < 0.0 || s >= 1.0) throw DataError("bench: grid values must lie in [0,1)");
    BenchRow row;
    row.sparsity = s;
    if (s == 0.0) {
      row.edge_count = g.n_edges();
      const auto t = time_spmm(g, width, repeats, seed);
      row.mean_ms = t.mean_ms;
      row.std_ms = t.std_ms;
    } else {
      BaselineConfig cfg;
      cfg.kind = BaselineKind::Random;
      cfg.s = s;
      cfg.seed = seed;
      const Graph sparse = baseline_sparsify(cfg, g);
      row.edge_count = sparse.n_edges();
      const auto t = time_spmm(sparse, width, repeats, seed);
      row.mean_ms = t.mean_ms;
      row.std_ms = t.std_ms;
    }
    row.repeats = repeats;
    report.rows.push_back(row);
  }
  for (const auto& row : report.rows)
    if (row.sparsity == 0.0) dense_ms = row.mean_ms;
  if (dense_ms <= 0.0 && !report.rows.empty()) dense_ms = report.rows.front().mean_ms;
  for (auto& row : report.rows) row.speedup = dense_ms > 0.0 ? dense_ms / row.mean_ms : 1.0;
  return report;
}

std::string BenchReport::to_text() const {
  std::string out = "edges sparsity mean_ms std_ms repeats speedup\n";
  for (const auto& row : rows) {
    out += std::to_string(row.edge_count);
    out += ' ';
    out += format_double(row.sparsity);
    out += ' ';
    out += format_double(row.mean_ms);
    out += ' ';
    out += format_double(row.std_ms);
    out += ' ';
    out += std::to_string(row.repeats);
    out += ' ';
    out += format_double(row.speedup);
    out += '\n';
  }
  out += "# threads=" + std::to_string(threads) +
         " kernels=" + kernels::isa_name(kernels::active_isa()) + "\n";
  return out;
}

} // namespace mog

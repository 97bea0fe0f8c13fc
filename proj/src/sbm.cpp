#include "mog/sbm.hpp"

#include "mog/common.hpp"
#include "mog/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace mog {

Graph generate_sbm(const SbmConfig& cfg) {
  if (cfg.blocks < 2 || cfg.blocks > 5) throw DataError("sbm: blocks must be 2..5");
  if (cfg.n_nodes < 2 * cfg.blocks) throw DataError("sbm: too few nodes");
  const std::size_t n = cfg.n_nodes;
  const std::size_t B = cfg.blocks;
  std::vector<int> label(n);
  for (std::size_t i = 0; i < n; ++i) label[i] = static_cast<int>(i % B);

  const double block_size = static_cast<double>(n) / static_cast<double>(B);
  const double p_in = std::min(1.0, cfg.avg_degree_in / std::max(1.0, block_size - 1.0));
  const double p_out =
      std::min(1.0, cfg.avg_degree_out / std::max(1.0, static_cast<double>(n) - block_size));

  RngStream rng(cfg.seed, 0x73626d00ull); // "sbm"
  std::vector<EdgeTriple> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = label[i] == label[j] ? p_in : p_out;
      if (rng.next_uniform() < p)
        edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j), 1.0});
    }

  if (cfg.noise_edge_fraction > 0.0) {
    std::set<std::pair<NodeId, NodeId>> present;
    for (const auto& e : edges) present.insert(std::minmax(e.u, e.v));
    const std::size_t budget = static_cast<std::size_t>(
        std::llround(cfg.noise_edge_fraction * static_cast<double>(edges.size())));
    RngStream noise_rng(cfg.seed, 0x6e6f6973ull); // "nois"
    std::size_t added = 0, attempts = 0;
    while (added < budget && attempts < budget * 200 + 1000) {
      ++attempts;
      const auto u = static_cast<NodeId>(noise_rng.next_below(n));
      const auto v = static_cast<NodeId>(noise_rng.next_below(n));
      if (u == v || label[u] == label[v]) continue; // noise = cross-block clutter
      const auto key = std::minmax(u, v);
      if (present.contains(key)) continue;
      present.insert(key);
      edges.push_back({key.first, key.second, 1.0});
      ++added;
    }
  }

  Matrix features(n, cfg.feat_dim);
  RngStream feat_rng(cfg.seed, 0x66656174ull); // "feat"
  Matrix means(B, cfg.feat_dim);
  for (auto& v : means.storage()) v = feat_rng.next_normal() * cfg.feature_scale;
  for (std::size_t i = 0; i < n; ++i) {
    const auto mu = means.row(static_cast<std::size_t>(label[i]));
    for (std::size_t f = 0; f < cfg.feat_dim; ++f)
      features(i, f) = mu[f] + feat_rng.next_normal() * cfg.feature_noise;
  }

  return build_graph(n, edges, std::move(features), std::move(label));
}

Split make_split(std::size_t n, double train_fraction, double val_fraction, std::uint64_t seed) {
  if (train_fraction <= 0.0 || val_fraction < 0.0 || train_fraction + val_fraction >= 1.0)
    throw DataError("split fractions must satisfy 0 < train, 0 <= val, train+val < 1");
  std::vector<std::int32_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  RngStream rng(seed, 0x73706c74ull); // "splt"
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(ids[i - 1], ids[j]);
  }
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * n));
  const auto n_val = static_cast<std::size_t>(std::floor(val_fraction * n));
  Split split;
  split.train.assign(ids.begin(), ids.begin() + n_train);
  split.val.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
  split.test.assign(ids.begin() + n_train + n_val, ids.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

} // namespace mog

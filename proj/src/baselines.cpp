#include "mog/baselines.hpp"

#include "mog/common.hpp"
#include "mog/criteria.hpp"
#include "mog/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mog {

const char* baseline_name(BaselineKind k) {
  switch (k) {
    case BaselineKind::Random: return "random";
    case BaselineKind::GSpar: return "gspar";
    case BaselineKind::LocalDegree: return "local-degree";
    case BaselineKind::Scan: return "scan";
    case BaselineKind::ErSample: return "er";
  }
  return "?";
}

BaselineKind baseline_from_name(const std::string& name) {
  if (name == "random") return BaselineKind::Random;
  if (name == "gspar" || name == "g-spar") return BaselineKind::GSpar;
  if (name == "local-degree" || name == "local_degree") return BaselineKind::LocalDegree;
  if (name == "scan") return BaselineKind::Scan;
  if (name == "er" || name == "er-sample") return BaselineKind::ErSample;
  throw DataError("unknown baseline method: " + name);
}

double scan_similarity(const Graph& g, EdgeId e) {
  const auto ends = g.edge_ends(e);
  const auto ni = g.neighbors(ends[0]);
  const auto nj = g.neighbors(ends[1]);
  // closed neighborhoods: both endpoints are in both sets via the edge itself
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
  // adding the endpoints themselves: i ∈ Γ(i) ∩ Γ(j) iff i ∈ N(j) (true), same for j
  inter += 2;
  const double si = static_cast<double>(ni.size() + 1);
  const double sj = static_cast<double>(nj.size() + 1);
  return static_cast<double>(inter) / std::sqrt(si * sj);
}

namespace {

Graph keep_edges(const Graph& g, const std::vector<char>& kept) {
  std::vector<EdgeTriple> edges;
  for (std::size_t e = 0; e < g.n_edges(); ++e) {
    if (!kept[e]) continue;
    const auto ends = g.edge_ends(static_cast<EdgeId>(e));
    edges.push_back({ends[0], ends[1], g.edge_weight(static_cast<EdgeId>(e))});
  }
  return subgraph_with_edges(g, edges);
}

/// Keep the `count` highest-scored edges; ties keep the lower canonical id.
std::vector<char> keep_top_by_score(const std::vector<double>& score, std::size_t count) {
  std::vector<std::size_t> order(score.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return a < b;
  });
  std::vector<char> kept(score.size(), 0);
  for (std::size_t i = 0; i < count && i < order.size(); ++i) kept[order[i]] = 1;
  return kept;
}

std::vector<char> local_degree_keep(const Graph& g, double alpha) {
  std::vector<char> kept(g.n_edges(), 0);
  for (std::size_t u = 0; u < g.n_nodes(); ++u) {
    const auto nbs = g.neighbors(static_cast<NodeId>(u));
    const auto inc = g.incident_edges(static_cast<NodeId>(u));
    if (nbs.empty()) continue;
    const std::size_t quota = std::min<std::size_t>(
        nbs.size(),
        static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(nbs.size()), alpha))));
    std::vector<std::size_t> order(nbs.size());
    std::iota(order.begin(), order.end(), 0);
    // highest-degree neighbors first; ties to the lower node id
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const std::size_t da = g.degree(nbs[a]), db = g.degree(nbs[b]);
      if (da != db) return da > db;
      return nbs[a] < nbs[b];
    });
    for (std::size_t i = 0; i < quota; ++i) kept[inc[order[i]]] = 1;
  }
  return kept;
}

} // namespace

Graph baseline_sparsify(const BaselineConfig& cfg, const Graph& g) {
  if (cfg.s < 0.0 || cfg.s >= 1.0) throw DataError("baseline: s must lie in [0,1)");
  const std::size_t m = g.n_edges();
  const std::size_t keep_count =
      static_cast<std::size_t>(std::floor(static_cast<double>(m) * (1.0 - cfg.s)));

  switch (cfg.kind) {
    case BaselineKind::Random: {
      // seeded Fisher-Yates prefix
      std::vector<std::size_t> ids(m);
      std::iota(ids.begin(), ids.end(), 0);
      RngStream rng(cfg.seed, 0x72616e64ull);
      for (std::size_t i = 0; i < keep_count && i + 1 < m; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next_below(m - i));
        std::swap(ids[i], ids[j]);
      }
      std::vector<char> kept(m, 0);
      for (std::size_t i = 0; i < keep_count; ++i) kept[ids[i]] = 1;
      return keep_edges(g, kept);
    }
    case BaselineKind::GSpar: {
      std::vector<double> score(m);
      for (std::size_t e = 0; e < m; ++e) score[e] = jaccard_prior(g, static_cast<EdgeId>(e));
      return keep_edges(g, keep_top_by_score(score, keep_count));
    }
    case BaselineKind::Scan: {
      std::vector<double> score(m);
      for (std::size_t e = 0; e < m; ++e) score[e] = scan_similarity(g, static_cast<EdgeId>(e));
      return keep_edges(g, keep_top_by_score(score, keep_count));
    }
    case BaselineKind::ErSample: {
      if (g.n_nodes() > cfg.er_exact_cap)
        throw DataError("er baseline limited to graphs with <= " +
                        std::to_string(cfg.er_exact_cap) + " nodes");
      std::vector<LocalEdge> edges(m);
      for (std::size_t e = 0; e < m; ++e) {
        const auto ends = g.edge_ends(static_cast<EdgeId>(e));
        edges[e] = {static_cast<std::size_t>(ends[0]), static_cast<std::size_t>(ends[1]),
                    g.edge_weight(static_cast<EdgeId>(e))};
      }
      const auto er = er_exact_all(g.n_nodes(), edges); // throws if disconnected
      // weighted reservoir (Efraimidis-Spirakis): keep the top keys u^(1/w)
      RngStream rng(cfg.seed, 0x65727376ull);
      std::vector<double> key(m);
      for (std::size_t e = 0; e < m; ++e) {
        const double u = std::max(rng.next_uniform(), 1e-300);
        key[e] = er[e] > 0.0 ? std::pow(u, 1.0 / er[e]) : 0.0;
      }
      return keep_edges(g, keep_top_by_score(key, keep_count));
    }
    case BaselineKind::LocalDegree: {
      // kept ratio is a monotone step function of alpha; bisect and keep the
      // closest ratio seen (the +-1% tolerance may sit between two steps on
      // tiny graphs, in which case the nearest achievable ratio wins)
      const double target = 1.0 - cfg.s;
      auto ratio_of = [&](const std::vector<char>& kept) {
        std::size_t c = 0;
        for (char k : kept) c += k;
        return static_cast<double>(c) / static_cast<double>(m);
      };
      std::vector<char> best;
      double best_gap = 2.0;
      auto consider = [&](double alpha) {
        auto kept = local_degree_keep(g, alpha);
        const double gap = std::abs(ratio_of(kept) - target);
        if (gap < best_gap) {
          best_gap = gap;
          best = std::move(kept);
        }
        return gap;
      };
      double lo = 0.0, hi = 1.0;
      consider(0.0);
      consider(1.0);
      for (int it = 0; it < 60 && best_gap > cfg.alpha_tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        auto kept = local_degree_keep(g, mid);
        const double r = ratio_of(kept);
        if (std::abs(r - target) < best_gap) {
          best_gap = std::abs(r - target);
          best = kept;
        }
        (r < target ? lo : hi) = mid;
      }
      return keep_edges(g, best);
    }
  }
  throw DataError("unreachable baseline kind");
}

} // namespace mog

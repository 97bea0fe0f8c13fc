#include "mog/grassmann.hpp"

#include "mog/common.hpp"
#include "mog/eigensolver.hpp"
#include "mog/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mog {

SpectralEmbedding spectral_embed(const Matrix& laplacian, std::size_t p) {
  const std::size_t n = laplacian.rows();
  if (p > n) throw DataError("spectral_embed: p exceeds local dimension");
  const EigenResult eig = jacobi_eigen_sym(laplacian);
  SpectralEmbedding emb;
  emb.u = Matrix(n, p);
  emb.eigenvalues.assign(eig.values.begin(), eig.values.begin() + static_cast<std::ptrdiff_t>(p));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) emb.u(i, j) = eig.vectors(i, j);
  return emb;
}

double proj_distance_sq(const Matrix& u1, const Matrix& u2) {
  if (u1.rows() != u2.rows() || u1.cols() != u2.cols())
    throw DataError("proj_distance_sq: shape mismatch");
  const std::size_t p = u1.cols();
  // tr(U1 U1^T U2 U2^T) = ||U1^T U2||_F^2
  const Matrix m = matmul(transpose(u1), u2);
  double s = kernels::dot(m.data(), m.data(), m.storage().size());
  return static_cast<double>(p) - s;
}

Matrix candidate_laplacian(const Graph& g, const SparseCandidate& cand, bool score_modulated) {
  const EgoGraph& ego = *cand.ego;
  std::vector<LocalEdge> edges;
  edges.reserve(cand.kept_count);
  for (std::size_t i = 0; i < ego.n_edges(); ++i) {
    if (!cand.kept[i]) continue;
    double w = g.edge_weight(ego.edges[i]);
    if (score_modulated) w *= 1.0 / (1.0 + std::exp(-cand.scores[i]));
    // local ordering: center is 0, leaf i is i+1
    edges.push_back({0, i + 1, w});
  }
  return laplacian(ego.n_local(), edges, true);
}

Matrix ensemble_laplacian(std::span<const Matrix> laplacians,
                          std::span<const SpectralEmbedding> embeddings,
                          std::span<const double> gate_weights) {
  if (laplacians.empty() || laplacians.size() != embeddings.size() ||
      laplacians.size() != gate_weights.size())
    throw DataError("ensemble_laplacian: misaligned inputs");
  const std::size_t n = laplacians[0].rows();
  Matrix l_hat(n, n);
  for (std::size_t m = 0; m < laplacians.size(); ++m) {
    if (laplacians[m].rows() != n || embeddings[m].u.rows() != n)
      throw DataError("ensemble_laplacian: candidates disagree on local ordering");
    add_scaled(l_hat, 1.0, laplacians[m]);
    const Matrix& u = embeddings[m].u;
    const double e = gate_weights[m];
    const std::size_t p = u.cols();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double proj = 0.0;
        for (std::size_t c = 0; c < p; ++c) proj += u(i, c) * u(j, c);
        l_hat(i, j) -= e * proj;
      }
  }
  // closed form is symmetric; keep it exactly so downstream eigensolves stay clean
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = 0.5 * (l_hat(i, j) + l_hat(j, i));
      l_hat(i, j) = v;
      l_hat(j, i) = v;
    }
  return l_hat;
}

double ensemble_objective(const Matrix& u, std::span<const Matrix> laplacians,
                          std::span<const SpectralEmbedding> embeddings,
                          std::span<const double> gate_weights) {
  double obj = 0.0;
  for (std::size_t m = 0; m < laplacians.size(); ++m) {
    const Matrix lu = matmul(laplacians[m], u);
    for (std::size_t j = 0; j < u.cols(); ++j)
      for (std::size_t i = 0; i < u.rows(); ++i) obj += u(i, j) * lu(i, j);
    obj += gate_weights[m] * proj_distance_sq(u, embeddings[m].u);
  }
  return obj;
}

MixResult post_sparsify(const EgoGraph& ego, const Matrix& l_hat,
                        std::span<const double> selected_sparsities) {
  if (selected_sparsities.empty()) throw DataError("post_sparsify: no selected experts");
  MixResult mix;
  mix.center = ego.center;
  mix.ego_edges = ego.edges;
  mix.s_node = 0.0;
  for (double s : selected_sparsities) mix.s_node += s;
  mix.s_node /= static_cast<double>(selected_sparsities.size());

  const std::size_t m = ego.n_edges();
  mix.a_hat.resize(m);
  for (std::size_t i = 0; i < m; ++i) mix.a_hat[i] = -l_hat(0, i + 1);
  mix.kept_final.assign(m, 0);
  if (m == 0) {
    mix.kept_count = 0;
    return mix;
  }
  const std::size_t keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(static_cast<double>(m) * (1.0 - mix.s_node))));
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double wa = std::abs(mix.a_hat[a]), wb = std::abs(mix.a_hat[b]);
    if (wa != wb) return wa > wb;
    return ego.edges[a] < ego.edges[b];
  });
  for (std::size_t i = 0; i < keep; ++i) mix.kept_final[order[i]] = 1;
  mix.kept_count = keep;
  return mix;
}

const char* reassembly_rule_name(ReassemblyRule r) {
  switch (r) {
    case ReassemblyRule::Union: return "union";
    case ReassemblyRule::Intersection: return "intersection";
    case ReassemblyRule::MeanThreshold: return "mean_threshold";
  }
  return "?";
}

ReassemblyRule reassembly_rule_from_name(const std::string& name) {
  if (name == "union") return ReassemblyRule::Union;
  if (name == "intersection") return ReassemblyRule::Intersection;
  if (name == "mean_threshold") return ReassemblyRule::MeanThreshold;
  throw DataError("unknown reassembly rule: " + name);
}

ReassembleResult reassemble(const Graph& g, std::span<const MixResult> per_node,
                            ReassemblyRule rule) {
  if (per_node.size() != g.n_nodes()) throw DataError("reassemble: need one result per node");
  const std::size_t n_edges = g.n_edges();
  // side 0 belongs to the min endpoint's ego, side 1 to the max endpoint's
  std::vector<std::array<char, 2>> kept_side(n_edges, {0, 0});
  std::vector<std::array<double, 2>> side_weight(n_edges, {0.0, 0.0});
  std::vector<double> keep_intent(g.n_nodes(), 0.0);

  for (std::size_t v = 0; v < per_node.size(); ++v) {
    const MixResult& mix = per_node[v];
    keep_intent[v] =
        static_cast<double>(mix.ego_edges.size()) * (1.0 - mix.s_node);
    for (std::size_t i = 0; i < mix.ego_edges.size(); ++i) {
      const EdgeId e = mix.ego_edges[i];
      const auto ends = g.edge_ends(e);
      const int side = static_cast<NodeId>(v) == ends[0] ? 0 : 1;
      side_weight[static_cast<std::size_t>(e)][side] = mix.a_hat[i];
      if (mix.kept_final[i]) kept_side[static_cast<std::size_t>(e)][side] = 1;
    }
  }

  auto merged_weight = [&](std::size_t e) {
    const auto ks = kept_side[e];
    const int sides = ks[0] + ks[1];
    if (sides == 0) return 0.0;
    double w = 0.0;
    if (ks[0]) w += side_weight[e][0];
    if (ks[1]) w += side_weight[e][1];
    return w / sides;
  };

  std::vector<char> final_kept(n_edges, 0);
  if (rule == ReassemblyRule::Union || rule == ReassemblyRule::Intersection) {
    for (std::size_t e = 0; e < n_edges; ++e) {
      const auto ks = kept_side[e];
      final_kept[e] = rule == ReassemblyRule::Union ? (ks[0] || ks[1]) : (ks[0] && ks[1]);
    }
  } else {
    double intent = 0.0;
    for (double v : keep_intent) intent += v;
    const std::size_t target = static_cast<std::size_t>(std::llround(intent / 2.0));
    std::vector<std::size_t> pool;
    pool.reserve(n_edges);
    for (std::size_t e = 0; e < n_edges; ++e)
      if (kept_side[e][0] || kept_side[e][1]) pool.push_back(e);
    std::sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) {
      const double wa = std::abs(merged_weight(a)), wb = std::abs(merged_weight(b));
      if (wa != wb) return wa > wb;
      return a < b;
    });
    for (std::size_t i = 0; i < pool.size() && i < target; ++i) final_kept[pool[i]] = 1;
    // a node whose whole neighborhood fell below the cut keeps its best edge
    std::vector<char> covered(g.n_nodes(), 0);
    for (std::size_t e = 0; e < n_edges; ++e)
      if (final_kept[e]) {
        const auto ends = g.edge_ends(static_cast<EdgeId>(e));
        covered[ends[0]] = 1;
        covered[ends[1]] = 1;
      }
    for (std::size_t e : pool) {
      const auto ends = g.edge_ends(static_cast<EdgeId>(e));
      if (!covered[ends[0]] || !covered[ends[1]]) {
        final_kept[e] = 1;
        covered[ends[0]] = 1;
        covered[ends[1]] = 1;
      }
    }
  }

  ReassembleResult res;
  for (std::size_t e = 0; e < n_edges; ++e) {
    if (!final_kept[e]) continue;
    const auto ends = g.edge_ends(static_cast<EdgeId>(e));
    res.edges.push_back({ends[0], ends[1], merged_weight(e)});
    res.edge_ids.push_back(static_cast<EdgeId>(e));
    res.side_kept.push_back(kept_side[e]);
  }
  res.achieved_sparsity =
      n_edges == 0 ? 0.0
                   : 1.0 - static_cast<double>(res.edges.size()) / static_cast<double>(n_edges);
  return res;
}

} // namespace mog

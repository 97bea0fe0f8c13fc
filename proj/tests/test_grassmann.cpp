#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mog/grassmann.hpp"
#include "oracles.hpp"

#include <numeric>

using namespace mog;

namespace {

Matrix path_laplacian(std::size_t n, bool normalized) {
  std::vector<LocalEdge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 1.0});
  return laplacian(n, edges, normalized);
}

Graph star_graph_unit(std::size_t leaves) {
  std::vector<EdgeTriple> edges;
  for (std::size_t i = 1; i <= leaves; ++i) edges.push_back({0, static_cast<NodeId>(i), 1.0});
  Matrix feats(leaves + 1, 2);
  return build_graph(leaves + 1, edges, std::move(feats));
}

SparseCandidate make_candidate(const EgoGraph& ego, std::vector<char> kept,
                               std::vector<double> scores) {
  SparseCandidate cand;
  cand.ego = &ego;
  cand.expert = 0;
  cand.scores = std::move(scores);
  cand.kept = std::move(kept);
  cand.kept_count = 0;
  for (char k : cand.kept) cand.kept_count += k;
  return cand;
}

} // namespace

TEST_CASE("spectral_embed: full basis trace, null vector, empty candidate") {
  const Matrix l = path_laplacian(5, true);
  const SpectralEmbedding full = spectral_embed(l, 5);
  // tr(U^T L U) over the full basis equals trace(L)
  const Matrix lu = matmul(l, full.u);
  double tr = 0.0;
  for (std::size_t j = 0; j < 5; ++j)
    for (std::size_t i = 0; i < 5; ++i) tr += full.u(i, j) * lu(i, j);
  double want = 0.0;
  for (std::size_t i = 0; i < 5; ++i) want += l(i, i);
  CHECK(tr == doctest::Approx(want).epsilon(1e-10));

  // connected candidate, p=1: the null vector gives a zero objective
  const SpectralEmbedding one = spectral_embed(l, 1);
  CHECK(one.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-10));

  // zero Laplacian -> identity columns
  const SpectralEmbedding zero = spectral_embed(Matrix(4, 4), 3);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(zero.u(i, j) == (i == j ? 1.0 : 0.0));

  CHECK_THROWS_AS(spectral_embed(l, 6), DataError);
}

TEST_CASE("embedding orthonormality and eigen residual") {
  RngStream rng(3, 0);
  for (int trial = 0; trial < 5; ++trial) {
    const auto triples = oracle::random_connected_edges(7, 0.3, rng);
    std::vector<LocalEdge> edges;
    for (const auto& t : triples)
      edges.push_back({static_cast<std::size_t>(t.u), static_cast<std::size_t>(t.v), 1.0});
    const Matrix l = laplacian(7, edges, true);
    const SpectralEmbedding emb = spectral_embed(l, 3);
    const Matrix gram = matmul(transpose(emb.u), emb.u);
    CHECK(max_abs_diff(gram, Matrix::identity(3)) < 1e-8);
    const Matrix lu = matmul(l, emb.u);
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t i = 0; i < 7; ++i)
        CHECK(std::abs(lu(i, j) - emb.eigenvalues[j] * emb.u(i, j)) < 1e-8);
  }
}

TEST_CASE("rayleigh-ritz: embedding beats 200 random orthonormal trials") {
  RngStream rng(5, 0);
  const auto triples = oracle::random_connected_edges(6, 0.4, rng);
  std::vector<LocalEdge> edges;
  for (const auto& t : triples)
    edges.push_back({static_cast<std::size_t>(t.u), static_cast<std::size_t>(t.v), 1.0});
  const Matrix l = laplacian(6, edges, true);
  const std::size_t p = 2;
  const SpectralEmbedding emb = spectral_embed(l, p);
  const auto trace_of = [&](const Matrix& u) {
    const Matrix lu = matmul(l, u);
    double tr = 0.0;
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t i = 0; i < 6; ++i) tr += u(i, j) * lu(i, j);
    return tr;
  };
  const double best = trace_of(emb.u);
  CHECK(best == doctest::Approx(emb.eigenvalues[0] + emb.eigenvalues[1]).epsilon(1e-10));
  for (int t = 0; t < 200; ++t) {
    const Matrix q = random_orthonormal(6, p, rng);
    CHECK(trace_of(q) >= best - 1e-9);
  }
}

TEST_CASE("proj_distance_sq: identity, orthogonal lines, rotation invariance") {
  Matrix u(2, 1);
  u(0, 0) = 1.0;
  const Matrix v = [&] {
    Matrix m(2, 1);
    m(1, 0) = 1.0;
    return m;
  }();
  CHECK(proj_distance_sq(u, u) == doctest::Approx(0.0));
  CHECK(proj_distance_sq(u, v) == doctest::Approx(1.0));

  RngStream rng(7, 0);
  const Matrix u1 = random_orthonormal(6, 3, rng);
  const Matrix u2 = random_orthonormal(6, 3, rng);
  const double base = proj_distance_sq(u1, u2);
  CHECK(base == doctest::Approx(proj_distance_sq(u2, u1)).epsilon(1e-10));
  CHECK(base >= 0.0);
  CHECK(base <= 3.0);
  // invariant under right rotation of U2
  const Matrix q = random_orthonormal(3, 3, rng);
  const Matrix rotated = matmul(u2, q);
  CHECK(proj_distance_sq(u1, rotated) == doctest::Approx(base).epsilon(1e-10));

  CHECK_THROWS_AS(proj_distance_sq(u1, Matrix(6, 2)), DataError);
}

TEST_CASE("candidate_laplacian: structural vs score-modulated") {
  const Graph g = star_graph_unit(3);
  const EgoGraph ego = ego_decompose(g, 0);
  const auto cand = make_candidate(ego, {1, 1, 0}, {0.2, -0.4, 3.0});
  const Matrix ls = candidate_laplacian(g, cand, false);
  CHECK(ls(0, 0) == 1.0);
  CHECK(ls(1, 1) == 1.0);
  CHECK(ls(3, 3) == 0.0); // dropped leaf is isolated
  CHECK(ls(0, 1) == doctest::Approx(-1.0 / std::sqrt(2.0)));

  // the normalized Laplacian is scale free, so modulation only shifts the
  // relative weighting of kept edges
  const Matrix lm = candidate_laplacian(g, cand, true);
  const double w1 = 1.0 / (1.0 + std::exp(-0.2));
  const double w2 = 1.0 / (1.0 + std::exp(0.4));
  CHECK(lm(0, 1) == doctest::Approx(-std::sqrt(w1 / (w1 + w2))).epsilon(1e-12));
}

TEST_CASE("ensemble: weight-zero identity and duplicate-candidate closed form") {
  const Graph g = star_graph_unit(4);
  const EgoGraph ego = ego_decompose(g, 0);
  const auto cand = make_candidate(ego, {1, 1, 1, 1}, {0.0, 0.0, 0.0, 0.0});
  const Matrix l = candidate_laplacian(g, cand, true);
  const SpectralEmbedding emb = spectral_embed(l, 2);

  // k=1 with E=0: L_hat = L_1
  std::vector<Matrix> laps{l};
  std::vector<SpectralEmbedding> embs{emb};
  std::vector<double> zero{0.0};
  CHECK(max_abs_diff(ensemble_laplacian(laps, embs, zero), l) < 1e-12);

  // two identical candidates with E=(0.5,0.5): L_hat = 2L - UU^T
  std::vector<Matrix> laps2{l, l};
  std::vector<SpectralEmbedding> embs2{emb, emb};
  std::vector<double> half{0.5, 0.5};
  const Matrix got = ensemble_laplacian(laps2, embs2, half);
  Matrix want(5, 5);
  add_scaled(want, 2.0, l);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      double proj = 0.0;
      for (std::size_t c = 0; c < 2; ++c) proj += emb.u(i, c) * emb.u(j, c);
      want(i, j) -= proj;
    }
  CHECK(max_abs_diff(got, want) < 1e-12);
}

TEST_CASE("closed form minimizes the mixed objective over random trials") {
  RngStream rng(11, 0);
  const Graph g = star_graph_unit(5);
  const EgoGraph ego = ego_decompose(g, 0);
  const std::size_t p = 2;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<char> kept_a(5, 1), kept_b(5, 1);
    kept_a[static_cast<std::size_t>(rng.next_below(5))] = 0;
    kept_b[static_cast<std::size_t>(rng.next_below(5))] = 0;
    std::vector<double> score_a(5), score_b(5);
    for (auto& s : score_a) s = rng.next_uniform(-1.0, 1.0);
    for (auto& s : score_b) s = rng.next_uniform(-1.0, 1.0);
    const auto ca = make_candidate(ego, kept_a, score_a);
    const auto cb = make_candidate(ego, kept_b, score_b);
    std::vector<Matrix> laps{candidate_laplacian(g, ca, true),
                             candidate_laplacian(g, cb, true)};
    std::vector<SpectralEmbedding> embs{spectral_embed(candidate_laplacian(g, ca, false), p),
                                        spectral_embed(candidate_laplacian(g, cb, false), p)};
    const double e0 = rng.next_uniform(0.1, 0.9);
    std::vector<double> gate{e0, 1.0 - e0};
    const Matrix l_hat = ensemble_laplacian(laps, embs, gate);
    const SpectralEmbedding best = spectral_embed(l_hat, p);
    const double opt = ensemble_objective(best.u, laps, embs, gate);
    for (int t = 0; t < 50; ++t) {
      const Matrix q = random_orthonormal(6, p, rng);
      CHECK(ensemble_objective(q, laps, embs, gate) >= opt - 1e-9);
    }
  }
}

TEST_CASE("post_sparsify: keep counts, tie rule, support restriction") {
  const Graph g = star_graph_unit(4);
  const EgoGraph ego = ego_decompose(g, 0);
  Matrix l_hat(5, 5);
  l_hat(0, 1) = -0.9;
  l_hat(1, 0) = -0.9;
  l_hat(0, 2) = -0.1;
  l_hat(2, 0) = -0.1;
  l_hat(0, 3) = -0.5;
  l_hat(3, 0) = -0.5;
  l_hat(0, 4) = 0.4; // negative consensus weight, |.| used for ranking
  l_hat(4, 0) = 0.4;

  // s_node = 0 keeps everything
  const MixResult all = post_sparsify(ego, l_hat, std::vector<double>{0.0, 0.0});
  CHECK(all.kept_count == 4);
  CHECK(all.s_node == 0.0);
  CHECK(all.a_hat == std::vector<double>{0.9, 0.1, 0.5, -0.4});

  // sparsities {0.4, 0.6}: s_node = 0.5, keep floor(4*0.5) = 2
  const MixResult half = post_sparsify(ego, l_hat, std::vector<double>{0.4, 0.6});
  CHECK(half.s_node == doctest::Approx(0.5));
  CHECK(half.kept_count == 2);
  CHECK(half.kept_final == std::vector<char>{1, 0, 1, 0}); // 0.9 and 0.5 win

  // all equal weights: lower canonical ids win
  Matrix flat(5, 5);
  for (std::size_t i = 1; i < 5; ++i) {
    flat(0, i) = -0.3;
    flat(i, 0) = -0.3;
  }
  const MixResult tied = post_sparsify(ego, flat, std::vector<double>{0.5, 0.5});
  CHECK(tied.kept_final == std::vector<char>{1, 1, 0, 0});

  // never drops to zero edges on a non-isolated ego
  const MixResult min1 = post_sparsify(ego, l_hat, std::vector<double>{0.99, 0.99});
  CHECK(min1.kept_count == 1);
}

TEST_CASE("reassemble union/intersection semantics") {
  // K3 where each node keeps exactly one incident edge, cyclically
  std::vector<EdgeTriple> tri{{0, 1, 1.0}, {0, 2, 1.0}, {1, 2, 1.0}};
  Matrix feats(3, 1);
  const Graph g = build_graph(3, tri, feats);
  // edges: 0=(0,1), 1=(0,2), 2=(1,2)
  std::vector<MixResult> mixes(3);
  const auto mix_for = [&](NodeId v, EdgeId keep_edge) {
    MixResult m;
    m.center = v;
    const EgoGraph ego = ego_decompose(g, v);
    m.ego_edges = ego.edges;
    m.a_hat.assign(ego.n_edges(), 0.5);
    m.kept_final.assign(ego.n_edges(), 0);
    for (std::size_t i = 0; i < ego.n_edges(); ++i)
      if (ego.edges[i] == keep_edge) m.kept_final[i] = 1;
    m.kept_count = 1;
    m.s_node = 0.5;
    return m;
  };
  mixes[0] = mix_for(0, 0); // node 0 keeps (0,1)
  mixes[1] = mix_for(1, 2); // node 1 keeps (1,2)
  mixes[2] = mix_for(2, 1); // node 2 keeps (0,2)

  const auto uni = reassemble(g, mixes, ReassemblyRule::Union);
  CHECK(uni.edges.size() == 3); // the cyclic pattern survives in full
  CHECK(uni.achieved_sparsity == doctest::Approx(0.0));

  const auto inter = reassemble(g, mixes, ReassemblyRule::Intersection);
  CHECK(inter.edges.empty());
}

TEST_CASE("reassemble merges weights: mean when both kept, single otherwise") {
  std::vector<EdgeTriple> pair{{0, 1, 1.0}};
  Matrix feats(2, 1);
  const Graph g = build_graph(2, pair, feats);
  std::vector<MixResult> mixes(2);
  for (NodeId v = 0; v < 2; ++v) {
    MixResult m;
    m.center = v;
    m.ego_edges = {0};
    m.a_hat = {v == 0 ? 0.8 : 0.4};
    m.kept_final = {1};
    m.kept_count = 1;
    m.s_node = 0.0;
    mixes[v] = m;
  }
  auto both = reassemble(g, mixes, ReassemblyRule::Union);
  CHECK(both.edges.size() == 1);
  CHECK(both.edges[0].w == doctest::Approx(0.6));

  mixes[1].kept_final = {0};
  auto single = reassemble(g, mixes, ReassemblyRule::Union);
  CHECK(single.edges.size() == 1);
  CHECK(single.edges[0].w == doctest::Approx(0.8));

  mixes[0].kept_final = {0};
  auto none = reassemble(g, mixes, ReassemblyRule::Union);
  CHECK(none.edges.empty());
  CHECK(none.achieved_sparsity == doctest::Approx(1.0));
}

TEST_CASE("mean_threshold hits the aggregate keep intent and never isolates") {
  RngStream rng(13, 0);
  const auto triples = oracle::random_connected_edges(40, 0.12, rng);
  Matrix feats(40, 1);
  const Graph g = build_graph(40, triples, feats);
  std::vector<MixResult> mixes(g.n_nodes());
  double intent = 0.0;
  for (std::size_t v = 0; v < g.n_nodes(); ++v) {
    const EgoGraph ego = ego_decompose(g, static_cast<NodeId>(v));
    MixResult m;
    m.center = static_cast<NodeId>(v);
    m.ego_edges = ego.edges;
    m.s_node = 0.4;
    m.a_hat.resize(ego.n_edges());
    for (auto& w : m.a_hat) w = rng.next_uniform(0.1, 1.0);
    m.kept_count = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(ego.n_edges() * (1.0 - m.s_node))));
    if (ego.n_edges() == 0) m.kept_count = 0;
    m.kept_final.assign(ego.n_edges(), 0);
    std::vector<std::size_t> order(ego.n_edges());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return m.a_hat[a] > m.a_hat[b]; });
    for (std::size_t i = 0; i < m.kept_count; ++i) m.kept_final[order[i]] = 1;
    intent += static_cast<double>(ego.n_edges()) * (1.0 - m.s_node);
    mixes[v] = m;
  }
  const auto res = reassemble(g, mixes, ReassemblyRule::MeanThreshold);
  const double target = intent / 2.0;
  CHECK(std::abs(static_cast<double>(res.edges.size()) - target) <=
        0.02 * static_cast<double>(g.n_edges()) + 2.0);
  // every node with an edge keeps at least one
  std::vector<char> covered(g.n_nodes(), 0);
  for (const auto& e : res.edges) {
    covered[e.u] = 1;
    covered[e.v] = 1;
  }
  for (std::size_t v = 0; v < g.n_nodes(); ++v)
    if (g.degree(static_cast<NodeId>(v)) > 0) CHECK(covered[v] == 1);
}

TEST_CASE("reassemble never invents edges") {
  RngStream rng(17, 0);
  const auto triples = oracle::random_connected_edges(12, 0.2, rng);
  Matrix feats(12, 1);
  const Graph g = build_graph(12, triples, feats);
  std::vector<MixResult> mixes(g.n_nodes());
  for (std::size_t v = 0; v < g.n_nodes(); ++v) {
    const EgoGraph ego = ego_decompose(g, static_cast<NodeId>(v));
    MixResult& m = mixes[v];
    m.center = static_cast<NodeId>(v);
    m.ego_edges = ego.edges;
    m.a_hat.assign(ego.n_edges(), 1.0);
    m.kept_final.assign(ego.n_edges(), 1);
    m.kept_count = ego.n_edges();
    m.s_node = 0.0;
  }
  for (auto rule : {ReassemblyRule::Union, ReassemblyRule::Intersection,
                    ReassemblyRule::MeanThreshold}) {
    const auto res = reassemble(g, mixes, rule);
    CHECK(res.edges.size() == g.n_edges()); // s=0 everywhere keeps everything
    for (const auto& id : res.edge_ids) CHECK(id < static_cast<EdgeId>(g.n_edges()));
  }
}

#include "mog/experts.hpp"

#include "mog/common.hpp"
#include "mog/io.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mog {

ExpertBank make_bank(std::span<const Criterion> criteria, std::span<const double> levels,
                     std::size_t feat_dim, std::size_t hidden, double gamma,
                     std::uint64_t seed) {
  if (criteria.empty() || levels.empty()) throw DataError("expert bank needs criteria and levels");
  if (hidden < 1) throw DataError("scorer hidden width must be >= 1");
  if (gamma < 0.0 || gamma >= 1.0 + 1e-12) throw DataError("gamma must lie in [0,1]");
  ExpertBank bank;
  bank.feat_dim = feat_dim;
  bank.hidden = hidden;
  bank.gamma = gamma;
  const std::size_t in_dim = 2 * feat_dim + 1;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    for (std::size_t l = 0; l < levels.size(); ++l) {
      if (levels[l] < 0.0 || levels[l] >= 1.0)
        throw DataError("sparsity level must lie in [0,1)");
      bank.experts.push_back({criteria[c], levels[l]});
      ScorerParams sp;
      sp.w1 = Matrix(in_dim, hidden);
      sp.b1.assign(hidden, 0.0);
      sp.w2.assign(hidden, 0.0);
      RngStream rng(seed, 0x73636f72ull + bank.experts.size()); // "scor" + expert idx
      const double a1 = 1.0 / std::sqrt(static_cast<double>(in_dim));
      for (auto& v : sp.w1.storage()) v = rng.next_uniform(-a1, a1);
      for (auto& v : sp.b1) v = rng.next_uniform(-a1, a1);
      const double a2 = 1.0 / std::sqrt(static_cast<double>(hidden));
      for (auto& v : sp.w2) v = rng.next_uniform(-a2, a2);
      sp.b2 = rng.next_uniform(-a2, a2);
      bank.scorers.push_back(std::move(sp));
    }
  }
  return bank;
}

namespace {

// z = concat(x_min, x_max, prior) for one ego edge
void fill_input(const Graph& g, const EgoGraph& ego, std::size_t edge_idx,
                std::span<const double> normalized_prior, std::vector<double>& z) {
  const EdgeId eid = ego.edges[edge_idx];
  const auto ends = g.edge_ends(eid);
  const std::size_t F = g.features().cols();
  z.resize(2 * F + 1);
  const auto xa = g.features().row(ends[0]);
  const auto xb = g.features().row(ends[1]);
  std::copy(xa.begin(), xa.end(), z.begin());
  std::copy(xb.begin(), xb.end(), z.begin() + static_cast<std::ptrdiff_t>(F));
  z[2 * F] = normalized_prior[static_cast<std::size_t>(eid)];
}

double scorer_forward(const ScorerParams& sp, std::span<const double> z,
                      std::vector<double>* hidden_out) {
  const std::size_t H = sp.w2.size();
  std::vector<double> h(H, 0.0);
  for (std::size_t f = 0; f < z.size(); ++f) {
    const double zv = z[f];
    if (zv == 0.0) continue;
    const auto w1row = sp.w1.row(f);
    for (std::size_t j = 0; j < H; ++j) h[j] += zv * w1row[j];
  }
  double score = sp.b2;
  for (std::size_t j = 0; j < H; ++j) {
    h[j] = std::max(0.0, h[j] + sp.b1[j]);
    score += sp.w2[j] * h[j];
  }
  if (hidden_out != nullptr) *hidden_out = std::move(h);
  return score;
}

} // namespace

std::vector<double> score_edges(const ExpertBank& bank, std::size_t expert,
                                const Graph& g, const EgoGraph& ego,
                                std::span<const double> normalized_prior) {
  if (expert >= bank.size()) throw DataError("score_edges: expert index out of range");
  if (normalized_prior.size() != g.n_edges())
    throw DataError("score_edges: prior vector size mismatch");
  const auto& sp = bank.scorers[expert];
  std::vector<double> scores(ego.n_edges());
  std::vector<double> z;
  for (std::size_t i = 0; i < ego.n_edges(); ++i) {
    fill_input(g, ego, i, normalized_prior, z);
    scores[i] = scorer_forward(sp, z, nullptr);
  }
  return scores;
}

SparseCandidate prune(const ExpertBank& bank, std::size_t expert, const EgoGraph& ego,
                      std::vector<double> scores) {
  if (scores.size() != ego.n_edges()) throw DataError("prune: scores do not cover ego edges");
  const double s = bank.experts[expert].sparsity;
  SparseCandidate cand;
  cand.ego = &ego;
  cand.expert = static_cast<int>(expert);
  cand.scores = std::move(scores);
  const std::size_t m = ego.n_edges();
  cand.kept.assign(m, 1);
  const std::size_t remove =
      std::min(m, static_cast<std::size_t>(std::ceil(static_cast<double>(m) * s)));
  if (remove > 0) {
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    // lowest score first; ties remove the higher canonical edge id first
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (cand.scores[a] != cand.scores[b]) return cand.scores[a] < cand.scores[b];
      return ego.edges[a] > ego.edges[b];
    });
    for (std::size_t i = 0; i < remove; ++i) cand.kept[order[i]] = 0;
  }
  cand.kept_count = m - remove;
  return cand;
}

ScorerGrads make_scorer_grads(const ExpertBank& bank) {
  ScorerGrads g;
  g.w1 = Matrix(2 * bank.feat_dim + 1, bank.hidden);
  g.b1.assign(bank.hidden, 0.0);
  g.w2.assign(bank.hidden, 0.0);
  g.b2 = 0.0;
  return g;
}

void prune_backward(const ExpertBank& bank, const SparseCandidate& candidate,
                    const Graph& g, std::span<const double> normalized_prior,
                    std::span<const double> d_scores, ScorerGrads& grads) {
  const EgoGraph& ego = *candidate.ego;
  if (d_scores.size() != ego.n_edges()) throw DataError("prune_backward: gradient size mismatch");
  const auto& sp = bank.scorers[static_cast<std::size_t>(candidate.expert)];
  const std::size_t H = bank.hidden;
  std::vector<double> z;
  std::vector<double> h;
  for (std::size_t i = 0; i < ego.n_edges(); ++i) {
    const double pass = candidate.kept[i] ? 1.0 : bank.gamma;
    const double ds = pass * d_scores[i];
    if (ds == 0.0) continue;
    fill_input(g, ego, i, normalized_prior, z);
    scorer_forward(sp, z, &h);
    grads.b2 += ds;
    for (std::size_t j = 0; j < H; ++j) {
      grads.w2[j] += ds * h[j];
      if (h[j] <= 0.0) continue; // relu gate
      const double dh = ds * sp.w2[j];
      grads.b1[j] += dh;
      for (std::size_t f = 0; f < z.size(); ++f) grads.w1(f, j) += dh * z[f];
    }
  }
}

void write_bank(const std::string& path, const ExpertBank& bank) {
  BlobFile blob;
  blob.meta["kind"] = "expert-bank";
  blob.meta["version"] = "1";
  blob.meta["feat_dim"] = std::to_string(bank.feat_dim);
  blob.meta["hidden"] = std::to_string(bank.hidden);
  blob.meta["gamma"] = format_double(bank.gamma);
  std::string tags, levels;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    if (i) {
      tags += ',';
      levels += ',';
    }
    tags += criterion_name(bank.experts[i].criterion);
    levels += format_double(bank.experts[i].sparsity);
  }
  blob.meta["criteria"] = tags;
  blob.meta["levels"] = levels;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const auto& sp = bank.scorers[i];
    const std::string prefix = "scorer" + std::to_string(i);
    blob.arrays.push_back({prefix + ".w1", {sp.w1.rows(), sp.w1.cols()}, sp.w1.storage()});
    blob.arrays.push_back({prefix + ".b1", {sp.b1.size()}, sp.b1});
    blob.arrays.push_back({prefix + ".w2", {sp.w2.size()}, sp.w2});
    blob.arrays.push_back({prefix + ".b2", {1}, {sp.b2}});
  }
  write_blob_file(path, blob);
}

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

} // namespace

ExpertBank read_bank(const std::string& path) {
  const BlobFile blob = read_blob_file(path);
  if (blob.meta_at("kind") != "expert-bank" || blob.meta_at("version") != "1")
    throw DataError(path + ": not an expert-bank v1 file");
  ExpertBank bank;
  bank.feat_dim = std::stoull(blob.meta_at("feat_dim"));
  bank.hidden = std::stoull(blob.meta_at("hidden"));
  bank.gamma = std::stod(blob.meta_at("gamma"));
  const auto tags = split_csv(blob.meta_at("criteria"));
  const auto levels = split_csv(blob.meta_at("levels"));
  if (tags.size() != levels.size()) throw DataError(path + ": criteria/levels length mismatch");
  for (std::size_t i = 0; i < tags.size(); ++i) {
    bank.experts.push_back({criterion_from_name(tags[i]), std::stod(levels[i])});
    const std::string prefix = "scorer" + std::to_string(i);
    ScorerParams sp;
    const auto& w1 = blob.array(prefix + ".w1");
    if (w1.dims.size() != 2) throw DataError(path + ": bad scorer shape");
    sp.w1 = Matrix(w1.dims[0], w1.dims[1]);
    sp.w1.storage() = w1.data;
    sp.b1 = blob.array(prefix + ".b1").data;
    sp.w2 = blob.array(prefix + ".w2").data;
    sp.b2 = blob.array(prefix + ".b2").data.at(0);
    bank.scorers.push_back(std::move(sp));
  }
  return bank;
}

} // namespace mog

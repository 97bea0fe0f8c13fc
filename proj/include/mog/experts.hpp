#pragma once

#include "mog/criteria.hpp"
#include "mog/graph.hpp"
#include "mog/rng.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mog {

struct ExpertConfig {
  Criterion criterion = Criterion::Degree;
  double sparsity = 0.0; // fraction of ego edges to remove, in [0,1)
};

/// Two affine layers (2F+1 -> hidden -> 1) with relu in between. The input is
/// concat(x_min, x_max, normalized prior), endpoints ordered min id first so
/// the score is symmetric in (i,j) by construction.
struct ScorerParams {
  Matrix w1;              // (2F+1) x hidden
  std::vector<double> b1; // hidden
  std::vector<double> w2; // hidden
  double b2 = 0.0;
};

struct ScorerGrads {
  Matrix w1;
  std::vector<double> b1;
  std::vector<double> w2;
  double b2 = 0.0;
};

/// K = |criteria| x |levels| sparsifier experts, each with its own scorer.
struct ExpertBank {
  std::vector<ExpertConfig> experts;
  std::vector<ScorerParams> scorers;
  std::size_t feat_dim = 0;
  std::size_t hidden = 16;
  double gamma = 0.1; // decayed pass factor for removed edges

  std::size_t size() const { return experts.size(); }
};

/// Bank layout: criteria-major, levels-minor, so every (criterion, level)
/// pair appears exactly once.
ExpertBank make_bank(std::span<const Criterion> criteria, std::span<const double> levels,
                     std::size_t feat_dim, std::size_t hidden, double gamma,
                     std::uint64_t seed);

/// One expert's scores for every ego edge (aligned with ego.edges).
/// `normalized_prior` is the whole-graph min-max normalized prior for the
/// expert's criterion.
std::vector<double> score_edges(const ExpertBank& bank, std::size_t expert,
                                const Graph& g, const EgoGraph& ego,
                                std::span<const double> normalized_prior);

struct SparseCandidate {
  const EgoGraph* ego = nullptr;
  int expert = 0;
  std::vector<double> scores;  // per ego edge
  std::vector<char> kept;      // per ego edge mask
  std::size_t kept_count = 0;
};

/// Removes the ceil(|E|*s) lowest-scored edges; score ties remove the higher
/// canonical edge id. s = 0 keeps everything.
SparseCandidate prune(const ExpertBank& bank, std::size_t expert, const EgoGraph& ego,
                      std::vector<double> scores);

/// Straight-through surrogate: kept edges pass their upstream score gradient
/// with factor 1, removed edges with factor gamma. Accumulates exact FFN
/// gradients into `grads` (recomputes the tiny forward internally).
void prune_backward(const ExpertBank& bank, const SparseCandidate& candidate,
                    const Graph& g, std::span<const double> normalized_prior,
                    std::span<const double> d_scores, ScorerGrads& grads);

ScorerGrads make_scorer_grads(const ExpertBank& bank);

void write_bank(const std::string& path, const ExpertBank& bank);
ExpertBank read_bank(const std::string& path);

} // namespace mog

#pragma once

#include "mog/criteria.hpp"
#include "mog/experts.hpp"
#include "mog/gnn.hpp"
#include "mog/grassmann.hpp"
#include "mog/routing.hpp"
#include "mog/sbm.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mog {

struct TrainConfig {
  std::vector<Criterion> criteria = {Criterion::Degree, Criterion::Jaccard,
                                     Criterion::EffectiveResistance,
                                     Criterion::GradientMagnitude};
  std::vector<double> sparsity_levels = {0.0, 0.1, 0.2};
  std::size_t k = 2;
  double lambda = 1e-2;
  std::size_t p = 4;
  double gamma = 0.1;
  std::size_t epochs = 50;
  double lr = 1e-2;
  std::uint64_t seed = 1;
  bool noise_on = true;
  ReassemblyRule reassembly = ReassemblyRule::MeanThreshold;
  GnnVariant gnn_variant = GnnVariant::Gcn;
  std::vector<std::size_t> gnn_hidden = {32};
  std::size_t classes = 0; // 0 = infer from labels
  OptimizerKind optimizer = OptimizerKind::Adam;
  std::size_t scorer_hidden = 16;
  ErMode er_mode = ErMode::Approx;
  double train_fraction = 0.6;
  double val_fraction = 0.2;
  std::size_t threads = 0; // 0 = hardware/env
  bool strict_stale_prior = false;
  std::size_t eigen_cap = 512;

  std::size_t n_experts() const { return criteria.size() * sparsity_levels.size(); }
  void validate() const;
};

/// Strict parsing: unknown keys are rejected so config typos cannot pass
/// silently. Accepts either a JSON file's contents or inline `key=value`
/// pairs separated by commas (numbers/bools/strings inferred).
TrainConfig parse_train_config_text(const std::string& text);
std::string train_config_to_json(const TrainConfig& cfg);
std::string config_hash(const TrainConfig& cfg);

struct MogState {
  TrainConfig cfg;
  RouterParams router;
  ExpertBank bank;
  GnnParams gnn;
  Optimizer opt;
  std::uint64_t epoch = 0;
};

MogState init_state(const TrainConfig& cfg, std::size_t feat_dim, std::size_t classes);

struct EpochMetrics {
  std::uint64_t epoch = 0;
  double task_loss = 0.0;
  double importance_loss = 0.0;
  double total_loss = 0.0;
  double achieved_sparsity = 0.0;
  double train_acc = 0.0, val_acc = 0.0, test_acc = 0.0;
  double usage_entropy = 0.0, usage_cv = 0.0;
};

struct SparsifyReport {
  Graph sparse;
  std::vector<GateDecision> gates;
  double achieved_sparsity = 0.0;
  std::vector<double> importance; // per expert
};

/// Drives the full per-epoch pipeline: decompose, route, prune per expert,
/// ensemble on the Grassmann manifold, post-sparsify, reassemble, GNN
/// forward/backward, combined update, and the edge-gradient cache refresh.
class Trainer {
public:
  Trainer(Graph& g, TrainConfig cfg);

  EpochMetrics run_epoch();
  SparsifyReport sparsify_only() const;

  MogState& state() { return state_; }
  const MogState& state() const { return state_; }
  const Split& split() const { return split_; }

private:
  Graph& g_;
  MogState state_;
  Split split_;
  std::vector<std::vector<double>> norm_priors_; // aligned with cfg.criteria
  void refresh_priors(bool initial);

  friend SparsifyReport mog_sparsify(const MogState& state, const Graph& g);
};

/// One deterministic decompose→route→prune→ensemble→reassemble pass with
/// noise off and no parameter updates.
SparsifyReport mog_sparsify(const MogState& state, const Graph& g);

/// Full-chain forward/backward at the current parameters without updating
/// anything; the gradient-checking surface. Noise follows cfg.noise_on with
/// the epoch-keyed stream, so repeated calls at fixed epoch see identical
/// draws and the loss is a deterministic function of the parameters.
struct PipelineGrads {
  double task_loss = 0.0;
  double importance_loss = 0.0;
  double total_loss = 0.0;
  GnnGrads gnn;
  RouterGrads router;
  std::vector<ScorerGrads> scorers;
};

PipelineGrads pipeline_gradients(const MogState& state, const Graph& g, const Split& split);
double pipeline_loss(const MogState& state, const Graph& g, const Split& split);

/// grad_cache, when given, rides along so a checkpoint replay on the same
/// graph sees the same gradient-magnitude prior as the training process did.
void write_checkpoint(const std::string& path, const MogState& state,
                      const std::vector<double>* grad_cache = nullptr);
MogState read_checkpoint(const std::string& path, std::vector<double>* grad_cache = nullptr);

std::string metrics_header();
std::string metrics_row(const EpochMetrics& m);

} // namespace mog

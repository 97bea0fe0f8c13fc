#include "mog/training.hpp"

#include "mog/common.hpp"
#include "mog/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mog {

using nlohmann::json;

void TrainConfig::validate() const {
  if (criteria.empty()) throw DataError("config: criteria must be non-empty");
  if (sparsity_levels.empty()) throw DataError("config: sparsity_levels must be non-empty");
  for (double s : sparsity_levels)
    if (s < 0.0 || s >= 1.0) throw DataError("config: sparsity levels must lie in [0,1)");
  if (k < 1 || k > n_experts()) throw DataError("config: k must satisfy 1 <= k <= K");
  if (lambda < 0.0) throw DataError("config: lambda must be >= 0");
  if (p < 1) throw DataError("config: p must be >= 1");
  if (gamma < 0.0 || gamma > 1.0) throw DataError("config: gamma must lie in [0,1]");
  if (lr <= 0.0) throw DataError("config: lr must be positive");
  if (gnn_hidden.empty()) throw DataError("config: gnn_hidden must be non-empty");
  if (scorer_hidden < 1) throw DataError("config: scorer_hidden must be >= 1");
  if (train_fraction <= 0.0 || train_fraction + val_fraction >= 1.0)
    throw DataError("config: invalid split fractions");
}

namespace {

json default_config_json() {
  const TrainConfig def;
  json j;
  j["criteria"] = json::array();
  for (auto c : def.criteria) j["criteria"].push_back(criterion_name(c));
  j["sparsity_levels"] = def.sparsity_levels;
  j["k"] = def.k;
  j["lambda"] = def.lambda;
  j["p"] = def.p;
  j["gamma"] = def.gamma;
  j["epochs"] = def.epochs;
  j["lr"] = def.lr;
  j["seed"] = def.seed;
  j["noise_on"] = def.noise_on;
  j["reassembly"] = reassembly_rule_name(def.reassembly);
  j["gnn_variant"] = gnn_variant_name(def.gnn_variant);
  j["gnn_hidden"] = def.gnn_hidden;
  j["classes"] = def.classes;
  j["optimizer"] = "adam";
  j["scorer_hidden"] = def.scorer_hidden;
  j["er_mode"] = "approx";
  j["train_fraction"] = def.train_fraction;
  j["val_fraction"] = def.val_fraction;
  j["threads"] = def.threads;
  j["strict_stale_prior"] = def.strict_stale_prior;
  j["eigen_cap"] = def.eigen_cap;
  return j;
}

json inline_pairs_to_json(const std::string& text) {
  json j = json::object();
  std::stringstream ss(text);
  std::string pair;
  while (std::getline(ss, pair, ',')) {
    if (pair.empty()) continue;
    const auto eq = pair.find('=');
    if (eq == std::string::npos) throw DataError("inline config expects key=value: " + pair);
    const std::string key = pair.substr(0, eq);
    const std::string value = pair.substr(eq + 1);
    json parsed;
    try {
      parsed = json::parse(value);
    } catch (const json::exception&) {
      parsed = value; // bare string
    }
    j[key] = parsed;
  }
  return j;
}

} // namespace

TrainConfig parse_train_config_text(const std::string& text) {
  json j;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw DataError(std::string("config: invalid JSON: ") + e.what());
    }
  } else {
    j = inline_pairs_to_json(text);
  }
  const json defaults = default_config_json();
  for (const auto& [key, value] : j.items())
    if (!defaults.contains(key)) throw DataError("config: unknown key '" + key + "'");

  TrainConfig cfg;
  try {
    if (j.contains("criteria")) {
      cfg.criteria.clear();
      for (const auto& c : j["criteria"]) cfg.criteria.push_back(criterion_from_name(c));
    }
    if (j.contains("sparsity_levels"))
      cfg.sparsity_levels = j["sparsity_levels"].get<std::vector<double>>();
    if (j.contains("k")) cfg.k = j["k"].get<std::size_t>();
    if (j.contains("lambda")) cfg.lambda = j["lambda"].get<double>();
    if (j.contains("p")) cfg.p = j["p"].get<std::size_t>();
    if (j.contains("gamma")) cfg.gamma = j["gamma"].get<double>();
    if (j.contains("epochs")) cfg.epochs = j["epochs"].get<std::size_t>();
    if (j.contains("lr")) cfg.lr = j["lr"].get<double>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("noise_on")) cfg.noise_on = j["noise_on"].get<bool>();
    if (j.contains("reassembly"))
      cfg.reassembly = reassembly_rule_from_name(j["reassembly"].get<std::string>());
    if (j.contains("gnn_variant"))
      cfg.gnn_variant = gnn_variant_from_name(j["gnn_variant"].get<std::string>());
    if (j.contains("gnn_hidden"))
      cfg.gnn_hidden = j["gnn_hidden"].get<std::vector<std::size_t>>();
    if (j.contains("classes")) cfg.classes = j["classes"].get<std::size_t>();
    if (j.contains("optimizer")) {
      const std::string o = j["optimizer"].get<std::string>();
      if (o == "adam")
        cfg.optimizer = OptimizerKind::Adam;
      else if (o == "sgd")
        cfg.optimizer = OptimizerKind::Sgd;
      else
        throw DataError("config: optimizer must be adam or sgd");
    }
    if (j.contains("scorer_hidden")) cfg.scorer_hidden = j["scorer_hidden"].get<std::size_t>();
    if (j.contains("er_mode")) {
      const std::string m = j["er_mode"].get<std::string>();
      if (m == "approx")
        cfg.er_mode = ErMode::Approx;
      else if (m == "exact")
        cfg.er_mode = ErMode::Exact;
      else
        throw DataError("config: er_mode must be approx or exact");
    }
    if (j.contains("train_fraction")) cfg.train_fraction = j["train_fraction"].get<double>();
    if (j.contains("val_fraction")) cfg.val_fraction = j["val_fraction"].get<double>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<std::size_t>();
    if (j.contains("strict_stale_prior"))
      cfg.strict_stale_prior = j["strict_stale_prior"].get<bool>();
    if (j.contains("eigen_cap")) cfg.eigen_cap = j["eigen_cap"].get<std::size_t>();
  } catch (const json::exception& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string train_config_to_json(const TrainConfig& cfg) {
  json j;
  j["criteria"] = json::array();
  for (auto c : cfg.criteria) j["criteria"].push_back(criterion_name(c));
  j["sparsity_levels"] = cfg.sparsity_levels;
  j["k"] = cfg.k;
  j["lambda"] = cfg.lambda;
  j["p"] = cfg.p;
  j["gamma"] = cfg.gamma;
  j["epochs"] = cfg.epochs;
  j["lr"] = cfg.lr;
  j["seed"] = cfg.seed;
  j["noise_on"] = cfg.noise_on;
  j["reassembly"] = reassembly_rule_name(cfg.reassembly);
  j["gnn_variant"] = gnn_variant_name(cfg.gnn_variant);
  j["gnn_hidden"] = cfg.gnn_hidden;
  j["classes"] = cfg.classes;
  j["optimizer"] = cfg.optimizer == OptimizerKind::Adam ? "adam" : "sgd";
  j["scorer_hidden"] = cfg.scorer_hidden;
  j["er_mode"] = cfg.er_mode == ErMode::Approx ? "approx" : "exact";
  j["train_fraction"] = cfg.train_fraction;
  j["val_fraction"] = cfg.val_fraction;
  j["threads"] = cfg.threads;
  j["strict_stale_prior"] = cfg.strict_stale_prior;
  j["eigen_cap"] = cfg.eigen_cap;
  return j.dump(); // object keys serialize sorted, so the dump is canonical
}

std::string config_hash(const TrainConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(train_config_to_json(cfg))));
  return buf;
}

MogState init_state(const TrainConfig& cfg, std::size_t feat_dim, std::size_t classes) {
  cfg.validate();
  if (classes < 1) throw DataError("init_state: need at least one class");
  MogState st;
  st.cfg = cfg;
  st.router = make_router(feat_dim, cfg.n_experts(), cfg.seed);
  st.bank = make_bank(cfg.criteria, cfg.sparsity_levels, feat_dim, cfg.scorer_hidden,
                      cfg.gamma, cfg.seed);
  st.gnn = make_gnn(cfg.gnn_variant, feat_dim, cfg.gnn_hidden, classes, cfg.seed);
  st.opt.kind = cfg.optimizer;
  st.epoch = 0;
  return st;
}

namespace {

struct NodeTape {
  EgoGraph ego;
  GateDecision gate;
  GateTape gate_tape;
  std::vector<SparseCandidate> candidates;
  std::vector<Matrix> u_mats;               // structural embeddings
  std::vector<std::vector<double>> w_mod;   // per candidate: w_e * sigmoid(score) per ego edge
  std::vector<double> d_center;             // per candidate: modulated center degree over kept
};

struct PipelineResult {
  std::vector<MixResult> mixes;
  std::vector<GateDecision> gates;
  std::vector<NodeTape> tapes; // only filled when requested
  ReassembleResult reassembled;
};

std::size_t criterion_slot(const TrainConfig& cfg, std::size_t expert) {
  return expert / cfg.sparsity_levels.size();
}

PipelineResult run_pipeline(const MogState& state, const Graph& g,
                            const std::vector<std::vector<double>>& norm_priors,
                            bool noise_on, std::uint64_t epoch, bool keep_tapes) {
  const TrainConfig& cfg = state.cfg;
  PipelineResult out;
  const std::size_t n = g.n_nodes();
  out.mixes.resize(n);
  out.gates.resize(n);
  if (keep_tapes) out.tapes.resize(n);

  for (std::size_t v = 0; v < n; ++v) {
    NodeTape local;
    local.ego = ego_decompose(g, static_cast<NodeId>(v));
    RngStream rng(cfg.seed + 0x9e3779b9ull * (epoch + 1), 0x6e6f6465ull + v);
    const auto x = g.features().row(v);
    const auto scores = gate_scores(state.router, x, noise_on, rng, &local.gate_tape);
    local.gate = select_topk(scores, cfg.k, static_cast<NodeId>(v));

    const std::size_t p_eff = std::min<std::size_t>(cfg.p, local.ego.n_local());
    std::vector<Matrix> laps;
    std::vector<SpectralEmbedding> embs;
    std::vector<double> sel_sparsity;
    laps.reserve(cfg.k);
    embs.reserve(cfg.k);
    for (std::size_t i = 0; i < cfg.k; ++i) {
      const std::size_t m = static_cast<std::size_t>(local.gate.experts[i]);
      const auto& prior = norm_priors[criterion_slot(cfg, m)];
      auto esc = score_edges(state.bank, m, g, local.ego, prior);
      SparseCandidate cand = prune(state.bank, m, local.ego, std::move(esc));
      const Matrix l_struct = candidate_laplacian(g, cand, false);
      embs.push_back(spectral_embed(l_struct, p_eff));
      laps.push_back(candidate_laplacian(g, cand, true));
      sel_sparsity.push_back(state.bank.experts[m].sparsity);

      if (keep_tapes) {
        std::vector<double> wmod(local.ego.n_edges());
        double dc = 0.0;
        for (std::size_t eidx = 0; eidx < local.ego.n_edges(); ++eidx) {
          const double w = g.edge_weight(local.ego.edges[eidx]);
          const double sig = 1.0 / (1.0 + std::exp(-cand.scores[eidx]));
          wmod[eidx] = w * sig;
          if (cand.kept[eidx]) dc += wmod[eidx];
        }
        local.w_mod.push_back(std::move(wmod));
        local.d_center.push_back(dc);
        local.u_mats.push_back(embs.back().u);
      }
      local.candidates.push_back(std::move(cand));
    }
    const Matrix l_hat = ensemble_laplacian(laps, embs, local.gate.weights);
    out.mixes[v] = post_sparsify(local.ego, l_hat, sel_sparsity);
    out.gates[v] = local.gate;
    if (keep_tapes) {
      out.tapes[v] = std::move(local);
      // candidates were built against the stack-local ego; re-point them at
      // the moved-to storage
      for (auto& cand : out.tapes[v].candidates) cand.ego = &out.tapes[v].ego;
    }
  }
  out.reassembled = reassemble(g, out.mixes, cfg.reassembly);
  return out;
}

/// scorer-score gradients for one candidate given dL/dA_hat on its ego edges.
/// Kept edges get the exact chain through the normalized star Laplacian;
/// removed edges get the kept-like local linearization (prune_backward then
/// applies the gamma pass factor).
std::vector<double> candidate_score_gradient(const Graph& g, const EgoGraph& ego,
                                             const SparseCandidate& cand,
                                             std::span<const double> w_mod, double d_center,
                                             std::span<const double> d_a_hat) {
  const std::size_t m = ego.n_edges();
  std::vector<double> d_score(m, 0.0);
  if (m == 0 || d_center <= 1e-300) return d_score;
  // dL_m(0,j+1) = -d_a_hat[j]; L_m(0,j+1) = -sqrt(w_mod_j / d_center) for kept j
  double shared = 0.0; // sum over kept i of dLm_i * sqrt(w_i)
  for (std::size_t i = 0; i < m; ++i) {
    if (!cand.kept[i] || w_mod[i] <= 1e-300) continue;
    shared += -d_a_hat[i] * std::sqrt(w_mod[i]);
  }
  const double d15 = d_center * std::sqrt(d_center);
  for (std::size_t j = 0; j < m; ++j) {
    if (w_mod[j] <= 1e-300) continue;
    const double dlm = -d_a_hat[j];
    double dw = dlm * (-1.0 / (2.0 * std::sqrt(w_mod[j] * d_center)));
    if (cand.kept[j]) dw += shared / (2.0 * d15);
    // w_mod = w_e * sigmoid(score): chain through the sigmoid
    const double w_e = g.edge_weight(ego.edges[j]);
    const double sig = w_e != 0.0 ? w_mod[j] / w_e : 0.0;
    d_score[j] = dw * w_e * sig * (1.0 - sig);
  }
  return d_score;
}

} // namespace

Trainer::Trainer(Graph& g, TrainConfig cfg) : g_(g) {
  cfg.validate();
  if (!g.has_features()) throw DataError("trainer: graph has no features");
  set_thread_count(cfg.threads);
  std::size_t classes = cfg.classes;
  if (classes == 0) classes = static_cast<std::size_t>(std::max(g.n_classes(), 2));
  state_ = init_state(cfg, g.features().cols(), classes);
  split_ = make_split(g.n_nodes(), cfg.train_fraction, cfg.val_fraction, cfg.seed);
  norm_priors_.resize(cfg.criteria.size());
  refresh_priors(true);
}

void Trainer::refresh_priors(bool initial) {
  const TrainConfig& cfg = state_.cfg;
  for (std::size_t c = 0; c < cfg.criteria.size(); ++c) {
    if (!initial && cfg.criteria[c] != Criterion::GradientMagnitude)
      continue; // static priors are computed once
    const EdgePrior prior = compute_prior(g_, cfg.criteria[c], cfg.er_mode);
    norm_priors_[c] = normalize_prior(prior.values);
  }
}

namespace {

struct EpochCore {
  PipelineResult pipe;
  Matrix logits;
  double task_loss = 0.0;
  double importance_loss = 0.0;
  double total_loss = 0.0;
  std::vector<double> importance;
  GnnGrads gnn_grads;
  RouterGrads router_grads;
  std::vector<ScorerGrads> scorer_grads;
};

/// The shared forward + full-chain backward; mutates nothing.
EpochCore compute_epoch_core(const MogState& state, const Graph& g,
                             const std::vector<std::vector<double>>& priors,
                             const Split& split, bool noise_on, std::uint64_t epoch) {
  const TrainConfig& cfg = state.cfg;
  if (!g.has_labels()) throw DataError("training: graph has no labels");
  EpochCore core;
  core.pipe = run_pipeline(state, g, priors, noise_on, epoch, true);

  Graph sparse = subgraph_with_edges(g, core.pipe.reassembled.edges);
  if (sparse.n_edges() != core.pipe.reassembled.edges.size())
    throw NumericError("training: reassembled edge set is not canonical");

  const SparseOp op = build_operator(sparse, cfg.gnn_variant);
  GnnTape tape;
  core.logits = gnn_forward(state.gnn, op, g.features(), tape);
  Matrix d_logits;
  core.task_loss = masked_cross_entropy(core.logits, sparse.labels(), split.train, &d_logits);
  core.gnn_grads = make_gnn_grads(state.gnn, op.n_edges);
  gnn_backward(state.gnn, op, tape, d_logits, core.gnn_grads);

  const std::size_t K = cfg.n_experts();
  core.importance = importance_vector(core.pipe.gates, K);
  core.importance_loss = importance_loss(core.pipe.gates, K);
  const auto d_importance = importance_loss_backward(core.importance);

  core.total_loss = core.task_loss + cfg.lambda * core.importance_loss;
  if (!std::isfinite(core.total_loss)) throw NumericError("training: non-finite loss");

  // ---- backward through reassembly into per-node dA_hat ----
  std::vector<std::vector<double>> d_a_hat(g.n_nodes());
  for (std::size_t v = 0; v < g.n_nodes(); ++v)
    d_a_hat[v].assign(core.pipe.mixes[v].ego_edges.size(), 0.0);

  auto ego_index_of = [&](NodeId node, EdgeId e) -> std::size_t {
    const auto& edges = core.pipe.mixes[static_cast<std::size_t>(node)].ego_edges;
    const auto it = std::find(edges.begin(), edges.end(), e);
    return static_cast<std::size_t>(it - edges.begin());
  };
  for (std::size_t i = 0; i < core.pipe.reassembled.edge_ids.size(); ++i) {
    const EdgeId e = core.pipe.reassembled.edge_ids[i];
    const auto sides = core.pipe.reassembled.side_kept[i];
    const int nsides = sides[0] + sides[1];
    if (nsides == 0) continue;
    const double dw = core.gnn_grads.edge_weight[i] / nsides;
    const auto ends = g.edge_ends(e);
    if (sides[0]) d_a_hat[ends[0]][ego_index_of(ends[0], e)] += dw;
    if (sides[1]) d_a_hat[ends[1]][ego_index_of(ends[1], e)] += dw;
  }

  // ---- per-node backward: gate weights, scorer scores ----
  core.router_grads.w_gate = Matrix(state.router.feat_dim(), K);
  core.router_grads.w_noise = Matrix(state.router.feat_dim(), K);
  core.scorer_grads.reserve(K);
  for (std::size_t m = 0; m < K; ++m) core.scorer_grads.push_back(make_scorer_grads(state.bank));

  for (std::size_t v = 0; v < g.n_nodes(); ++v) {
    NodeTape& nt = core.pipe.tapes[v];
    const auto& da = d_a_hat[v];
    const std::size_t n_ego = nt.ego.n_edges();
    std::vector<double> d_gate(cfg.k, 0.0);
    for (std::size_t i = 0; i < cfg.k; ++i) {
      const std::size_t m = static_cast<std::size_t>(nt.gate.experts[i]);
      // dE through the ensemble: sum over read positions of dA_hat * (U U^T)
      const Matrix& u = nt.u_mats[i];
      double de = 0.0;
      for (std::size_t j = 0; j < n_ego; ++j) {
        if (da[j] == 0.0) continue;
        double proj = 0.0;
        for (std::size_t c = 0; c < u.cols(); ++c) proj += u(0, c) * u(j + 1, c);
        de += da[j] * proj;
      }
      de += cfg.lambda * d_importance[m];
      d_gate[i] = de;

      const auto d_scores = candidate_score_gradient(g, nt.ego, nt.candidates[i],
                                                     nt.w_mod[i], nt.d_center[i], da);
      prune_backward(state.bank, nt.candidates[i], g, priors[criterion_slot(cfg, m)],
                     d_scores, core.scorer_grads[m]);
    }
    route_backward(state.router, g.features().row(v), nt.gate, nt.gate_tape, d_gate,
                   core.router_grads);
  }
  return core;
}

std::vector<std::vector<double>> priors_for(const TrainConfig& cfg, const Graph& g) {
  std::vector<std::vector<double>> priors(cfg.criteria.size());
  for (std::size_t c = 0; c < cfg.criteria.size(); ++c)
    priors[c] = normalize_prior(compute_prior(g, cfg.criteria[c], cfg.er_mode).values);
  return priors;
}

} // namespace

EpochMetrics Trainer::run_epoch() {
  const TrainConfig& cfg = state_.cfg;
  refresh_priors(false);
  EpochCore core =
      compute_epoch_core(state_, g_, norm_priors_, split_, cfg.noise_on, state_.epoch);

  // ---- one combined optimizer step ----
  const std::size_t K = cfg.n_experts();
  state_.opt.begin_step();
  std::size_t slot = 0;
  gnn_apply_update(state_.gnn, core.gnn_grads, state_.opt, cfg.lr, slot);
  slot += gnn_param_slots(state_.gnn);
  state_.opt.update(slot++, state_.router.w_gate.storage(), core.router_grads.w_gate.storage(),
                    cfg.lr);
  state_.opt.update(slot++, state_.router.w_noise.storage(),
                    core.router_grads.w_noise.storage(), cfg.lr);
  for (std::size_t m = 0; m < K; ++m) {
    auto& sp = state_.bank.scorers[m];
    auto& sg = core.scorer_grads[m];
    state_.opt.update(slot++, sp.w1.storage(), sg.w1.storage(), cfg.lr);
    state_.opt.update(slot++, sp.b1, sg.b1, cfg.lr);
    state_.opt.update(slot++, sp.w2, sg.w2, cfg.lr);
    double b2[1] = {sp.b2};
    const double gb2[1] = {sg.b2};
    state_.opt.update(slot++, std::span<double>(b2, 1), std::span<const double>(gb2, 1),
                      cfg.lr);
    sp.b2 = b2[0];
  }

  // ---- refresh the edge-gradient cache for the next epoch's prior ----
  std::vector<double> cache(g_.n_edges(), 0.0);
  for (std::size_t i = 0; i < core.pipe.reassembled.edge_ids.size(); ++i)
    cache[static_cast<std::size_t>(core.pipe.reassembled.edge_ids[i])] =
        std::abs(core.gnn_grads.edge_weight[i]);
  g_.set_grad_cache(std::move(cache));

  EpochMetrics metrics;
  metrics.epoch = state_.epoch;
  metrics.task_loss = core.task_loss;
  metrics.importance_loss = core.importance_loss;
  metrics.total_loss = core.total_loss;
  metrics.achieved_sparsity = core.pipe.reassembled.achieved_sparsity;
  metrics.train_acc = accuracy(core.logits, g_.labels(), split_.train);
  metrics.val_acc = accuracy(core.logits, g_.labels(), split_.val);
  metrics.test_acc = accuracy(core.logits, g_.labels(), split_.test);
  metrics.usage_entropy = usage_entropy(core.importance);
  metrics.usage_cv = usage_cv(core.importance);
  ++state_.epoch;
  return metrics;
}

PipelineGrads pipeline_gradients(const MogState& state, const Graph& g, const Split& split) {
  const auto priors = priors_for(state.cfg, g);
  EpochCore core =
      compute_epoch_core(state, g, priors, split, state.cfg.noise_on, state.epoch);
  PipelineGrads out;
  out.task_loss = core.task_loss;
  out.importance_loss = core.importance_loss;
  out.total_loss = core.total_loss;
  out.gnn = std::move(core.gnn_grads);
  out.router = std::move(core.router_grads);
  out.scorers = std::move(core.scorer_grads);
  return out;
}

double pipeline_loss(const MogState& state, const Graph& g, const Split& split) {
  return pipeline_gradients(state, g, split).total_loss;
}

SparsifyReport Trainer::sparsify_only() const { return mog_sparsify(state_, g_); }

SparsifyReport mog_sparsify(const MogState& state, const Graph& g) {
  const TrainConfig& cfg = state.cfg;
  if (!g.has_features()) throw DataError("sparsify: graph has no features");
  if (g.features().cols() != state.router.feat_dim())
    throw DataError("sparsify: feature width does not match the trained state");
  std::vector<std::vector<double>> norm_priors(cfg.criteria.size());
  for (std::size_t c = 0; c < cfg.criteria.size(); ++c) {
    const EdgePrior prior = compute_prior(g, cfg.criteria[c], cfg.er_mode);
    if (prior.stale && cfg.strict_stale_prior)
      throw DataError("sparsify: gradient-magnitude prior is stale (strict mode)");
    norm_priors[c] = normalize_prior(prior.values);
  }
  PipelineResult pipe = run_pipeline(state, g, norm_priors, false, state.epoch, false);
  SparsifyReport report;
  report.sparse = subgraph_with_edges(g, pipe.reassembled.edges);
  report.gates = std::move(pipe.gates);
  report.achieved_sparsity = pipe.reassembled.achieved_sparsity;
  report.importance = importance_vector(report.gates, cfg.n_experts());
  return report;
}

void write_checkpoint(const std::string& path, const MogState& state,
                      const std::vector<double>* grad_cache) {
  BlobFile blob;
  blob.meta["kind"] = "mog-checkpoint";
  blob.meta["version"] = "1";
  blob.meta["config"] = train_config_to_json(state.cfg);
  blob.meta["config_hash"] = config_hash(state.cfg);
  blob.meta["epoch"] = std::to_string(state.epoch);
  blob.meta["feat_dim"] = std::to_string(state.router.feat_dim());
  blob.meta["classes"] = std::to_string(state.gnn.n_classes());
  blob.meta["variant"] = gnn_variant_name(state.gnn.variant);
  blob.meta["seed"] = std::to_string(state.cfg.seed);

  if (grad_cache != nullptr && !grad_cache->empty()) {
    blob.meta["grad_cache_edges"] = std::to_string(grad_cache->size());
    blob.arrays.push_back({"grad_cache", {grad_cache->size()},
                           std::vector<double>(grad_cache->begin(), grad_cache->end())});
  }
  blob.arrays.push_back({"router.wg",
                         {state.router.w_gate.rows(), state.router.w_gate.cols()},
                         state.router.w_gate.storage()});
  blob.arrays.push_back({"router.wn",
                         {state.router.w_noise.rows(), state.router.w_noise.cols()},
                         state.router.w_noise.storage()});
  for (std::size_t l = 0; l < state.gnn.n_layers(); ++l) {
    const std::string prefix = "gnn.layer" + std::to_string(l);
    blob.arrays.push_back({prefix + ".w",
                           {state.gnn.w[l].rows(), state.gnn.w[l].cols()},
                           state.gnn.w[l].storage()});
    blob.arrays.push_back({prefix + ".b", {state.gnn.b[l].size()}, state.gnn.b[l]});
  }
  blob.arrays.push_back({"gnn.head.w",
                         {state.gnn.w_head.rows(), state.gnn.w_head.cols()},
                         state.gnn.w_head.storage()});
  blob.arrays.push_back({"gnn.head.b", {state.gnn.b_head.size()}, state.gnn.b_head});
  for (std::size_t m = 0; m < state.bank.size(); ++m) {
    const auto& sp = state.bank.scorers[m];
    const std::string prefix = "scorer" + std::to_string(m);
    blob.arrays.push_back({prefix + ".w1", {sp.w1.rows(), sp.w1.cols()}, sp.w1.storage()});
    blob.arrays.push_back({prefix + ".b1", {sp.b1.size()}, sp.b1});
    blob.arrays.push_back({prefix + ".w2", {sp.w2.size()}, sp.w2});
    blob.arrays.push_back({prefix + ".b2", {1}, {sp.b2}});
  }
  write_blob_file(path, blob);
}

MogState read_checkpoint(const std::string& path, std::vector<double>* grad_cache) {
  const BlobFile blob = read_blob_file(path);
  if (blob.meta_at("kind") != "mog-checkpoint" || blob.meta_at("version") != "1")
    throw DataError(path + ": not a mog-checkpoint v1 file");
  if (grad_cache != nullptr) {
    grad_cache->clear();
    if (blob.meta.contains("grad_cache_edges")) *grad_cache = blob.array("grad_cache").data;
  }
  const TrainConfig cfg = parse_train_config_text(blob.meta_at("config"));
  const std::size_t feat_dim = std::stoull(blob.meta_at("feat_dim"));
  const std::size_t classes = std::stoull(blob.meta_at("classes"));
  MogState st = init_state(cfg, feat_dim, classes);
  st.epoch = std::stoull(blob.meta_at("epoch"));

  auto load_matrix = [&](const std::string& name, Matrix& m) {
    const auto& a = blob.array(name);
    if (a.dims.size() != 2 || a.dims[0] != m.rows() || a.dims[1] != m.cols())
      throw DataError(path + ": array shape mismatch for " + name);
    m.storage() = a.data;
  };
  auto load_vector = [&](const std::string& name, std::vector<double>& v) {
    const auto& a = blob.array(name);
    if (a.count() != v.size()) throw DataError(path + ": array size mismatch for " + name);
    v = a.data;
  };
  load_matrix("router.wg", st.router.w_gate);
  load_matrix("router.wn", st.router.w_noise);
  for (std::size_t l = 0; l < st.gnn.n_layers(); ++l) {
    const std::string prefix = "gnn.layer" + std::to_string(l);
    load_matrix(prefix + ".w", st.gnn.w[l]);
    load_vector(prefix + ".b", st.gnn.b[l]);
  }
  load_matrix("gnn.head.w", st.gnn.w_head);
  load_vector("gnn.head.b", st.gnn.b_head);
  for (std::size_t m = 0; m < st.bank.size(); ++m) {
    const std::string prefix = "scorer" + std::to_string(m);
    load_matrix(prefix + ".w1", st.bank.scorers[m].w1);
    load_vector(prefix + ".b1", st.bank.scorers[m].b1);
    load_vector(prefix + ".w2", st.bank.scorers[m].w2);
    st.bank.scorers[m].b2 = blob.array(prefix + ".b2").data.at(0);
  }
  return st;
}

std::string metrics_header() {
  return "epoch task_loss importance_loss total_loss achieved_sparsity train_acc val_acc "
         "test_acc usage_entropy usage_cv";
}

std::string metrics_row(const EpochMetrics& m) {
  std::string row = std::to_string(m.epoch);
  for (double v : {m.task_loss, m.importance_loss, m.total_loss, m.achieved_sparsity,
                   m.train_acc, m.val_acc, m.test_acc, m.usage_entropy, m.usage_cv}) {
    row += ' ';
    row += format_double(v);
  }
  return row;
}

} // namespace mog

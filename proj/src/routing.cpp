#include "mog/routing.hpp"

#include "mog/common.hpp"
#include "mog/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mog {

RouterParams make_router(std::size_t feat_dim, std::size_t n_experts, std::uint64_t seed) {
  RouterParams p;
  p.w_gate = Matrix(feat_dim, n_experts);
  p.w_noise = Matrix(feat_dim, n_experts);
  const double a = 1.0 / std::sqrt(static_cast<double>(feat_dim ? feat_dim : 1));
  RngStream rng(seed, 0x726f7574ull); // "rout"
  for (auto& v : p.w_gate.storage()) v = rng.next_uniform(-a, a);
  for (auto& v : p.w_noise.storage()) v = rng.next_uniform(-a, a);
  return p;
}

std::vector<double> gate_scores(const RouterParams& params, std::span<const double> x,
                                bool noise_on, RngStream& rng, GateTape* tape) {
  const std::size_t F = params.feat_dim();
  const std::size_t K = params.n_experts();
  if (x.size() != F) throw DataError("gate_scores: feature width mismatch");
  for (double v : x)
    if (!std::isfinite(v)) throw DataError("gate_scores: non-finite feature entry");

  std::vector<double> psi(K, 0.0);
  for (std::size_t f = 0; f < F; ++f) {
    const double xv = x[f];
    if (xv == 0.0) continue;
    kernels::axpy(psi.data(), xv, params.w_gate.row(f).data(), K);
  }
  if (tape != nullptr) {
    tape->noise.clear();
    tape->noise_inputs.clear();
  }
  if (!noise_on) return psi;

  std::vector<double> zn(K, 0.0);
  for (std::size_t f = 0; f < F; ++f) {
    const double xv = x[f];
    if (xv == 0.0) continue;
    kernels::axpy(zn.data(), xv, params.w_noise.row(f).data(), K);
  }
  std::vector<double> eps(K);
  for (std::size_t m = 0; m < K; ++m) eps[m] = rng.next_normal();
  for (std::size_t m = 0; m < K; ++m) {
    // softplus with the usual overflow guard
    const double sp = zn[m] > 30.0 ? zn[m] : std::log1p(std::exp(zn[m]));
    psi[m] += eps[m] * sp;
  }
  if (tape != nullptr) {
    tape->noise = std::move(eps);
    tape->noise_inputs = std::move(zn);
  }
  return psi;
}

GateDecision select_topk(std::span<const double> scores, std::size_t k, std::int32_t node) {
  const std::size_t K = scores.size();
  if (k < 1 || k > K) throw DataError("select_topk: k out of range");
  std::vector<int> idx(K);
  std::iota(idx.begin(), idx.end(), 0);
  // descending score, ties won by the lower index
  std::stable_sort(idx.begin(), idx.end(),
                   [&scores](int a, int b) { return scores[a] > scores[b]; });
  GateDecision d;
  d.node = node;
  d.experts.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
  d.weights.resize(k);
  double mx = scores[d.experts[0]];
  double z = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    d.weights[i] = std::exp(scores[d.experts[i]] - mx);
    z += d.weights[i];
  }
  for (auto& w : d.weights) w /= z;
  return d;
}

std::vector<double> importance_vector(std::span<const GateDecision> decisions, std::size_t K) {
  std::vector<double> imp(K, 0.0);
  for (const auto& d : decisions)
    for (std::size_t i = 0; i < d.experts.size(); ++i)
      imp[static_cast<std::size_t>(d.experts[i])] += d.weights[i];
  return imp;
}

double importance_loss(std::span<const GateDecision> decisions, std::size_t K) {
  if (decisions.empty()) throw DataError("importance_loss: no decisions");
  if (K < 2) throw DataError("importance_loss: need K >= 2");
  const auto imp = importance_vector(decisions, K);
  const double cv = usage_cv(imp);
  return cv * cv;
}

std::vector<double> importance_loss_backward(std::span<const double> importance) {
  const std::size_t K = importance.size();
  std::vector<double> grad(K, 0.0);
  double mean = 0.0;
  for (double v : importance) mean += v;
  mean /= static_cast<double>(K);
  if (mean == 0.0) return grad; // degenerate case pinned to loss 0
  double var = 0.0;
  for (double v : importance) var += (v - mean) * (v - mean);
  var /= static_cast<double>(K);
  // CV^2 = var / mean^2
  for (std::size_t m = 0; m < K; ++m) {
    const double dvar = 2.0 * (importance[m] - mean) / static_cast<double>(K);
    const double dmean = 1.0 / static_cast<double>(K);
    grad[m] = dvar / (mean * mean) - 2.0 * var * dmean / (mean * mean * mean);
  }
  return grad;
}

std::vector<double> selected_softmax_backward(const GateDecision& decision,
                                              std::span<const double> d_weights) {
  const std::size_t k = decision.weights.size();
  if (d_weights.size() != k) throw DataError("selected_softmax_backward: size mismatch");
  double inner = 0.0;
  for (std::size_t i = 0; i < k; ++i) inner += d_weights[i] * decision.weights[i];
  std::vector<double> d_scores(k);
  for (std::size_t i = 0; i < k; ++i)
    d_scores[i] = decision.weights[i] * (d_weights[i] - inner);
  return d_scores;
}

void route_backward(const RouterParams& params, std::span<const double> x,
                    const GateDecision& decision, const GateTape& tape,
                    std::span<const double> d_weights, RouterGrads& grads) {
  if (grads.w_gate.rows() != params.feat_dim() || grads.w_gate.cols() != params.n_experts()) {
    grads.w_gate = Matrix(params.feat_dim(), params.n_experts());
    grads.w_noise = Matrix(params.feat_dim(), params.n_experts());
  }
  const auto d_scores = selected_softmax_backward(decision, d_weights);
  const bool noisy = !tape.noise.empty();
  for (std::size_t i = 0; i < decision.experts.size(); ++i) {
    const std::size_t m = static_cast<std::size_t>(decision.experts[i]);
    const double ds = d_scores[i];
    if (ds == 0.0) continue;
    for (std::size_t f = 0; f < params.feat_dim(); ++f)
      grads.w_gate(f, m) += ds * x[f];
    if (noisy) {
      const double z = tape.noise_inputs[m];
      const double sig = 1.0 / (1.0 + std::exp(-z));
      const double coef = ds * tape.noise[m] * sig;
      for (std::size_t f = 0; f < params.feat_dim(); ++f)
        grads.w_noise(f, m) += coef * x[f];
    }
  }
}

double usage_entropy(std::span<const double> importance) {
  double total = 0.0;
  for (double v : importance) total += v;
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double v : importance) {
    if (v <= 0.0) continue;
    const double p = v / total;
    h -= p * std::log(p);
  }
  return h;
}

double usage_cv(std::span<const double> importance) {
  const std::size_t K = importance.size();
  if (K == 0) return 0.0;
  double mean = 0.0;
  for (double v : importance) mean += v;
  mean /= static_cast<double>(K);
  if (mean == 0.0) return 0.0;
  double var = 0.0;
  for (double v : importance) var += (v - mean) * (v - mean);
  var /= static_cast<double>(K);
  return std::sqrt(var) / mean;
}

} // namespace mog

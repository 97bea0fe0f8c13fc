#pragma once

#include "mog/dense.hpp"
#include "mog/rng.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace mog {

/// Noisy top-k gate parameters; both matrices are F x K so scores come out
/// as x * W with x a feature row.
struct RouterParams {
  Matrix w_gate;  // clean scores
  Matrix w_noise; // noise scale (through softplus)

  std::size_t feat_dim() const { return w_gate.rows(); }
  std::size_t n_experts() const { return w_gate.cols(); }
};

RouterParams make_router(std::size_t feat_dim, std::size_t n_experts, std::uint64_t seed);

struct GateDecision {
  std::int32_t node = 0;
  std::vector<int> experts;    // k distinct indices, descending score
  std::vector<double> weights; // softmax over the k selected raw scores
};

/// Per-call forward record needed for the exact backward.
struct GateTape {
  std::vector<double> noise;        // epsilon per expert (empty when noise off)
  std::vector<double> noise_inputs; // x * W_noise per expert (empty when noise off)
};

/// psi = x W_g + eps ⊙ softplus(x W_n) with eps fresh standard normals drawn
/// from the given stream when noise_on; otherwise psi = x W_g.
std::vector<double> gate_scores(const RouterParams& params, std::span<const double> x,
                                bool noise_on, RngStream& rng, GateTape* tape = nullptr);

/// Indices of the k largest scores (ties -> lower index wins) with softmax
/// weights over exactly those raw scores.
GateDecision select_topk(std::span<const double> scores, std::size_t k, std::int32_t node = 0);

/// Importance[m] = sum over decisions of E_m where m was selected; the loss
/// is CV(Importance)^2 with population std. An all-zero vector gives 0.
std::vector<double> importance_vector(std::span<const GateDecision> decisions, std::size_t K);
double importance_loss(std::span<const GateDecision> decisions, std::size_t K);

/// d(CV^2)/d Importance[m]; zero vector on the degenerate all-zero case.
std::vector<double> importance_loss_backward(std::span<const double> importance);

struct RouterGrads {
  Matrix w_gate;
  Matrix w_noise;
};

/// Accumulates exact gradients for one node given dL/dweights of its
/// decision. Unselected experts receive zero gradient; the noise path uses
/// the taped epsilon and softplus' = sigmoid.
void route_backward(const RouterParams& params, std::span<const double> x,
                    const GateDecision& decision, const GateTape& tape,
                    std::span<const double> d_weights, RouterGrads& grads);

/// Softmax-backward helper: d_scores (k) from d_weights (k) at the decision.
std::vector<double> selected_softmax_backward(const GateDecision& decision,
                                              std::span<const double> d_weights);

double usage_entropy(std::span<const double> importance);
double usage_cv(std::span<const double> importance);

} // namespace mog

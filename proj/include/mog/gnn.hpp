#pragma once

#include "mog/dense.hpp"
#include "mog/graph.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mog {

enum class GnnVariant { Gcn, MeanAgg };

const char* gnn_variant_name(GnnVariant v);
GnnVariant gnn_variant_from_name(const std::string& name);

/// Message-passing stack with a linear head. gcn: symmetric-degree-normalized
/// aggregation with a weight-1 self loop inside the operator. mean: weight-
/// normalized neighbor mean concatenated with the self embedding (COMB), so
/// layer l weights are 2*D_{l-1} x D_l. ReLU after every layer but the last;
/// logits come from the head.
struct GnnParams {
  GnnVariant variant = GnnVariant::Gcn;
  std::vector<Matrix> w;
  std::vector<std::vector<double>> b;
  Matrix w_head;
  std::vector<double> b_head;

  std::size_t n_layers() const { return w.size(); }
  std::size_t n_classes() const { return w_head.cols(); }
};

GnnParams make_gnn(GnnVariant variant, std::size_t feat_dim,
                   std::span<const std::size_t> hidden, std::size_t classes,
                   std::uint64_t seed);

/// Aggregation operator assembled from a weighted graph. Degrees use |w| so
/// mixed-sign consensus weights stay well defined; adjacency entries keep
/// their sign.
struct SparseOp {
  GnnVariant variant = GnnVariant::Gcn;
  std::size_t n = 0;
  std::size_t n_edges = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<std::int32_t> col;
  std::vector<double> val;       // \hat A (gcn, incl. self loops) or M (mean)
  std::vector<std::size_t> rev;  // reverse arc index (diag maps to itself)
  std::vector<EdgeId> arc_edge;  // canonical edge per arc, -1 on the diagonal
  std::vector<double> deg;       // 1 + sum|w| (gcn) or sum|w| (mean)
  std::vector<double> edge_w;    // signed weight per canonical edge
};

SparseOp build_operator(const Graph& g, GnnVariant variant);

/// Recorded intermediates; replayable exactly once per forward.
struct GnnTape {
  std::vector<Matrix> h;   // h[0] = X, ..., h[L] (post-activation)
  std::vector<Matrix> agg; // aggregated messages per layer
  std::vector<Matrix> z;   // pre-activations per layer
  bool used = false;
};

Matrix gnn_forward(const GnnParams& params, const SparseOp& op, const Matrix& x, GnnTape& tape);

struct GnnGrads {
  std::vector<Matrix> w;
  std::vector<std::vector<double>> b;
  Matrix w_head;
  std::vector<double> b_head;
  std::vector<double> edge_weight; // per canonical edge of the operator's graph
};

GnnGrads make_gnn_grads(const GnnParams& params, std::size_t n_edges);

/// Exact reverse-mode pass; accumulates into grads and consumes the tape.
void gnn_backward(const GnnParams& params, const SparseOp& op, GnnTape& tape,
                  const Matrix& d_logits, GnnGrads& grads);

/// Softmax cross-entropy averaged over the masked rows; writes dloss/dlogits.
double masked_cross_entropy(const Matrix& logits, std::span<const int> labels,
                            std::span<const std::int32_t> mask, Matrix* d_logits);

double accuracy(const Matrix& logits, std::span<const int> labels,
                std::span<const std::int32_t> mask);

enum class OptimizerKind { Adam, Sgd };

/// Flat Adam/SGD state over an ordered list of parameter tensors.
struct Optimizer {
  OptimizerKind kind = OptimizerKind::Adam;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m, v;

  void update(std::size_t slot, std::span<double> param, std::span<const double> grad, double lr);
  void begin_step() { ++step; }
};

/// One supervised step on a fixed graph: forward, masked CE, backward, and a
/// parameter update. Throws NumericError on a non-finite loss.
double train_step(GnnParams& params, Optimizer& opt, const SparseOp& op, const Matrix& x,
                  std::span<const int> labels, std::span<const std::int32_t> mask, double lr);

/// Deterministic optimizer slot layout for a GNN parameter set.
std::size_t gnn_param_slots(const GnnParams& params);
void gnn_apply_update(GnnParams& params, const GnnGrads& grads, Optimizer& opt, double lr,
                      std::size_t slot_base = 0);

} // namespace mog

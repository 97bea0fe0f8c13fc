#include "mog/gnn.hpp"

#include "mog/common.hpp"
#include "mog/kernels.hpp"
#include "mog/rng.hpp"

#include <algorithm>
#include <cmath>

namespace mog {

const char* gnn_variant_name(GnnVariant v) {
  return v == GnnVariant::Gcn ? "gcn" : "mean";
}

GnnVariant gnn_variant_from_name(const std::string& name) {
  if (name == "gcn" || name == "gcn-normalized") return GnnVariant::Gcn;
  if (name == "mean" || name == "mean-aggregate" || name == "sage") return GnnVariant::MeanAgg;
  throw DataError("unknown gnn variant: " + name);
}

GnnParams make_gnn(GnnVariant variant, std::size_t feat_dim,
                   std::span<const std::size_t> hidden, std::size_t classes,
                   std::uint64_t seed) {
  if (hidden.empty()) throw DataError("make_gnn: need at least one layer");
  if (classes < 1) throw DataError("make_gnn: need at least one class");
  GnnParams p;
  p.variant = variant;
  std::size_t in = feat_dim;
  for (std::size_t l = 0; l < hidden.size(); ++l) {
    const std::size_t rows = variant == GnnVariant::MeanAgg ? 2 * in : in;
    Matrix w(rows, hidden[l]);
    RngStream rng(seed, 0x676e6e00ull + l); // "gnn" + layer
    const double a = 1.0 / std::sqrt(static_cast<double>(rows));
    for (auto& v : w.storage()) v = rng.next_uniform(-a, a);
    p.w.push_back(std::move(w));
    p.b.emplace_back(hidden[l], 0.0);
    in = hidden[l];
  }
  {
    Matrix w(in, classes);
    RngStream rng(seed, 0x68656164ull); // "head"
    const double a = 1.0 / std::sqrt(static_cast<double>(in));
    for (auto& v : w.storage()) v = rng.next_uniform(-a, a);
    p.w_head = std::move(w);
    p.b_head.assign(classes, 0.0);
  }
  return p;
}

SparseOp build_operator(const Graph& g, GnnVariant variant) {
  SparseOp op;
  op.variant = variant;
  op.n = g.n_nodes();
  op.n_edges = g.n_edges();
  op.edge_w = g.weights();
  op.deg.assign(op.n, variant == GnnVariant::Gcn ? 1.0 : 0.0);
  for (std::size_t u = 0; u < op.n; ++u)
    for (EdgeId e : g.incident_edges(static_cast<NodeId>(u)))
      op.deg[u] += std::abs(g.edge_weight(e));

  const bool self_loops = variant == GnnVariant::Gcn;
  op.row_ptr.assign(op.n + 1, 0);
  for (std::size_t u = 0; u < op.n; ++u)
    op.row_ptr[u + 1] = op.row_ptr[u] + g.degree(static_cast<NodeId>(u)) + (self_loops ? 1 : 0);
  op.col.resize(op.row_ptr.back());
  op.val.resize(op.row_ptr.back());
  op.arc_edge.assign(op.row_ptr.back(), -1);

  for (std::size_t u = 0; u < op.n; ++u) {
    std::size_t at = op.row_ptr[u];
    const auto nbs = g.neighbors(static_cast<NodeId>(u));
    const auto inc = g.incident_edges(static_cast<NodeId>(u));
    bool self_done = !self_loops;
    for (std::size_t i = 0; i < nbs.size(); ++i) {
      const std::size_t v = static_cast<std::size_t>(nbs[i]);
      if (!self_done && v > u) {
        op.col[at] = static_cast<std::int32_t>(u);
        ++at;
        self_done = true;
      }
      op.col[at] = nbs[i];
      op.arc_edge[at] = inc[i];
      ++at;
    }
    if (!self_done) {
      op.col[at] = static_cast<std::int32_t>(u);
      ++at;
    }
  }

  for (std::size_t u = 0; u < op.n; ++u) {
    for (std::size_t a = op.row_ptr[u]; a < op.row_ptr[u + 1]; ++a) {
      const std::size_t v = static_cast<std::size_t>(op.col[a]);
      if (variant == GnnVariant::Gcn) {
        const double s = op.arc_edge[a] < 0 ? 1.0 : op.edge_w[op.arc_edge[a]];
        op.val[a] = s / std::sqrt(op.deg[u] * op.deg[v]);
      } else {
        op.val[a] = op.deg[u] > 0.0 ? op.edge_w[op.arc_edge[a]] / op.deg[u] : 0.0;
      }
    }
  }

  // reverse arc lookup (diagonal pairs with itself)
  op.rev.resize(op.col.size());
  for (std::size_t u = 0; u < op.n; ++u) {
    for (std::size_t a = op.row_ptr[u]; a < op.row_ptr[u + 1]; ++a) {
      const std::size_t v = static_cast<std::size_t>(op.col[a]);
      if (v == u) {
        op.rev[a] = a;
        continue;
      }
      const auto begin = op.col.begin() + static_cast<std::ptrdiff_t>(op.row_ptr[v]);
      const auto end = op.col.begin() + static_cast<std::ptrdiff_t>(op.row_ptr[v + 1]);
      const auto it = std::lower_bound(begin, end, static_cast<std::int32_t>(u));
      op.rev[a] = op.row_ptr[v] + static_cast<std::size_t>(it - begin);
    }
  }
  return op;
}

namespace {

void spmm_parallel(const SparseOp& op, const Matrix& x, Matrix& y) {
  y = Matrix(op.n, x.cols());
  const std::size_t d = x.cols();
  parallel_for(op.n, [&](std::size_t begin, std::size_t end) {
    kernels::spmm(end - begin, op.row_ptr.data() + begin, op.col.data(), op.val.data(),
                  x.data(), d, y.data() + begin * d);
  });
}

// y = Op^T x via the reverse arcs (gcn values are symmetric; mean is not)
void spmm_transpose(const SparseOp& op, const Matrix& x, Matrix& y) {
  y = Matrix(op.n, x.cols());
  const std::size_t d = x.cols();
  for (std::size_t u = 0; u < op.n; ++u) {
    double* yrow = y.data() + u * d;
    for (std::size_t a = op.row_ptr[u]; a < op.row_ptr[u + 1]; ++a) {
      const std::size_t v = static_cast<std::size_t>(op.col[a]);
      kernels::axpy(yrow, op.val[op.rev[a]], x.data() + v * d, d);
    }
  }
}

Matrix concat_cols(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::copy(a.row(i).begin(), a.row(i).end(), out.row(i).begin());
    std::copy(b.row(i).begin(), b.row(i).end(),
              out.row(i).begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return out;
}

// c += a^T b
void accumulate_atb(const Matrix& a, const Matrix& b, Matrix& c) {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto arow = a.row(i);
    const auto brow = b.row(i);
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      kernels::axpy(c.row(p).data(), av, brow.data(), b.cols());
    }
  }
}

} // namespace

Matrix gnn_forward(const GnnParams& params, const SparseOp& op, const Matrix& x, GnnTape& tape) {
  if (x.rows() != op.n) throw DataError("gnn_forward: node count mismatch");
  const std::size_t L = params.n_layers();
  tape.h.assign(1, x);
  tape.agg.clear();
  tape.z.clear();
  tape.used = false;
  for (std::size_t l = 0; l < L; ++l) {
    const Matrix& h = tape.h.back();
    Matrix agg;
    spmm_parallel(op, h, agg);
    Matrix input = params.variant == GnnVariant::MeanAgg ? concat_cols(h, agg) : agg;
    if (input.cols() != params.w[l].rows()) throw DataError("gnn_forward: layer width mismatch");
    Matrix z = matmul(input, params.w[l]);
    for (std::size_t i = 0; i < z.rows(); ++i)
      for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) += params.b[l][j];
    Matrix h_next = z;
    if (l + 1 < L)
      for (auto& v : h_next.storage()) v = std::max(0.0, v);
    tape.agg.push_back(std::move(agg));
    tape.z.push_back(std::move(z));
    tape.h.push_back(std::move(h_next));
  }
  Matrix logits = matmul(tape.h.back(), params.w_head);
  for (std::size_t i = 0; i < logits.rows(); ++i)
    for (std::size_t j = 0; j < logits.cols(); ++j) logits(i, j) += params.b_head[j];
  return logits;
}

GnnGrads make_gnn_grads(const GnnParams& params, std::size_t n_edges) {
  GnnGrads g;
  for (const auto& w : params.w) g.w.emplace_back(w.rows(), w.cols());
  for (const auto& b : params.b) g.b.emplace_back(b.size(), 0.0);
  g.w_head = Matrix(params.w_head.rows(), params.w_head.cols());
  g.b_head.assign(params.b_head.size(), 0.0);
  g.edge_weight.assign(n_edges, 0.0);
  return g;
}

void gnn_backward(const GnnParams& params, const SparseOp& op, GnnTape& tape,
                  const Matrix& d_logits, GnnGrads& grads) {
  if (tape.used) throw DataError("gnn_backward: tape already consumed");
  tape.used = true;
  const std::size_t L = params.n_layers();

  accumulate_atb(tape.h.back(), d_logits, grads.w_head);
  for (std::size_t i = 0; i < d_logits.rows(); ++i)
    for (std::size_t j = 0; j < d_logits.cols(); ++j) grads.b_head[j] += d_logits(i, j);
  Matrix d_h = matmul(d_logits, transpose(params.w_head));

  std::vector<double> gbar(op.col.size(), 0.0); // dL/d(op values), accumulated over layers

  for (std::size_t l = L; l-- > 0;) {
    Matrix d_z = std::move(d_h);
    if (l + 1 < L) {
      const Matrix& z = tape.z[l];
      for (std::size_t i = 0; i < d_z.storage().size(); ++i)
        if (z.storage()[i] <= 0.0) d_z.storage()[i] = 0.0;
    }
    const Matrix& h = tape.h[l];
    const Matrix& agg = tape.agg[l];

    Matrix d_agg;
    if (params.variant == GnnVariant::MeanAgg) {
      const Matrix input = concat_cols(h, agg);
      accumulate_atb(input, d_z, grads.w[l]);
      const Matrix d_input = matmul(d_z, transpose(params.w[l]));
      const std::size_t dcols = h.cols();
      Matrix d_self(h.rows(), dcols);
      d_agg = Matrix(h.rows(), dcols);
      for (std::size_t i = 0; i < h.rows(); ++i)
        for (std::size_t j = 0; j < dcols; ++j) {
          d_self(i, j) = d_input(i, j);
          d_agg(i, j) = d_input(i, j + dcols);
        }
      for (std::size_t i = 0; i < d_z.rows(); ++i)
        for (std::size_t j = 0; j < d_z.cols(); ++j) grads.b[l][j] += d_z(i, j);
      Matrix d_h_from_agg;
      spmm_transpose(op, d_agg, d_h_from_agg);
      d_h = d_self;
      add_scaled(d_h, 1.0, d_h_from_agg);
    } else {
      accumulate_atb(agg, d_z, grads.w[l]);
      for (std::size_t i = 0; i < d_z.rows(); ++i)
        for (std::size_t j = 0; j < d_z.cols(); ++j) grads.b[l][j] += d_z(i, j);
      d_agg = matmul(d_z, transpose(params.w[l]));
      spmm_transpose(op, d_agg, d_h);
    }

    // dL/d(op value at arc u->v) = dot(d_agg[u,:], h[v,:])
    std::vector<double> layer_gbar(op.col.size());
    parallel_for(op.n, [&](std::size_t begin, std::size_t end) {
      kernels::sddmm(end - begin, op.row_ptr.data() + begin, op.col.data(),
                     d_agg.data() + begin * d_agg.cols(), h.data(), h.cols(),
                     layer_gbar.data()); // kernel writes at absolute arc indices
    });
    for (std::size_t a = 0; a < gbar.size(); ++a) gbar[a] += layer_gbar[a];
  }

  // chain the operator values back to the signed edge weights
  if (op.variant == GnnVariant::Gcn) {
    std::vector<double> s_node(op.n, 0.0);
    for (std::size_t u = 0; u < op.n; ++u) {
      double r = 0.0;
      for (std::size_t a = op.row_ptr[u]; a < op.row_ptr[u + 1]; ++a)
        r += (gbar[a] + gbar[op.rev[a]]) * op.val[a];
      s_node[u] = -r / (2.0 * op.deg[u]);
    }
    for (std::size_t u = 0; u < op.n; ++u) {
      for (std::size_t a = op.row_ptr[u]; a < op.row_ptr[u + 1]; ++a) {
        const EdgeId e = op.arc_edge[a];
        if (e < 0) continue;
        const std::size_t v = static_cast<std::size_t>(op.col[a]);
        if (v < u) continue; // handle each undirected edge once
        const double w = op.edge_w[e];
        const double sign = w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0);
        double grad = (gbar[a] + gbar[op.rev[a]]) / std::sqrt(op.deg[u] * op.deg[v]);
        grad += (s_node[u] + s_node[v]) * sign;
        grads.edge_weight[e] += grad;
      }
    }
  } else {
    std::vector<double> t_node(op.n, 0.0);
    for (std::size_t u = 0; u < op.n; ++u) {
      double t = 0.0;
      for (std::size_t a = op.row_ptr[u]; a < op.row_ptr[u + 1]; ++a)
        t += gbar[a] * op.val[a];
      t_node[u] = t;
    }
    for (std::size_t u = 0; u < op.n; ++u) {
      if (op.deg[u] <= 0.0) continue;
      for (std::size_t a = op.row_ptr[u]; a < op.row_ptr[u + 1]; ++a) {
        const EdgeId e = op.arc_edge[a];
        const double w = op.edge_w[e];
        const double sign = w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0);
        grads.edge_weight[e] += gbar[a] / op.deg[u] - sign * t_node[u] / op.deg[u];
      }
    }
  }
}

double masked_cross_entropy(const Matrix& logits, std::span<const int> labels,
                            std::span<const std::int32_t> mask, Matrix* d_logits) {
  if (mask.empty()) throw DataError("masked_cross_entropy: empty mask");
  const std::size_t C = logits.cols();
  if (d_logits != nullptr) *d_logits = Matrix(logits.rows(), C);
  double loss = 0.0;
  const double inv = 1.0 / static_cast<double>(mask.size());
  std::vector<double> p(C);
  for (const std::int32_t i : mask) {
    const auto row = logits.row(i);
    double mx = row[0];
    for (double v : row) mx = std::max(mx, v);
    double z = 0.0;
    for (std::size_t j = 0; j < C; ++j) {
      p[j] = std::exp(row[j] - mx);
      z += p[j];
    }
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || static_cast<std::size_t>(y) >= C)
      throw DataError("masked_cross_entropy: label out of range");
    loss -= (std::log(p[static_cast<std::size_t>(y)]) - std::log(z)) * inv;
    if (d_logits != nullptr) {
      for (std::size_t j = 0; j < C; ++j) {
        double g = p[j] / z;
        if (j == static_cast<std::size_t>(y)) g -= 1.0;
        (*d_logits)(i, j) = g * inv;
      }
    }
  }
  return loss;
}

double accuracy(const Matrix& logits, std::span<const int> labels,
                std::span<const std::int32_t> mask) {
  if (mask.empty()) return 0.0;
  std::size_t hit = 0;
  for (const std::int32_t i : mask) {
    const auto row = logits.row(i);
    std::size_t arg = 0;
    for (std::size_t j = 1; j < row.size(); ++j)
      if (row[j] > row[arg]) arg = j;
    if (static_cast<int>(arg) == labels[static_cast<std::size_t>(i)]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(mask.size());
}

void Optimizer::update(std::size_t slot, std::span<double> param, std::span<const double> grad,
                       double lr) {
  if (param.size() != grad.size()) throw DataError("optimizer: size mismatch");
  if (kind == OptimizerKind::Sgd) {
    for (std::size_t i = 0; i < param.size(); ++i) param[i] -= lr * grad[i];
    return;
  }
  if (m.size() <= slot) {
    m.resize(slot + 1);
    v.resize(slot + 1);
  }
  if (m[slot].size() != param.size()) {
    m[slot].assign(param.size(), 0.0);
    v[slot].assign(param.size(), 0.0);
  }
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[slot][i] = beta1 * m[slot][i] + (1.0 - beta1) * grad[i];
    v[slot][i] = beta2 * v[slot][i] + (1.0 - beta2) * grad[i] * grad[i];
    const double mhat = m[slot][i] / bc1;
    const double vhat = v[slot][i] / bc2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

std::size_t gnn_param_slots(const GnnParams& params) {
  return 2 * params.n_layers() + 2;
}

void gnn_apply_update(GnnParams& params, const GnnGrads& grads, Optimizer& opt, double lr,
                      std::size_t slot_base) {
  std::size_t slot = slot_base;
  for (std::size_t l = 0; l < params.n_layers(); ++l) {
    opt.update(slot++, params.w[l].storage(), grads.w[l].storage(), lr);
    opt.update(slot++, params.b[l], grads.b[l], lr);
  }
  opt.update(slot++, params.w_head.storage(), grads.w_head.storage(), lr);
  opt.update(slot++, params.b_head, grads.b_head, lr);
}

double train_step(GnnParams& params, Optimizer& opt, const SparseOp& op, const Matrix& x,
                  std::span<const int> labels, std::span<const std::int32_t> mask, double lr) {
  GnnTape tape;
  const Matrix logits = gnn_forward(params, op, x, tape);
  Matrix d_logits;
  const double loss = masked_cross_entropy(logits, labels, mask, &d_logits);
  if (!std::isfinite(loss)) throw NumericError("train_step: non-finite loss");
  GnnGrads grads = make_gnn_grads(params, op.n_edges);
  gnn_backward(params, op, tape, d_logits, grads);
  opt.begin_step();
  gnn_apply_update(params, grads, opt, lr);
  return loss;
}

} // namespace mog

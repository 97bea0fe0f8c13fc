#include "mog/graph.hpp"

#include "mog/common.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace mog {

EdgeId Graph::find_edge(NodeId u, NodeId v) const {
  auto nb = neighbors(u);
  auto it = std::lower_bound(nb.begin(), nb.end(), v);
  if (it == nb.end() || *it != v) return -1;
  return arc_edge_[row_ptr_[u] + static_cast<std::size_t>(it - nb.begin())];
}

int Graph::n_classes() const {
  int c = 0;
  for (int y : labels_) c = std::max(c, y + 1);
  return c;
}

void Graph::set_grad_cache(std::vector<double> values) {
  if (values.size() != n_edges()) throw DataError("grad cache size mismatch");
  grad_cache_ = std::move(values);
  grad_cache_valid_ = true;
}

Graph build_graph(std::size_t n_nodes, std::span<const EdgeTriple> edges,
                  Matrix features, std::vector<int> labels) {
  if (n_nodes == 0) throw DataError("empty graph: no nodes");
  if (!features.empty() && features.rows() != n_nodes)
    throw DataError("feature row count does not match node count");
  if (!labels.empty() && labels.size() != n_nodes)
    throw DataError("label count does not match node count");

  // canonicalize to (min,max), drop self loops, first weight wins on duplicates
  std::map<std::pair<NodeId, NodeId>, double> canon;
  for (const auto& e : edges) {
    if (e.u < 0 || e.v < 0 || static_cast<std::size_t>(e.u) >= n_nodes ||
        static_cast<std::size_t>(e.v) >= n_nodes)
      throw DataError("edge references unknown node");
    if (e.u == e.v) continue;
    if (!std::isfinite(e.w)) throw DataError("non-finite edge weight");
    const auto key = std::minmax(e.u, e.v);
    canon.emplace(std::pair<NodeId, NodeId>{key.first, key.second}, e.w);
  }

  Graph g;
  g.n_ = n_nodes;
  g.ends_.reserve(canon.size());
  g.weight_.reserve(canon.size());
  std::vector<std::size_t> deg(n_nodes, 0);
  for (const auto& [key, w] : canon) {
    g.ends_.push_back({key.first, key.second});
    g.weight_.push_back(w);
    ++deg[key.first];
    ++deg[key.second];
  }
  g.row_ptr_.assign(n_nodes + 1, 0);
  for (std::size_t i = 0; i < n_nodes; ++i) g.row_ptr_[i + 1] = g.row_ptr_[i] + deg[i];
  g.col_.resize(g.row_ptr_.back());
  g.arc_edge_.resize(g.row_ptr_.back());
  std::vector<std::size_t> cursor(g.row_ptr_.begin(), g.row_ptr_.end() - 1);
  // canonical ids follow (min,max) lex order, so filling arcs in id order
  // leaves every neighbor list sorted: for node u, edges (a,u) with a<u come
  // first in ascending a, then edges (u,b) in ascending b
  for (std::size_t eid = 0; eid < g.ends_.size(); ++eid) {
    const auto [u, v] = g.ends_[eid];
    g.col_[cursor[u]] = v;
    g.arc_edge_[cursor[u]++] = static_cast<EdgeId>(eid);
    g.col_[cursor[v]] = u;
    g.arc_edge_[cursor[v]++] = static_cast<EdgeId>(eid);
  }
  g.features_ = std::move(features);
  g.labels_ = std::move(labels);
  g.grad_cache_.assign(g.ends_.size(), 0.0);
  g.grad_cache_valid_ = false;
  return g;
}

Graph subgraph_with_edges(const Graph& g, std::span<const EdgeTriple> edges) {
  Matrix feats = g.features();
  std::vector<int> labels = g.labels();
  return build_graph(g.n_nodes(), edges, std::move(feats), std::move(labels));
}

EgoGraph ego_decompose(const Graph& g, NodeId v) {
  if (v < 0 || static_cast<std::size_t>(v) >= g.n_nodes())
    throw DataError("ego_decompose: node out of range");
  EgoGraph ego;
  ego.center = v;
  const auto nb = g.neighbors(v);
  const auto inc = g.incident_edges(v);
  ego.members.reserve(nb.size() + 1);
  ego.members.push_back(v);
  ego.members.insert(ego.members.end(), nb.begin(), nb.end());
  ego.edges.assign(inc.begin(), inc.end());
  return ego;
}

Matrix laplacian(std::size_t n_local, std::span<const LocalEdge> edges, bool normalized) {
  std::vector<double> deg(n_local, 0.0);
  for (const auto& e : edges) {
    if (e.u >= n_local || e.v >= n_local) throw DataError("laplacian: endpoint out of range");
    if (e.w < 0.0) throw DataError("laplacian: negative weight");
    deg[e.u] += e.w;
    deg[e.v] += e.w;
  }
  Matrix l(n_local, n_local);
  if (!normalized) {
    for (std::size_t i = 0; i < n_local; ++i) l(i, i) = deg[i];
    for (const auto& e : edges) {
      l(e.u, e.v) -= e.w;
      l(e.v, e.u) -= e.w;
    }
    return l;
  }
  std::vector<double> inv_sqrt(n_local, 0.0);
  for (std::size_t i = 0; i < n_local; ++i)
    if (deg[i] > 0.0) inv_sqrt[i] = 1.0 / std::sqrt(deg[i]);
  for (std::size_t i = 0; i < n_local; ++i) l(i, i) = deg[i] > 0.0 ? 1.0 : 0.0;
  for (const auto& e : edges) {
    const double v = e.w * inv_sqrt[e.u] * inv_sqrt[e.v];
    l(e.u, e.v) -= v;
    l(e.v, e.u) -= v;
  }
  return l;
}

bool is_connected(std::size_t n, std::span<const LocalEdge> edges) {
  if (n == 0) return true;
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : edges) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (std::size_t v : adj[u])
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
  }
  return count == n;
}

} // namespace mog

#pragma once

#include "mog/dense.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mog {

using NodeId = std::int32_t;
using EdgeId = std::int64_t;

struct EdgeTriple {
  NodeId u = 0;
  NodeId v = 0;
  double w = 1.0;
};

/// Undirected simple graph in CSR form, immutable after construction.
/// Each undirected edge {i,j}, i<j, has one canonical id; the CSR stores both
/// arcs, each annotated with that id. Neighbor lists are sorted by node id.
class Graph {
public:
  Graph() = default;

  std::size_t n_nodes() const { return n_; }
  std::size_t n_edges() const { return ends_.size(); }
  std::size_t degree(NodeId u) const { return row_ptr_[u + 1] - row_ptr_[u]; }

  std::span<const NodeId> neighbors(NodeId u) const {
    return {col_.data() + row_ptr_[u], degree(u)};
  }
  std::span<const EdgeId> incident_edges(NodeId u) const {
    return {arc_edge_.data() + row_ptr_[u], degree(u)};
  }

  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<NodeId>& col() const { return col_; }
  const std::vector<EdgeId>& arc_edge() const { return arc_edge_; }

  std::array<NodeId, 2> edge_ends(EdgeId e) const { return ends_[e]; }
  double edge_weight(EdgeId e) const { return weight_[e]; }
  const std::vector<double>& weights() const { return weight_; }

  /// Canonical id of {u,v}, or -1 if absent. Binary search in u's list.
  EdgeId find_edge(NodeId u, NodeId v) const;

  const Matrix& features() const { return features_; }
  bool has_features() const { return !features_.empty(); }
  const std::vector<int>& labels() const { return labels_; }
  bool has_labels() const { return !labels_.empty(); }
  int n_classes() const;

  // Edge-gradient cache, written between epochs by the training driver.
  std::span<const double> grad_cache() const { return grad_cache_; }
  bool grad_cache_valid() const { return grad_cache_valid_; }
  void set_grad_cache(std::vector<double> values);

  friend Graph build_graph(std::size_t n_nodes, std::span<const EdgeTriple> edges,
                           Matrix features, std::vector<int> labels);

private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<NodeId> col_;
  std::vector<EdgeId> arc_edge_;
  std::vector<std::array<NodeId, 2>> ends_; // per canonical edge, u < v
  std::vector<double> weight_;              // per canonical edge
  Matrix features_;
  std::vector<int> labels_;
  std::vector<double> grad_cache_;
  bool grad_cache_valid_ = false;
};

/// Deduplicates, drops self loops, symmetrizes, and assigns canonical ids in
/// lexicographic (min,max) order. Duplicate edges keep the first weight seen.
/// Throws DataError on an empty node set, out-of-range endpoints, or a
/// features/labels row count that disagrees with n_nodes.
Graph build_graph(std::size_t n_nodes, std::span<const EdgeTriple> edges,
                  Matrix features = {}, std::vector<int> labels = {});

/// Same node set and features, new edge set (weights per triple).
Graph subgraph_with_edges(const Graph& g, std::span<const EdgeTriple> edges);

/// Star-shaped 1-hop ego graph. members[0] is the center; the remaining
/// members are the neighbors sorted by global id. edges[i] is the canonical
/// id of {center, members[i+1]}, so edge count equals degree(center).
struct EgoGraph {
  NodeId center = 0;
  std::vector<NodeId> members;
  std::vector<EdgeId> edges;

  std::size_t n_local() const { return members.size(); }
  std::size_t n_edges() const { return edges.size(); }
};

EgoGraph ego_decompose(const Graph& g, NodeId v);

struct LocalEdge {
  std::size_t u = 0;
  std::size_t v = 0;
  double w = 1.0;
};

/// Dense Laplacian over a local node set: combinatorial D - A, or the
/// symmetric normalization D^{-1/2}(D - A)D^{-1/2}. Zero-degree nodes get a
/// zero row/column in the normalized form. Throws DataError on a negative
/// weight or out-of-range endpoint.
Matrix laplacian(std::size_t n_local, std::span<const LocalEdge> edges, bool normalized);

/// True if the graph restricted to the given edges connects all n nodes.
bool is_connected(std::size_t n, std::span<const LocalEdge> edges);

} // namespace mog

#pragma once

#include "mog/dense.hpp"
#include "mog/graph.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mog {

struct EdgeListData {
  std::vector<EdgeTriple> edges;
  std::size_t n_nodes = 0;               // max id + 1 (after remapping)
  std::vector<std::int64_t> id_map;      // external id per internal id; empty if identity
};

/// Whitespace separated `u v [w]` lines, `#` comments. When n_hint > 0 the
/// ids must already be 0-based below n_hint; otherwise sparse external ids
/// are remapped to a contiguous 0-based range (sorted ascending) and the
/// table is returned so external ids survive.
EdgeListData read_edge_list(const std::string& path, std::size_t n_hint = 0);

/// MatrixMarket coordinate adjacency: real or pattern, symmetric or general.
EdgeListData read_matrix_market(const std::string& path, std::size_t n_hint = 0);

/// Canonical form: ascending (u,v) with u < v, weights in shortest
/// round-trip decimal. Loading this file reproduces the graph bit-exactly.
void write_edge_list(const std::string& path, const Graph& g);

/// Coordinate real symmetric, lower triangle, 1-based.
void write_matrix_market(const std::string& path, const Graph& g);

/// One row per node, whitespace or comma separated doubles.
Matrix read_feature_table(const std::string& path);
void write_feature_table(const std::string& path, const Matrix& m);

/// One integer class per row.
std::vector<int> read_label_table(const std::string& path);
void write_label_table(const std::string& path, const std::vector<int>& labels);

void write_remap_table(const std::string& path, const std::vector<std::int64_t>& id_map);

/// Loads a graph from an edge list or MatrixMarket file (by sniffing the
/// header), with optional feature/label tables fixing the node count.
Graph load_graph(const std::string& edge_path, const std::string& features_path = {},
                 const std::string& labels_path = {},
                 std::vector<std::int64_t>* id_map_out = nullptr);

// ---- versioned flat binary of double arrays with a textual header ----

struct ArrayBlob {
  std::string name;
  std::vector<std::size_t> dims;
  std::vector<double> data;

  std::size_t count() const {
    std::size_t c = 1;
    for (std::size_t d : dims) c *= d;
    return c;
  }
};

struct BlobFile {
  std::map<std::string, std::string> meta; // ordered, round-trip stable
  std::vector<ArrayBlob> arrays;

  const ArrayBlob& array(const std::string& name) const;
  const std::string& meta_at(const std::string& key) const;
};

void write_blob_file(const std::string& path, const BlobFile& blob);
BlobFile read_blob_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

} // namespace mog

#include "mog/io.hpp"

#include "mog/common.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mog {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (std::isspace(static_cast<unsigned char>(line[i])) || line[i] == ','))
      ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j])) && line[j] != ',')
      ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_double(std::string_view tok, const std::string& ctx) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    throw DataError("cannot parse number '" + std::string(tok) + "' in " + ctx);
  return v;
}

std::int64_t parse_int(std::string_view tok, const std::string& ctx) {
  std::int64_t v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    throw DataError("cannot parse integer '" + std::string(tok) + "' in " + ctx);
  return v;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open file for writing: " + path);
  return out;
}

EdgeListData finalize_edges(std::vector<std::array<std::int64_t, 3>>&& raw,
                            std::vector<double>&& ws, std::size_t n_hint,
                            const std::string& path) {
  EdgeListData out;
  if (n_hint > 0) {
    out.n_nodes = n_hint;
    out.edges.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const auto& r = raw[i];
      if (r[0] < 0 || r[1] < 0 || r[0] >= static_cast<std::int64_t>(n_hint) ||
          r[1] >= static_cast<std::int64_t>(n_hint))
        throw DataError(path + ": edge references unknown node " +
                        std::to_string(std::max(r[0], r[1])));
      out.edges.push_back({static_cast<NodeId>(r[0]), static_cast<NodeId>(r[1]), ws[i]});
    }
    return out;
  }
  std::vector<std::int64_t> ids;
  ids.reserve(raw.size() * 2);
  for (const auto& r : raw) {
    ids.push_back(r[0]);
    ids.push_back(r[1]);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.empty()) throw DataError(path + ": empty graph");
  if (ids.front() < 0) throw DataError(path + ": negative node id");
  const bool identity =
      ids.back() == static_cast<std::int64_t>(ids.size()) - 1 && ids.front() == 0;
  out.n_nodes = ids.size();
  if (!identity) out.id_map = ids;
  auto remap = [&ids](std::int64_t ext) {
    return static_cast<NodeId>(std::lower_bound(ids.begin(), ids.end(), ext) - ids.begin());
  };
  out.edges.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    out.edges.push_back({remap(raw[i][0]), remap(raw[i][1]), ws[i]});
  return out;
}

} // namespace

EdgeListData read_edge_list(const std::string& path, std::size_t n_hint) {
  auto in = open_in(path);
  std::vector<std::array<std::int64_t, 3>> raw;
  std::vector<double> ws;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks.size() != 2 && toks.size() != 3)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected 'u v [w]'");
    const std::string ctx = path + ":" + std::to_string(lineno);
    raw.push_back({parse_int(toks[0], ctx), parse_int(toks[1], ctx), 0});
    ws.push_back(toks.size() == 3 ? parse_double(toks[2], ctx) : 1.0);
  }
  if (raw.empty()) throw DataError(path + ": empty graph");
  return finalize_edges(std::move(raw), std::move(ws), n_hint, path);
}

EdgeListData read_matrix_market(const std::string& path, std::size_t n_hint) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("%%MatrixMarket", 0) != 0)
    throw DataError(path + ": missing MatrixMarket header");
  std::istringstream hdr(line);
  std::string tag, object, format, field, symmetry;
  hdr >> tag >> object >> format >> field >> symmetry;
  if (object != "matrix" || format != "coordinate")
    throw DataError(path + ": only coordinate matrices are supported");
  const bool pattern = field == "pattern";
  if (!pattern && field != "real" && field != "integer")
    throw DataError(path + ": unsupported field type " + field);

  while (std::getline(in, line))
    if (!line.empty() && line[0] != '%') break;
  auto dims = split_ws(line);
  if (dims.size() != 3) throw DataError(path + ": malformed size line");
  const std::int64_t rows = parse_int(dims[0], path);
  const std::int64_t cols = parse_int(dims[1], path);
  const std::int64_t nnz = parse_int(dims[2], path);
  if (rows != cols) throw DataError(path + ": adjacency matrix must be square");

  std::vector<std::array<std::int64_t, 3>> raw;
  std::vector<double> ws;
  raw.reserve(nnz);
  std::size_t seen = 0;
  while (seen < static_cast<std::size_t>(nnz) && std::getline(in, line)) {
    if (line.empty() || line[0] == '%') continue;
    const auto toks = split_ws(line);
    if (toks.size() < 2) throw DataError(path + ": malformed entry line");
    // 1-based indices
    raw.push_back({parse_int(toks[0], path) - 1, parse_int(toks[1], path) - 1, 0});
    ws.push_back(pattern || toks.size() < 3 ? 1.0 : parse_double(toks[2], path));
    ++seen;
  }
  if (seen != static_cast<std::size_t>(nnz)) throw DataError(path + ": truncated entry list");
  const std::size_t hint = n_hint > 0 ? n_hint : static_cast<std::size_t>(rows);
  return finalize_edges(std::move(raw), std::move(ws), hint, path);
}

void write_edge_list(const std::string& path, const Graph& g) {
  auto out = open_out(path);
  for (std::size_t e = 0; e < g.n_edges(); ++e) {
    const auto ends = g.edge_ends(static_cast<EdgeId>(e));
    out << ends[0] << ' ' << ends[1] << ' ' << format_double(g.edge_weight(e)) << '\n';
  }
}

void write_matrix_market(const std::string& path, const Graph& g) {
  auto out = open_out(path);
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << g.n_nodes() << ' ' << g.n_nodes() << ' ' << g.n_edges() << '\n';
  for (std::size_t e = 0; e < g.n_edges(); ++e) {
    const auto ends = g.edge_ends(static_cast<EdgeId>(e));
    // lower triangle: row >= column
    out << ends[1] + 1 << ' ' << ends[0] + 1 << ' ' << format_double(g.edge_weight(e)) << '\n';
  }
}

Matrix read_feature_table(const std::string& path) {
  auto in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    std::vector<double> row;
    row.reserve(toks.size());
    for (auto t : toks) row.push_back(parse_double(t, path + ":" + std::to_string(lineno)));
    if (width == 0) width = row.size();
    if (row.size() != width)
      throw DataError(path + ":" + std::to_string(lineno) + ": ragged feature row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path + ": empty table");
  Matrix m(rows.size(), width);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j) m(i, j) = rows[i][j];
  return m;
}

void write_feature_table(const std::string& path, const Matrix& m) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

std::vector<int> read_label_table(const std::string& path) {
  auto in = open_in(path);
  std::vector<int> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks.size() != 1)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected one label per row");
    labels.push_back(static_cast<int>(parse_int(toks[0], path + ":" + std::to_string(lineno))));
  }
  if (labels.empty()) throw DataError(path + ": empty table");
  return labels;
}

void write_label_table(const std::string& path, const std::vector<int>& labels) {
  auto out = open_out(path);
  for (int y : labels) out << y << '\n';
}

void write_remap_table(const std::string& path, const std::vector<std::int64_t>& id_map) {
  auto out = open_out(path);
  out << "# internal external\n";
  for (std::size_t i = 0; i < id_map.size(); ++i) out << i << ' ' << id_map[i] << '\n';
}

Graph load_graph(const std::string& edge_path, const std::string& features_path,
                 const std::string& labels_path, std::vector<std::int64_t>* id_map_out) {
  Matrix features;
  if (!features_path.empty()) features = read_feature_table(features_path);
  std::vector<int> labels;
  if (!labels_path.empty()) labels = read_label_table(labels_path);

  std::size_t n_hint = features.rows();
  if (n_hint == 0) n_hint = labels.size();

  // sniff MatrixMarket by header
  bool is_mm = false;
  {
    auto in = open_in(edge_path);
    std::string first;
    std::getline(in, first);
    is_mm = first.rfind("%%MatrixMarket", 0) == 0;
  }
  EdgeListData data =
      is_mm ? read_matrix_market(edge_path, n_hint) : read_edge_list(edge_path, n_hint);
  if (id_map_out != nullptr) *id_map_out = data.id_map;
  if (!labels.empty() && labels.size() != data.n_nodes)
    throw DataError("label count does not match node count");
  return build_graph(data.n_nodes, data.edges, std::move(features), std::move(labels));
}

const ArrayBlob& BlobFile::array(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return a;
  throw DataError("blob file missing array: " + name);
}

const std::string& BlobFile::meta_at(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) throw DataError("blob file missing meta key: " + key);
  return it->second;
}

void write_blob_file(const std::string& path, const BlobFile& blob) {
  auto out = open_out(path);
  out << "MOGBLOB v1\n";
  for (const auto& [k, v] : blob.meta) {
    if (k.find_first_of(" \n") != std::string::npos || v.find('\n') != std::string::npos)
      throw DataError("blob meta keys must be token-like and values single-line");
    out << "meta " << k << ' ' << v << '\n';
  }
  for (const auto& a : blob.arrays) {
    if (a.data.size() != a.count()) throw DataError("blob array size does not match dims");
    out << "array " << a.name;
    out << ' ' << a.dims.size();
    for (std::size_t d : a.dims) out << ' ' << d;
    out << '\n';
  }
  out << "end\n";
  for (const auto& a : blob.arrays)
    out.write(reinterpret_cast<const char*>(a.data.data()),
              static_cast<std::streamsize>(a.data.size() * sizeof(double)));
}

BlobFile read_blob_file(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != "MOGBLOB v1")
    throw DataError(path + ": not a MOGBLOB v1 file");
  BlobFile blob;
  while (std::getline(in, line)) {
    if (line == "end") break;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "meta") {
      std::string key;
      ls >> key;
      std::string value;
      std::getline(ls, value);
      if (!value.empty() && value.front() == ' ') value.erase(value.begin());
      blob.meta[key] = value;
    } else if (kind == "array") {
      ArrayBlob a;
      std::size_t ndims = 0;
      ls >> a.name >> ndims;
      a.dims.resize(ndims);
      for (auto& d : a.dims) ls >> d;
      if (!ls) throw DataError(path + ": malformed array declaration");
      blob.arrays.push_back(std::move(a));
    } else {
      throw DataError(path + ": unexpected header line '" + line + "'");
    }
  }
  for (auto& a : blob.arrays) {
    a.data.resize(a.count());
    in.read(reinterpret_cast<char*>(a.data.data()),
            static_cast<std::streamsize>(a.data.size() * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != a.data.size() * sizeof(double))
      throw DataError(path + ": truncated array payload");
  }
  return blob;
}

std::string read_text_file(const std::string& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  auto out = open_out(path);
  out << content;
}

} // namespace mog

#pragma once

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmlp/graph.hpp"
#include "pmlp/matrix.hpp"
#include "pmlp/rng.hpp"

namespace pmlp {

inline constexpr const char* kNormalizeNone = "none";
inline constexpr const char* kNormalizeL1Standardize = "l1-row+standardize-train";

struct DatasetMeta {
  std::string name;
  std::string normalization = kNormalizeL1Standardize;
};

/// Raw features are kept next to the normalized ones so that a new split
/// (whose train nodes drive the column statistics) can re-normalize.
struct Dataset {
  Graph graph;
  DenseMatrix raw_features;
  DenseMatrix x;
  std::vector<int> labels;  // -1 marks an unlabeled node
  std::size_t num_classes = 0;
  InductiveSplit split;
  DatasetMeta meta;

  std::size_t num_nodes() const { return graph.num_nodes(); }
};

// ---------------------------------------------------------------------------
// Feature normalization

/// "l1-row+standardize-train": each row scaled to unit L1 norm (zero rows stay
/// zero), then each column centered and scaled by mean/std over `train_ids`.
/// Columns with zero spread are only centered.
inline DenseMatrix normalize_features(const DenseMatrix& raw, const std::string& mode,
                                      std::span<const NodeId> train_ids) {
  if (mode == kNormalizeNone) return raw;
  require(mode == kNormalizeL1Standardize, ErrorKind::SchemaError, "unknown normalization '" + mode + "'");
  DenseMatrix x = raw;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double l1 = 0.0;
    for (double v : x.row(r)) l1 += std::abs(v);
    if (l1 > 0.0)
      for (double& v : x.row(r)) v /= l1;
  }
  if (train_ids.empty()) return x;
  const double m = static_cast<double>(train_ids.size());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double mean = 0.0;
    for (NodeId u : train_ids) mean += x(u, c);
    mean /= m;
    double var = 0.0;
    for (NodeId u : train_ids) var += (x(u, c) - mean) * (x(u, c) - mean);
    const double sd = std::sqrt(var / m);
    const double scale = sd > 0.0 ? 1.0 / sd : 1.0;
    for (std::size_t r = 0; r < x.rows(); ++r) x(r, c) = (x(r, c) - mean) * scale;
  }
  return x;
}

// ---------------------------------------------------------------------------
// Text formats

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v))
    fail(ErrorKind::SchemaError, where + ": bad number '" + std::string(s) + "'");
  return v;
}

inline std::int64_t parse_int(std::string_view s, const std::string& where) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  std::int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    fail(ErrorKind::SchemaError, where + ": bad integer '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

inline std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::SchemaError, "cannot open " + path);
  return in;
}

}  // namespace detail

/// Features CSV: one node per line, no header, comma separated.
inline DenseMatrix read_features_csv(std::istream& is, const std::string& name = "features") {
  std::vector<double> values;
  std::size_t rows = 0, cols = 0;
  std::string line;
  while (std::getline(is, line)) {
    if (detail::blank(line)) continue;
    const auto cells = detail::split_commas(line);
    if (rows == 0) cols = cells.size();
    if (cells.size() != cols)
      fail(ErrorKind::SchemaError, name + " row " + std::to_string(rows) + " has " + std::to_string(cells.size()) +
                                       " columns, expected " + std::to_string(cols));
    for (auto c : cells) values.push_back(detail::parse_double(c, name + " row " + std::to_string(rows)));
    ++rows;
  }
  DenseMatrix x(rows, cols);
  std::copy(values.begin(), values.end(), x.data().begin());
  return x;
}

inline void write_features_csv(std::ostream& os, const DenseMatrix& x) {
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) os << (c ? "," : "") << detail::format_double(x(r, c));
    os << '\n';
  }
}

/// Labels CSV `node_id,class`, optional header line. Nodes not listed stay
/// unlabeled (-1). `num_classes` = 0 infers it as max class + 1.
inline std::vector<int> read_labels_csv(std::istream& is, std::size_t n, std::size_t num_classes,
                                        const std::string& name = "labels") {
  std::vector<int> labels(n, -1);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::blank(line)) continue;
    if (lineno == 1 && line.rfind("node_id", 0) == 0) continue;
    const auto cells = detail::split_commas(line);
    const std::string where = name + " line " + std::to_string(lineno);
    if (cells.size() != 2) fail(ErrorKind::SchemaError, where + ": expected node_id,class");
    const auto id = detail::parse_int(cells[0], where);
    const auto cls = detail::parse_int(cells[1], where);
    if (id < 0 || static_cast<std::size_t>(id) >= n)
      fail(ErrorKind::SchemaError, where + ": node id " + std::to_string(id) + " outside 0.." + std::to_string(n - 1));
    if (cls < 0 || (num_classes > 0 && static_cast<std::size_t>(cls) >= num_classes))
      fail(ErrorKind::LabelError, where + ": unknown class " + std::to_string(cls));
    labels[static_cast<std::size_t>(id)] = static_cast<int>(cls);
  }
  return labels;
}

inline void write_labels_csv(std::ostream& os, const std::vector<int>& labels) {
  os << "node_id,class\n";
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= 0) os << i << ',' << labels[i] << '\n';
}

struct SplitIds {
  std::vector<NodeId> train, valid, test;
};

inline SplitIds read_split_json(std::istream& is, const std::string& name = "split") {
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::SchemaError, name + ": " + e.what());
  }
  SplitIds s;
  auto take = [&](const char* key, std::vector<NodeId>& out) {
    if (!j.contains(key) || !j[key].is_array()) fail(ErrorKind::SchemaError, name + ": missing array '" + key + "'");
    for (const auto& v : j[key]) {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
        fail(ErrorKind::SchemaError, name + ": non-integer id in '" + key + "'");
      out.push_back(v.get<NodeId>());
    }
  };
  take("train", s.train);
  take("valid", s.valid);
  take("test", s.test);
  return s;
}

inline void write_split_json(std::ostream& os, const InductiveSplit& s) {
  nlohmann::json j{{"train", s.train_ids}, {"valid", s.valid_ids}, {"test", s.test_ids}};
  os << j.dump() << '\n';
}

// ---------------------------------------------------------------------------
// Assembly and loading

/// Builds a Dataset from parsed parts: checks label coverage of the split,
/// builds the inductive split and normalizes features on the train ids.
inline Dataset assemble_dataset(Graph g, DenseMatrix raw, std::vector<int> labels, std::size_t num_classes,
                                const SplitIds& ids, DatasetMeta meta) {
  require(raw.rows() == g.num_nodes(), ErrorKind::SchemaError, "feature rows != node count");
  require(labels.size() == g.num_nodes(), ErrorKind::SchemaError, "label count != node count");
  if (num_classes == 0)
    for (int l : labels) num_classes = std::max(num_classes, static_cast<std::size_t>(l + 1));
  for (const auto* set : {&ids.train, &ids.valid, &ids.test})
    for (NodeId u : *set) {
      require(u < labels.size(), ErrorKind::SplitOverlap, "split id " + std::to_string(u) + " out of range");
      if (labels[u] < 0) fail(ErrorKind::LabelError, "split node " + std::to_string(u) + " has no label");
    }
  Dataset d;
  d.split = inductive_split(g, ids.train, ids.valid, ids.test);
  d.graph = std::move(g);
  d.x = normalize_features(raw, meta.normalization, d.split.train_ids);
  d.raw_features = std::move(raw);
  d.labels = std::move(labels);
  d.num_classes = num_classes;
  d.meta = std::move(meta);
  return d;
}

/// Loads the four dataset files. The node count comes from the features
/// file; the edge file and labels must agree with it.
inline Dataset load_dataset(const std::string& edges_path, const std::string& features_path,
                            const std::string& labels_path, const std::string& split_path, DatasetMeta meta = {},
                            std::size_t num_classes = 0) {
  auto fin = detail::open_or_throw(features_path);
  DenseMatrix raw = read_features_csv(fin, features_path);
  const std::size_t n = raw.rows();
  require(n > 0, ErrorKind::SchemaError, features_path + ": no rows");

  auto ein = detail::open_or_throw(edges_path);
  const auto edges = read_edge_list(ein);
  for (const auto& [u, v] : edges)
    if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n || static_cast<std::size_t>(v) >= n)
      fail(ErrorKind::SchemaError, edges_path + ": edge (" + std::to_string(u) + "," + std::to_string(v) +
                                       ") references a node outside the " + std::to_string(n) + " feature rows");
  Graph g = build_graph(n, edges);

  auto lin = detail::open_or_throw(labels_path);
  auto labels = read_labels_csv(lin, n, num_classes, labels_path);
  auto sin = detail::open_or_throw(split_path);
  const auto ids = read_split_json(sin, split_path);
  if (meta.name.empty()) meta.name = std::filesystem::path(features_path).parent_path().filename().string();
  return assemble_dataset(std::move(g), std::move(raw), std::move(labels), num_classes, ids, std::move(meta));
}

inline std::uint32_t file_crc32(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::SchemaError, "cannot open " + path);
  uLong crc = crc32(0L, Z_NULL, 0);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto got = in.gcount();
    if (got > 0) crc = crc32(crc, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(got));
  }
  return static_cast<std::uint32_t>(crc);
}

namespace detail {
inline std::string hex32(std::uint32_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(8) << std::setfill('0') << v;
  return os.str();
}
}  // namespace detail

/// Manifest `dataset.json`:
///   {"name": ..., "num_classes": c, "normalization": tag,
///    "files": {"edges": {"path": ..., "crc32": "hex"}, "features": ...,
///              "labels": ..., "split": ...}}
/// Paths are relative to the manifest. A checksum mismatch is a SchemaError.
inline Dataset load_manifest(const std::string& manifest_path) {
  auto in = detail::open_or_throw(manifest_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::SchemaError, manifest_path + ": " + e.what());
  }
  const auto dir = std::filesystem::path(manifest_path).parent_path();
  auto file = [&](const char* key) {
    if (!j.contains("files") || !j["files"].contains(key))
      fail(ErrorKind::SchemaError, manifest_path + ": missing files." + key);
    const auto& f = j["files"][key];
    const std::string p = (dir / f.at("path").get<std::string>()).string();
    if (f.contains("crc32")) {
      const std::string want = f["crc32"].get<std::string>();
      const std::string got = detail::hex32(file_crc32(p));
      if (want != got) fail(ErrorKind::SchemaError, p + ": checksum " + got + " does not match manifest " + want);
    }
    return p;
  };
  DatasetMeta meta;
  meta.name = j.value("name", dir.filename().string());
  meta.normalization = j.value("normalization", std::string(kNormalizeL1Standardize));
  const std::size_t c = j.value("num_classes", std::size_t{0});
  return load_dataset(file("edges"), file("features"), file("labels"), file("split"), meta, c);
}

/// Writes the four files plus dataset.json into `dir`. Raw features are
/// written, so loading the manifest reproduces the dataset exactly.
inline void save_dataset(const Dataset& d, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root(dir);
  auto write = [&](const char* fname, auto&& body) {
    std::ofstream os(root / fname, std::ios::binary);
    require(static_cast<bool>(os), ErrorKind::SchemaError, "cannot write " + (root / fname).string());
    body(os);
  };
  write("edges.txt", [&](std::ostream& os) { write_edge_list(os, d.graph); });
  write("features.csv", [&](std::ostream& os) { write_features_csv(os, d.raw_features); });
  write("labels.csv", [&](std::ostream& os) { write_labels_csv(os, d.labels); });
  write("split.json", [&](std::ostream& os) { write_split_json(os, d.split); });
  nlohmann::json files;
  for (const auto& [key, fname] : std::vector<std::pair<std::string, std::string>>{
           {"edges", "edges.txt"}, {"features", "features.csv"}, {"labels", "labels.csv"}, {"split", "split.json"}})
    files[key] = {{"path", fname}, {"crc32", detail::hex32(file_crc32((root / fname).string()))}};
  nlohmann::json m{{"name", d.meta.name},
                   {"num_classes", d.num_classes},
                   {"num_nodes", d.num_nodes()},
                   {"normalization", d.meta.normalization},
                   {"files", files}};
  write("dataset.json", [&](std::ostream& os) { os << m.dump(2) << '\n'; });
}

/// Resolves a dataset name against $PMLP_DATA_DIR: `<root>/<name>/dataset.json`.
inline std::optional<std::string> find_dataset(const std::string& name) {
  const char* root = std::getenv("PMLP_DATA_DIR");
  if (!root) return std::nullopt;
  const auto p = std::filesystem::path(root) / name / "dataset.json";
  if (std::filesystem::exists(p)) return p.string();
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Splits

/// Per class: `train_per_class` train, `valid_per_class` valid, rest test,
/// drawn uniformly at random. Ids in each set are sorted.
inline SplitIds per_class_split(const std::vector<int>& labels, std::size_t num_classes, std::size_t train_per_class,
                                std::size_t valid_per_class, Rng& rng) {
  std::vector<std::vector<NodeId>> by_class(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= 0) by_class[static_cast<std::size_t>(labels[i])].push_back(static_cast<NodeId>(i));
  SplitIds s;
  for (auto& members : by_class) {
    rng.shuffle(members);
    for (std::size_t k = 0; k < members.size(); ++k) {
      if (k < train_per_class) s.train.push_back(members[k]);
      else if (k < train_per_class + valid_per_class) s.valid.push_back(members[k]);
      else s.test.push_back(members[k]);
    }
  }
  for (auto* v : {&s.train, &s.valid, &s.test}) std::sort(v->begin(), v->end());
  return s;
}

/// floor(fraction * n) train ids, allocated across classes by largest
/// remainder on fraction * class size. The remaining labeled nodes are
/// shuffled and split in half: first half valid, second half test.
inline Dataset labeled_fraction_split(const Dataset& d, double fraction, std::uint64_t seed) {
  require(fraction > 0.0 && fraction < 1.0, ErrorKind::DimensionError, "fraction must be in (0,1)");
  Rng rng(seed);
  std::vector<std::vector<NodeId>> by_class(d.num_classes);
  std::size_t labeled = 0;
  for (std::size_t i = 0; i < d.labels.size(); ++i)
    if (d.labels[i] >= 0) {
      by_class[static_cast<std::size_t>(d.labels[i])].push_back(static_cast<NodeId>(i));
      ++labeled;
    }
  const auto total = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(d.num_nodes()) + 1e-9));
  require(total <= labeled, ErrorKind::StratificationError, "fraction asks for more train nodes than are labeled");

  std::vector<std::size_t> quota(d.num_classes);
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < d.num_classes; ++c) {
    const double exact = fraction * static_cast<double>(d.num_nodes()) * static_cast<double>(by_class[c].size()) /
                         static_cast<double>(labeled);
    quota[c] = std::min(by_class[c].size(), static_cast<std::size_t>(std::floor(exact + 1e-9)));
    assigned += quota[c];
    rem.emplace_back(exact - static_cast<double>(quota[c]), c);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total; k = (k + 1) % rem.size()) {
    const auto c = rem[k].second;
    if (quota[c] < by_class[c].size()) {
      ++quota[c];
      ++assigned;
    }
  }
  for (std::size_t c = 0; c < d.num_classes; ++c)
    if (!by_class[c].empty() && quota[c] == 0)
      fail(ErrorKind::StratificationError, "fraction leaves class " + std::to_string(c) + " without train nodes");

  SplitIds s;
  std::vector<NodeId> rest;
  for (std::size_t c = 0; c < d.num_classes; ++c) {
    auto members = by_class[c];
    rng.shuffle(members);
    s.train.insert(s.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(quota[c]));
    rest.insert(rest.end(), members.begin() + static_cast<std::ptrdiff_t>(quota[c]), members.end());
  }
  std::sort(rest.begin(), rest.end());
  rng.shuffle(rest);
  const std::size_t nv = rest.size() / 2;
  s.valid.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(nv));
  s.test.assign(rest.begin() + static_cast<std::ptrdiff_t>(nv), rest.end());
  for (auto* v : {&s.train, &s.valid, &s.test}) std::sort(v->begin(), v->end());
  return assemble_dataset(d.graph, d.raw_features, d.labels, d.num_classes, s, d.meta);
}

/// Replaces the graph (e.g. after a structural perturbation) keeping the
/// split ids; the train graph is recomputed from the new full graph.
inline Dataset with_graph(const Dataset& d, Graph g) {
  require(g.num_nodes() == d.num_nodes(), ErrorKind::DimensionError, "graph node count changed");
  return assemble_dataset(std::move(g), d.raw_features, d.labels, d.num_classes,
                          {d.split.train_ids, d.split.valid_ids, d.split.test_ids}, d.meta);
}

// ---------------------------------------------------------------------------
// Contextual stochastic block model

struct CsbmParams {
  std::size_t n = 1000;
  std::size_t num_classes = 2;
  double intra_p = 0.02;
  double inter_q = 0.002;
  std::size_t feature_dim = 16;
  double feature_signal = 1.0;
  std::uint64_t seed = 0;
  std::size_t train_per_class = 20;
  std::size_t valid_per_class = 30;

  void validate() const {
    require(num_classes >= 1 && n >= num_classes, ErrorKind::DimensionError, "csbm needs n >= num_classes >= 1");
    require(inter_q >= 0.0 && inter_q <= intra_p && intra_p <= 1.0, ErrorKind::DimensionError,
            "csbm needs 0 <= q <= p <= 1");
    require(feature_dim >= 1, ErrorKind::DimensionError, "csbm feature_dim must be >= 1");
    require(feature_signal >= 0.0, ErrorKind::DimensionError, "csbm feature_signal must be >= 0");
  }

  /// "n=1000,c=2,p=0.02,q=0.002,d=16,signal=0.5,seed=3" (any subset).
  static CsbmParams parse(const std::string& spec) {
    CsbmParams p;
    std::size_t start = 0;
    while (start < spec.size()) {
      auto end = spec.find(',', start);
      if (end == std::string::npos) end = spec.size();
      const std::string kv = spec.substr(start, end - start);
      start = end + 1;
      if (kv.empty()) continue;
      const auto eq = kv.find('=');
      if (eq == std::string::npos) fail(ErrorKind::ParseError, "csbm option '" + kv + "' lacks '='");
      const std::string k = kv.substr(0, eq);
      const std::string v = kv.substr(eq + 1);
      const std::string where = "csbm option " + k;
      if (k == "n") p.n = static_cast<std::size_t>(detail::parse_int(v, where));
      else if (k == "c") p.num_classes = static_cast<std::size_t>(detail::parse_int(v, where));
      else if (k == "p") p.intra_p = detail::parse_double(v, where);
      else if (k == "q") p.inter_q = detail::parse_double(v, where);
      else if (k == "d") p.feature_dim = static_cast<std::size_t>(detail::parse_int(v, where));
      else if (k == "signal") p.feature_signal = detail::parse_double(v, where);
      else if (k == "seed") p.seed = static_cast<std::uint64_t>(detail::parse_int(v, where));
      else if (k == "train") p.train_per_class = static_cast<std::size_t>(detail::parse_int(v, where));
      else if (k == "valid") p.valid_per_class = static_cast<std::size_t>(detail::parse_int(v, where));
      else fail(ErrorKind::ParseError, "unknown csbm option '" + k + "'");
    }
    return p;
  }
};

namespace detail {

// Calls emit(k) for each index k in [0, count) kept independently with
// probability p, using geometric gaps.
template <class F>
void bernoulli_indices(Rng& rng, std::uint64_t count, double p, F&& emit) {
  if (p <= 0.0 || count == 0) return;
  if (p >= 1.0) {
    for (std::uint64_t k = 0; k < count; ++k) emit(k);
    return;
  }
  const double log_q = std::log1p(-p);
  std::uint64_t k = 0;
  while (true) {
    const double u = 1.0 - rng.uniform();  // (0, 1]
    const double gap = std::floor(std::log(u) / log_q);
    if (gap >= static_cast<double>(count - k)) return;
    k += static_cast<std::uint64_t>(gap);
    emit(k);
    if (++k >= count) return;
  }
}

}  // namespace detail

/// Balanced class assignment (sizes differ by at most one, then shuffled),
/// edges drawn independently with probability p within a class and q across,
/// features = class mean + N(0, I) with each class mean a random direction
/// scaled to norm feature_signal. Default split: 20 train / 30 valid per
/// class, the rest test. Features are not normalized.
inline Dataset csbm_generate(const CsbmParams& p) {
  p.validate();
  Rng root(p.seed);
  Rng label_rng = root.derive(1), edge_rng = root.derive(2), feat_rng = root.derive(3), split_rng = root.derive(4);

  std::vector<int> labels(p.n);
  for (std::size_t i = 0; i < p.n; ++i) labels[i] = static_cast<int>(i % p.num_classes);
  label_rng.shuffle(labels);

  std::vector<std::vector<NodeId>> members(p.num_classes);
  for (std::size_t i = 0; i < p.n; ++i) members[static_cast<std::size_t>(labels[i])].push_back(static_cast<NodeId>(i));

  std::vector<Edge> edges;
  for (std::size_t a = 0; a < p.num_classes; ++a)
    for (std::size_t b = a; b < p.num_classes; ++b) {
      const auto& A = members[a];
      const auto& B = members[b];
      if (a == b) {
        // Pairs (i, j), i < j, enumerated row by row.
        const std::uint64_t m = A.size();
        std::uint64_t row = 0, row_start = 0;
        detail::bernoulli_indices(edge_rng, m * (m - 1) / 2, p.intra_p, [&](std::uint64_t k) {
          while (k >= row_start + (m - 1 - row)) {
            row_start += m - 1 - row;
            ++row;
          }
          const NodeId u = A[row], v = A[row + 1 + (k - row_start)];
          edges.emplace_back(std::min(u, v), std::max(u, v));
        });
      } else {
        const std::uint64_t nb = B.size();
        detail::bernoulli_indices(edge_rng, A.size() * nb, p.inter_q, [&](std::uint64_t k) {
          const NodeId u = A[k / nb], v = B[k % nb];
          edges.emplace_back(std::min(u, v), std::max(u, v));
        });
      }
    }
  std::sort(edges.begin(), edges.end());
  Graph g = Graph::from_canonical(p.n, std::move(edges));

  DenseMatrix means(p.num_classes, p.feature_dim);
  for (std::size_t c = 0; c < p.num_classes; ++c) {
    double nrm = 0.0;
    while (nrm == 0.0) {
      for (double& v : means.row(c)) v = feat_rng.normal();
      nrm = norm2(means.row(c));
    }
    for (double& v : means.row(c)) v *= p.feature_signal / nrm;
  }
  DenseMatrix x(p.n, p.feature_dim);
  for (std::size_t i = 0; i < p.n; ++i)
    for (std::size_t k = 0; k < p.feature_dim; ++k)
      x(i, k) = means(static_cast<std::size_t>(labels[i]), k) + feat_rng.normal();

  const auto ids = per_class_split(labels, p.num_classes, p.train_per_class, p.valid_per_class, split_rng);
  std::ostringstream name;
  name << "csbm:n=" << p.n << ",c=" << p.num_classes << ",p=" << p.intra_p << ",q=" << p.inter_q
       << ",d=" << p.feature_dim << ",signal=" << p.feature_signal << ",seed=" << p.seed;
  return assemble_dataset(std::move(g), std::move(x), std::move(labels), p.num_classes, ids,
                          DatasetMeta{name.str(), kNormalizeNone});
}

}  // namespace pmlp

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "bgcn/graph.hpp"

namespace bgcn {

using json = nlohmann::json;

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string file, std::int64_t line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
        file_(std::move(file)),
        line_(line) {}

  const std::string& file() const { return file_; }
  std::int64_t line() const { return line_; }

 private:
  std::string file_;
  std::int64_t line_;
};

struct Dataset {
  Graph graph;
  FeatureMatrix features;
  LabelSet labels;
};

struct LoadOptions {
  // L1-normalize each feature row (zero rows are left alone).
  bool row_normalize_features = true;
  // Collects warnings when non-null, otherwise they go to stderr.
  std::vector<std::string>* warnings = nullptr;
};

namespace detail {

inline void emit_warning(const LoadOptions& opts, const std::string& msg) {
  if (opts.warnings)
    opts.warnings->push_back(msg);
  else
    std::cerr << "warning: " << msg << "\n";
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}

inline long parse_int(const std::string& s, const std::string& file, std::int64_t line,
                      const std::string& what) {
  try {
    std::size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError(file, line, "expected integer for " + what + ", got '" + s + "'");
  }
}

inline double parse_double(const std::string& s, const std::string& file, std::int64_t line,
                           const std::string& what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError(file, line, "expected number for " + what + ", got '" + s + "'");
  }
}

}  // namespace detail

// Reads the edge CSV ("src,dst" header, zero-based ids). The list is treated
// as undirected; one row per edge is the canonical form and loads silently.
// Reciprocal or duplicate rows (a directed dump) collapse to one edge with a
// warning, and self-loops are dropped with a warning.
inline Graph load_edge_csv(const std::string& path, int n_nodes, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::string line;
  std::int64_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(path, 1, "missing 'src,dst' header");
  ++lineno;
  {
    auto header = detail::split_csv_line(line);
    if (header.size() != 2 || header[0] != "src" || header[1] != "dst")
      throw ParseError(path, 1, "expected header 'src,dst'");
  }
  std::vector<NodePair> undirected;
  std::int64_t self_loops = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != 2) throw ParseError(path, lineno, "expected 2 fields");
    long a = detail::parse_int(fields[0], path, lineno, "src");
    long b = detail::parse_int(fields[1], path, lineno, "dst");
    if (a < 0 || b < 0 || a >= n_nodes || b >= n_nodes)
      throw ParseError(path, lineno, "node id out of range [0," + std::to_string(n_nodes) + ")");
    if (a == b) {
      ++self_loops;
      continue;
    }
    undirected.emplace_back(static_cast<int>(a), static_cast<int>(b));
  }
  if (self_loops > 0)
    detail::emit_warning(opts, path + ": dropped " + std::to_string(self_loops) + " self-loop(s)");
  const std::int64_t rows = static_cast<std::int64_t>(undirected.size());
  Graph g = Graph::from_edges(n_nodes, std::move(undirected));
  if (rows > g.n_edges())
    detail::emit_warning(opts, path + ": symmetrized directed edge list (" +
                                   std::to_string(rows - g.n_edges()) +
                                   " reciprocal/duplicate row(s) collapsed)");
  return g;
}

inline FeatureMatrix load_feature_csv(const std::string& path, int n_nodes, int feature_dim,
                                      const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::vector<Eigen::Triplet<double>> entries;
  std::string line;
  std::int64_t lineno = 0;
  int row = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (row >= n_nodes) throw ParseError(path, lineno, "more feature rows than nodes");
    auto fields = detail::split_csv_line(line);
    if (static_cast<int>(fields.size()) != feature_dim)
      throw ParseError(path, lineno, "expected " + std::to_string(feature_dim) + " fields, got " +
                                         std::to_string(fields.size()));
    double row_sum = 0.0;
    std::vector<std::pair<int, double>> row_values;
    for (int j = 0; j < feature_dim; ++j) {
      double v = detail::parse_double(fields[static_cast<std::size_t>(j)], path, lineno,
                                      "feature " + std::to_string(j));
      if (v != 0.0) {
        row_values.emplace_back(j, v);
        row_sum += std::abs(v);
      }
    }
    const double scale = (opts.row_normalize_features && row_sum > 0.0) ? 1.0 / row_sum : 1.0;
    for (const auto& [j, v] : row_values) entries.emplace_back(row, j, v * scale);
    ++row;
  }
  if (row != n_nodes)
    throw ParseError(path, lineno, "expected " + std::to_string(n_nodes) + " feature rows, got " +
                                       std::to_string(row));
  FeatureMatrix x(n_nodes, feature_dim);
  x.setFromTriplets(entries.begin(), entries.end());
  x.makeCompressed();
  return x;
}

inline LabelSet load_label_csv(const std::string& path, int n_nodes, int n_classes) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::string line;
  std::int64_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(path, 1, "missing 'node,class,role' header");
  ++lineno;
  {
    auto header = detail::split_csv_line(line);
    if (header.size() != 3 || header[0] != "node" || header[1] != "class" || header[2] != "role")
      throw ParseError(path, 1, "expected header 'node,class,role'");
  }
  LabelSet labels;
  labels.n_classes = n_classes;
  labels.labels.assign(static_cast<std::size_t>(n_nodes), -1);
  labels.roles.assign(static_cast<std::size_t>(n_nodes), NodeRole::unlabeled);
  std::vector<bool> seen(static_cast<std::size_t>(n_nodes), false);
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != 3) throw ParseError(path, lineno, "expected 3 fields");
    long node = detail::parse_int(fields[0], path, lineno, "node");
    if (node < 0 || node >= n_nodes) throw ParseError(path, lineno, "node id out of range");
    if (seen[static_cast<std::size_t>(node)])
      throw ParseError(path, lineno, "duplicate row for node " + std::to_string(node));
    seen[static_cast<std::size_t>(node)] = true;
    int cls = -1;
    if (!fields[1].empty()) {
      long c = detail::parse_int(fields[1], path, lineno, "class");
      if (c < 0 || c >= n_classes) throw ParseError(path, lineno, "class index out of range");
      cls = static_cast<int>(c);
    }
    NodeRole role;
    if (fields[2] == "train_pool")
      role = NodeRole::train_pool;
    else if (fields[2] == "test")
      role = NodeRole::test;
    else if (fields[2] == "unlabeled")
      role = NodeRole::unlabeled;
    else
      throw ParseError(path, lineno, "unknown role '" + fields[2] + "'");
    if (cls < 0 && role != NodeRole::unlabeled)
      throw ParseError(path, lineno, "node with role '" + fields[2] + "' must carry a class");
    labels.labels[static_cast<std::size_t>(node)] = cls;
    labels.roles[static_cast<std::size_t>(node)] = role;
  }
  for (int a = 0; a < n_nodes; ++a)
    if (labels.roles[static_cast<std::size_t>(a)] == NodeRole::test && labels.has_label(a))
      labels.test_mask.push_back(a);
  labels.validate();
  return labels;
}

// Loads the portable container: a JSON manifest naming the edge, feature and
// label CSVs plus the global counts. `path` may be the manifest file or the
// directory holding manifest.json.
inline Dataset load_dataset(const std::string& path, const LoadOptions& opts = {}) {
  namespace fs = std::filesystem;
  fs::path manifest_path(path);
  if (fs::is_directory(manifest_path)) manifest_path /= "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw ParseError(manifest_path.string(), 0, "cannot open manifest");
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw ParseError(manifest_path.string(), 0, std::string("invalid JSON: ") + e.what());
  }
  for (const char* key : {"n_nodes", "n_classes", "feature_dim", "files"})
    if (!manifest.contains(key))
      throw ParseError(manifest_path.string(), 0, std::string("manifest missing key '") + key + "'");
  const int n_nodes = manifest.at("n_nodes").get<int>();
  const int n_classes = manifest.at("n_classes").get<int>();
  const int feature_dim = manifest.at("feature_dim").get<int>();
  if (n_nodes < 0 || n_classes <= 0 || feature_dim <= 0)
    throw ParseError(manifest_path.string(), 0, "manifest counts must be positive");
  const auto& files = manifest.at("files");
  for (const char* key : {"edges", "features", "labels"})
    if (!files.contains(key))
      throw ParseError(manifest_path.string(), 0, std::string("manifest files missing '") + key + "'");
  const fs::path dir = manifest_path.parent_path();

  Dataset ds;
  ds.graph = load_edge_csv((dir / files.at("edges").get<std::string>()).string(), n_nodes, opts);
  ds.features =
      load_feature_csv((dir / files.at("features").get<std::string>()).string(), n_nodes,
                       feature_dim, opts);
  ds.labels = load_label_csv((dir / files.at("labels").get<std::string>()).string(), n_nodes,
                             n_classes);
  return ds;
}

inline void write_edge_csv(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "src,dst\n";
  for (const auto& [a, b] : g.edges()) out << a << "," << b << "\n";
}

// Writes a dataset as a container directory (manifest.json + three CSVs).
// Feature rows are written as stored; load-time normalization is not undone.
inline void save_container(const Dataset& ds, const std::string& dir_path,
                           const json& manifest_extra = json::object()) {
  namespace fs = std::filesystem;
  fs::path dir(dir_path);
  fs::create_directories(dir);

  write_edge_csv(ds.graph, (dir / "edges.csv").string());

  {
    std::ofstream out(dir / "features.csv");
    if (!out) throw std::runtime_error("cannot write features.csv");
    out.precision(17);
    const int n = static_cast<int>(ds.features.rows());
    const int d = static_cast<int>(ds.features.cols());
    Eigen::RowVectorXd dense(d);
    for (int a = 0; a < n; ++a) {
      dense.setZero();
      for (FeatureMatrix::InnerIterator it(ds.features, a); it; ++it) dense[it.col()] = it.value();
      for (int j = 0; j < d; ++j) {
        if (j) out << ",";
        out << dense[j];
      }
      out << "\n";
    }
  }

  {
    std::ofstream out(dir / "labels.csv");
    if (!out) throw std::runtime_error("cannot write labels.csv");
    out << "node,class,role\n";
    for (int a = 0; a < ds.labels.n_nodes(); ++a) {
      out << a << ",";
      if (ds.labels.has_label(a)) out << ds.labels.label(a);
      out << "," << to_string(ds.labels.roles[static_cast<std::size_t>(a)]) << "\n";
    }
  }

  json manifest = manifest_extra;
  manifest["n_nodes"] = ds.labels.n_nodes();
  manifest["n_classes"] = ds.labels.n_classes;
  manifest["feature_dim"] = static_cast<int>(ds.features.cols());
  manifest["files"] = {{"edges", "edges.csv"}, {"features", "features.csv"}, {"labels", "labels.csv"}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest.json");
  out << manifest.dump(2) << "\n";
}

}  // namespace bgcn

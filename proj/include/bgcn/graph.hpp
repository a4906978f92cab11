#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bgcn {

using SparseMatrix = Eigen::SparseMatrix<double>;
using RowSparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Node features, one row per node. Sparse because the datasets of interest
// are bag-of-words.
using FeatureMatrix = RowSparseMatrix;

// Symmetric n x n propagation matrix used by the graph convolution layers.
using PropagationMatrix = SparseMatrix;

using NodePair = std::pair<int, int>;

// Immutable undirected graph: unordered node pairs (a < b), no self-loops,
// no duplicate edges. Safe to share across threads after construction.
class Graph {
 public:
  Graph() = default;

  // Canonicalizes (a, b) -> (min, max), drops duplicates, rejects self-loops
  // and out-of-range endpoints.
  static Graph from_edges(int n_nodes, std::vector<NodePair> edges) {
    if (n_nodes < 0) throw std::invalid_argument("Graph: negative node count");
    for (auto& [a, b] : edges) {
      if (a < 0 || b < 0 || a >= n_nodes || b >= n_nodes)
        throw std::invalid_argument("Graph: edge endpoint out of range: (" +
                                    std::to_string(a) + "," + std::to_string(b) + ")");
      if (a == b)
        throw std::invalid_argument("Graph: self-loop at node " + std::to_string(a));
      if (a > b) std::swap(a, b);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    Graph g;
    g.n_nodes_ = n_nodes;
    g.edges_ = std::move(edges);
    g.adjacency_.assign(static_cast<std::size_t>(n_nodes), {});
    for (const auto& [a, b] : g.edges_) {
      g.adjacency_[static_cast<std::size_t>(a)].push_back(b);
      g.adjacency_[static_cast<std::size_t>(b)].push_back(a);
    }
    for (auto& nbrs : g.adjacency_) std::sort(nbrs.begin(), nbrs.end());
    return g;
  }

  int n_nodes() const { return n_nodes_; }
  std::int64_t n_edges() const { return static_cast<std::int64_t>(edges_.size()); }

  // Number of unordered node pairs, edge or not.
  std::int64_t n_pairs() const {
    return static_cast<std::int64_t>(n_nodes_) * (n_nodes_ - 1) / 2;
  }

  const std::vector<NodePair>& edges() const { return edges_; }

  const std::vector<int>& neighbors(int a) const {
    return adjacency_[static_cast<std::size_t>(a)];
  }

  int degree(int a) const {
    return static_cast<int>(adjacency_[static_cast<std::size_t>(a)].size());
  }

  bool has_edge(int a, int b) const {
    if (a == b) return false;
    const auto& nbrs = adjacency_[static_cast<std::size_t>(a)];
    return std::binary_search(nbrs.begin(), nbrs.end(), b);
  }

 private:
  int n_nodes_ = 0;
  std::vector<NodePair> edges_;
  std::vector<std::vector<int>> adjacency_;
};

// Renormalized propagation matrix: with A the adjacency matrix and
// D~ = diag(rowsum(A + I)), returns D~^{-1/2} (A + I) D~^{-1/2}.
// Isolated nodes keep a unit self-loop entry.
inline PropagationMatrix normalize_adjacency(const Graph& g) {
  const int n = g.n_nodes();
  std::vector<double> inv_sqrt_deg(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a)
    inv_sqrt_deg[static_cast<std::size_t>(a)] = 1.0 / std::sqrt(g.degree(a) + 1.0);

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(2 * g.n_edges() + n));
  for (int a = 0; a < n; ++a) {
    const double da = inv_sqrt_deg[static_cast<std::size_t>(a)];
    entries.emplace_back(a, a, da * da);
  }
  for (const auto& [a, b] : g.edges()) {
    const double w = inv_sqrt_deg[static_cast<std::size_t>(a)] *
                     inv_sqrt_deg[static_cast<std::size_t>(b)];
    entries.emplace_back(a, b, w);
    entries.emplace_back(b, a, w);
  }
  PropagationMatrix result(n, n);
  result.setFromTriplets(entries.begin(), entries.end());
  result.makeCompressed();
  return result;
}

enum class NodeRole : std::uint8_t { train_pool, test, unlabeled };

inline const char* to_string(NodeRole r) {
  switch (r) {
    case NodeRole::train_pool: return "train_pool";
    case NodeRole::test: return "test";
    case NodeRole::unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

// Partial labels plus train/test designation. labels[a] == -1 means the
// label of node a is unknown. train_mask and test_mask are sorted, disjoint,
// and every node they contain carries a label.
struct LabelSet {
  int n_classes = 0;
  std::vector<int> labels;
  std::vector<NodeRole> roles;
  std::vector<int> train_mask;
  std::vector<int> test_mask;

  int n_nodes() const { return static_cast<int>(labels.size()); }
  bool has_label(int a) const { return labels[static_cast<std::size_t>(a)] >= 0; }
  int label(int a) const { return labels[static_cast<std::size_t>(a)]; }

  void validate() const {
    if (roles.size() != labels.size())
      throw std::invalid_argument("LabelSet: roles/labels size mismatch");
    auto check_mask = [&](const std::vector<int>& mask, const char* name) {
      for (std::size_t i = 0; i < mask.size(); ++i) {
        int a = mask[i];
        if (a < 0 || a >= n_nodes())
          throw std::invalid_argument(std::string("LabelSet: ") + name + " node out of range");
        if (i > 0 && mask[i - 1] >= a)
          throw std::invalid_argument(std::string("LabelSet: ") + name + " not sorted/unique");
        if (!has_label(a))
          throw std::invalid_argument(std::string("LabelSet: unlabeled node in ") + name);
      }
    };
    check_mask(train_mask, "train_mask");
    check_mask(test_mask, "test_mask");
    std::vector<int> overlap;
    std::set_intersection(train_mask.begin(), train_mask.end(), test_mask.begin(),
                          test_mask.end(), std::back_inserter(overlap));
    if (!overlap.empty())
      throw std::invalid_argument("LabelSet: train and test masks overlap");
    for (int v : labels)
      if (v >= n_classes)
        throw std::invalid_argument("LabelSet: class index out of range");
  }
};

}  // namespace bgcn

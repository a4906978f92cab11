#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "bgcn/graph.hpp"
#include "bgcn/random.hpp"

namespace bgcn {

enum class SplitMode { fixed, random };

// Builds a train/test split with exactly per_class training nodes per class.
//
// fixed:  the first per_class labeled nodes of each class, in container
//         (node-index) order, drawn from the train_pool role; if a class has
//         too few pool nodes the remaining slots are filled from other
//         labeled non-test nodes, still in container order.
// random: seed-reproducible uniform draw per class from all labeled
//         non-test nodes.
//
// The test mask is always the container's test designation.
inline LabelSet make_split(const LabelSet& labels, int per_class, SplitMode mode,
                           std::uint64_t seed) {
  if (per_class <= 0) throw std::invalid_argument("make_split: per_class must be positive");
  const int n = labels.n_nodes();
  const int k = labels.n_classes;

  std::vector<std::vector<int>> pool(static_cast<std::size_t>(k));
  std::vector<std::vector<int>> fallback(static_cast<std::size_t>(k));
  for (int a = 0; a < n; ++a) {
    if (!labels.has_label(a)) continue;
    if (labels.roles[static_cast<std::size_t>(a)] == NodeRole::test) continue;
    auto c = static_cast<std::size_t>(labels.label(a));
    if (labels.roles[static_cast<std::size_t>(a)] == NodeRole::train_pool)
      pool[c].push_back(a);
    else
      fallback[c].push_back(a);
  }

  LabelSet out = labels;
  out.train_mask.clear();
  out.test_mask.clear();
  for (int a = 0; a < n; ++a)
    if (labels.roles[static_cast<std::size_t>(a)] == NodeRole::test && labels.has_label(a))
      out.test_mask.push_back(a);

  auto rng = make_rng(seed);
  for (int c = 0; c < k; ++c) {
    std::vector<int> candidates = pool[static_cast<std::size_t>(c)];
    candidates.insert(candidates.end(), fallback[static_cast<std::size_t>(c)].begin(),
                      fallback[static_cast<std::size_t>(c)].end());
    if (static_cast<int>(candidates.size()) < per_class)
      throw std::runtime_error("make_split: class " + std::to_string(c) + " has only " +
                               std::to_string(candidates.size()) + " labeled non-test nodes, need " +
                               std::to_string(per_class));
    if (mode == SplitMode::random) std::shuffle(candidates.begin(), candidates.end(), rng);
    out.train_mask.insert(out.train_mask.end(), candidates.begin(),
                          candidates.begin() + per_class);
  }
  std::sort(out.train_mask.begin(), out.train_mask.end());
  out.validate();
  return out;
}

}  // namespace bgcn

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "bgcn/dataset.hpp"
#include "bgcn/graph.hpp"
#include "bgcn/random.hpp"
#include "bgcn/sbm_generator.hpp"

namespace bgcn {

// Planted-community dataset for demos and smoke tests: a hard-membership
// block-model graph whose classes double as communities, plus sparse
// class-indicative bag-of-words features.
struct SyntheticSpec {
  int n_nodes = 300;
  int n_classes = 3;
  double intra_strength = 0.10;  // beta for every community
  double cross_probability = 0.01;
  int feature_dim = 60;
  int features_per_node = 6;
  double feature_noise = 0.1;  // chance an active feature falls outside the class band
  int train_pool_per_class = 20;
  double test_fraction = 0.5;  // of the remaining nodes
  std::uint64_t seed = 1;
};

inline Dataset make_synthetic_dataset(const SyntheticSpec& spec) {
  const int n = spec.n_nodes, k = spec.n_classes;
  std::vector<int> classes(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) classes[static_cast<std::size_t>(a)] = a % k;

  Dataset ds;
  ds.graph = generate_sbm(n, k, hard_memberships(classes, k),
                          Eigen::VectorXd::Constant(k, spec.intra_strength),
                          spec.cross_probability, derive_seed(spec.seed, {0xD1}));

  auto rng = make_rng(derive_seed(spec.seed, {0xD2}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> any_feature(0, spec.feature_dim - 1);
  const int band = spec.feature_dim / k;
  std::vector<Eigen::Triplet<double>> entries;
  for (int a = 0; a < n; ++a) {
    const int c = classes[static_cast<std::size_t>(a)];
    std::vector<bool> used(static_cast<std::size_t>(spec.feature_dim), false);
    int placed = 0;
    while (placed < spec.features_per_node) {
      int j;
      if (unit(rng) < spec.feature_noise) {
        j = any_feature(rng);
      } else {
        std::uniform_int_distribution<int> in_band(c * band, (c + 1) * band - 1);
        j = in_band(rng);
      }
      if (used[static_cast<std::size_t>(j)]) continue;
      used[static_cast<std::size_t>(j)] = true;
      entries.emplace_back(a, j, 1.0);
      ++placed;
    }
  }
  ds.features.resize(n, spec.feature_dim);
  ds.features.setFromTriplets(entries.begin(), entries.end());
  ds.features.makeCompressed();

  ds.labels.n_classes = k;
  ds.labels.labels = classes;
  ds.labels.roles.assign(static_cast<std::size_t>(n), NodeRole::unlabeled);
  std::vector<int> pool_count(static_cast<std::size_t>(k), 0);
  auto role_rng = make_rng(derive_seed(spec.seed, {0xD3}));
  for (int a = 0; a < n; ++a) {
    const auto c = static_cast<std::size_t>(classes[static_cast<std::size_t>(a)]);
    if (pool_count[c] < spec.train_pool_per_class) {
      ds.labels.roles[static_cast<std::size_t>(a)] = NodeRole::train_pool;
      ++pool_count[c];
    } else if (std::uniform_real_distribution<double>(0.0, 1.0)(role_rng) < spec.test_fraction) {
      ds.labels.roles[static_cast<std::size_t>(a)] = NodeRole::test;
    }
  }
  for (int a = 0; a < n; ++a)
    if (ds.labels.roles[static_cast<std::size_t>(a)] == NodeRole::test)
      ds.labels.test_mask.push_back(a);
  ds.labels.validate();
  return ds;
}

}  // namespace bgcn

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "bgcn/graph.hpp"
#include "bgcn/mmsbm.hpp"
#include "bgcn/random.hpp"

namespace bgcn {

// Marginal link probability of a pair under the block model:
//   sum_k pi_ak pi_bk beta_k + (1 - sum_k pi_ak pi_bk) delta.
template <typename RowA, typename RowB>
inline double edge_probability(const RowA& pi_a, const RowB& pi_b, const Eigen::VectorXd& beta,
                               double delta) {
  double same = 0.0, p = 0.0;
  for (Eigen::Index k = 0; k < beta.size(); ++k) {
    const double w = pi_a[k] * pi_b[k];
    same += w;
    p += w * beta[k];
  }
  return p + (1.0 - same) * delta;
}

enum class SampleMethod { exact, fast };

struct SampledGraph {
  Graph graph;
  std::uint64_t params_hash = 0;  // FNV over (pi, beta, delta)
  std::uint64_t seed = 0;
};

namespace detail {

inline std::uint64_t block_params_hash(const BlockParams& bp, double delta) {
  std::uint64_t h = fnv1a64(bp.pi.data(), sizeof(double) * static_cast<std::size_t>(bp.pi.size()));
  h = fnv1a64(bp.beta.data(), sizeof(double) * static_cast<std::size_t>(bp.beta.size()), h);
  return fnv1a64(&delta, sizeof(delta), h);
}

// Number of Bernoulli(p) failures before the next success.
inline std::int64_t geometric_gap(double p, std::mt19937_64& rng) {
  if (p >= 1.0) return 0;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = std::max(unit(rng), 1e-300);
  return static_cast<std::int64_t>(std::floor(std::log(u) / std::log1p(-p)));
}

// Pairs (a, b), a < b, enumerated a-major: (0,1) ... (0,n-1), (1,2), ...
inline std::int64_t pair_offset(int a, int n) {
  return static_cast<std::int64_t>(a) * (2 * n - a - 1) / 2;
}

inline NodePair decode_pair(std::int64_t idx, int n) {
  int a = static_cast<int>(
      std::floor(((2.0 * n - 1.0) - std::sqrt((2.0 * n - 1.0) * (2.0 * n - 1.0) -
                                              8.0 * static_cast<double>(idx))) /
                 2.0));
  a = std::max(0, std::min(a, n - 2));
  while (a > 0 && pair_offset(a, n) > idx) --a;
  while (a < n - 2 && pair_offset(a + 1, n) <= idx) ++a;
  const int b = a + 1 + static_cast<int>(idx - pair_offset(a, n));
  return {a, b};
}

// Visits each index in [0, total) independently with probability p.
template <typename Visit>
inline void skip_sample(std::int64_t total, double p, std::mt19937_64& rng, Visit&& visit) {
  if (p <= 0.0 || total <= 0) return;
  std::int64_t idx = geometric_gap(p, rng);
  while (idx < total) {
    visit(idx);
    idx += 1 + geometric_gap(p, rng);
  }
}

inline Graph sample_exact(const BlockParams& bp, double delta, std::mt19937_64& rng) {
  const int n = static_cast<int>(bp.pi.rows());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<NodePair> edges;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (unit(rng) < edge_probability(bp.pi.row(a), bp.pi.row(b), bp.beta, delta))
        edges.emplace_back(a, b);
  return Graph::from_edges(n, std::move(edges));
}

// Collapses each node to one community draw z_a ~ pi_a, then samples
// within-community pairs at beta_k by geometric skipping and the
// cross-community background at delta (same-community hits of the background
// pass are discarded; those pairs belong to the beta_k pass). Per-pair
// marginals match the exact sampler; expected work is
// O(N + delta N^2 + sum_k beta_k |B_k|^2).
inline Graph sample_fast(const BlockParams& bp, double delta, std::mt19937_64& rng) {
  const int n = static_cast<int>(bp.pi.rows());
  const int k = static_cast<int>(bp.beta.size());
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<int> z(static_cast<std::size_t>(n));
  std::vector<std::vector<int>> blocks(static_cast<std::size_t>(k));
  for (int a = 0; a < n; ++a) {
    double u = unit(rng), cum = 0.0;
    int pick = k - 1;
    for (int c = 0; c < k; ++c) {
      cum += bp.pi(a, c);
      if (u < cum) {
        pick = c;
        break;
      }
    }
    z[static_cast<std::size_t>(a)] = pick;
    blocks[static_cast<std::size_t>(pick)].push_back(a);
  }

  std::vector<NodePair> edges;
  for (int c = 0; c < k; ++c) {
    const auto& members = blocks[static_cast<std::size_t>(c)];
    const int m = static_cast<int>(members.size());
    const std::int64_t total = static_cast<std::int64_t>(m) * (m - 1) / 2;
    skip_sample(total, bp.beta[c], rng, [&](std::int64_t idx) {
      const auto [i, j] = decode_pair(idx, m);
      edges.emplace_back(members[static_cast<std::size_t>(i)],
                         members[static_cast<std::size_t>(j)]);
    });
  }
  const std::int64_t total_pairs = static_cast<std::int64_t>(n) * (n - 1) / 2;
  skip_sample(total_pairs, delta, rng, [&](std::int64_t idx) {
    const auto [a, b] = decode_pair(idx, n);
    if (z[static_cast<std::size_t>(a)] != z[static_cast<std::size_t>(b)])
      edges.emplace_back(a, b);
  });
  return Graph::from_edges(n, std::move(edges));
}

}  // namespace detail

// Draws one graph from p(G | pi, beta). The exact method runs independent
// Bernoulli(edge_probability) draws over all O(N^2) pairs; the fast method
// realizes the same per-pair marginals with expected near-linear work on
// sparse models.
inline SampledGraph sample_graph(const BlockParams& bp, double delta, std::uint64_t seed,
                                 SampleMethod method = SampleMethod::exact) {
  if (bp.pi.rows() == 0) throw std::invalid_argument("sample_graph: empty block params");
  if (bp.pi.cols() != bp.beta.size())
    throw std::invalid_argument("sample_graph: pi/beta community count mismatch");
  for (Eigen::Index c = 0; c < bp.beta.size(); ++c)
    if (bp.beta[c] < 0.0 || bp.beta[c] > 1.0)
      throw std::invalid_argument("sample_graph: beta out of [0,1]");
  if (delta < 0.0 || delta > 1.0) throw std::invalid_argument("sample_graph: delta out of [0,1]");

  auto rng = make_rng(seed);
  SampledGraph out;
  out.params_hash = detail::block_params_hash(bp, delta);
  out.seed = seed;
  out.graph = (method == SampleMethod::exact) ? detail::sample_exact(bp, delta, rng)
                                              : detail::sample_fast(bp, delta, rng);
  return out;
}

}  // namespace bgcn

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "bgcn/graph.hpp"
#include "bgcn/random.hpp"

namespace bgcn {

namespace detail {

inline int draw_categorical(const Eigen::MatrixXd& pi, int row, double u) {
  const int k = static_cast<int>(pi.cols());
  double cum = 0.0;
  for (int c = 0; c < k; ++c) {
    cum += pi(row, c);
    if (u < cum) return c;
  }
  return k - 1;
}

}  // namespace detail

// Mixed-membership block-model generator. For each unordered pair (a, b) the
// endpoints independently pick communities z_ab ~ pi_a and z_ba ~ pi_b; the
// link appears with probability beta[k] when z_ab == z_ba == k, otherwise
// with the cross-community probability delta. Fixed seed gives a
// bit-identical graph.
inline Graph generate_sbm(int n, int k, const Eigen::MatrixXd& pi,
                          const Eigen::VectorXd& beta, double delta,
                          std::uint64_t seed) {
  if (pi.rows() != n || pi.cols() != k)
    throw std::invalid_argument("generate_sbm: pi must be n x k");
  if (beta.size() != k)
    throw std::invalid_argument("generate_sbm: beta must have k entries");
  for (int a = 0; a < n; ++a) {
    double sum = 0.0;
    for (int c = 0; c < k; ++c) {
      if (pi(a, c) < 0.0) throw std::invalid_argument("generate_sbm: negative membership");
      sum += pi(a, c);
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("generate_sbm: membership row " + std::to_string(a) +
                                  " does not sum to 1");
  }
  for (int c = 0; c < k; ++c)
    if (beta[c] < 0.0 || beta[c] > 1.0)
      throw std::invalid_argument("generate_sbm: beta out of [0,1]");
  if (delta < 0.0 || delta > 1.0)
    throw std::invalid_argument("generate_sbm: delta out of [0,1]");

  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<NodePair> edges;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const int zab = detail::draw_categorical(pi, a, unit(rng));
      const int zba = detail::draw_categorical(pi, b, unit(rng));
      const double p = (zab == zba) ? beta[zab] : delta;
      if (unit(rng) < p) edges.emplace_back(a, b);
    }
  }
  return Graph::from_edges(n, std::move(edges));
}

// Hard-membership row matrix: node a belongs entirely to community
// assignment[a].
inline Eigen::MatrixXd hard_memberships(const std::vector<int>& assignment, int k) {
  Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(static_cast<int>(assignment.size()), k);
  for (std::size_t a = 0; a < assignment.size(); ++a)
    pi(static_cast<int>(a), assignment[a]) = 1.0;
  return pi;
}

}  // namespace bgcn

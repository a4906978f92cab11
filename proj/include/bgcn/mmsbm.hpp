#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "bgcn/graph.hpp"
#include "bgcn/random.hpp"

namespace bgcn {

struct MmsbmHyper {
  double eta = 1.0;    // Gamma shape for theta
  double alpha = 1.0;  // Gamma shape for phi
  double rho = 1e-3;   // Gamma rate for both
  double delta = 1e-4; // cross-community link probability
  int n_minibatch = 500;
  double eps0 = 1.0;
  double tau = 1024.0;
  double kappa = 0.5;
  double nonedge_fraction = 0.01;
  // Magnitudes used when expanding normalized (pi, beta) into (phi, theta).
  double init_phi_scale = 10.0;
  double init_theta_scale = 1.0;
};

// Non-negative expanded-mean parameters. Column 0 of theta holds theta_k0,
// column 1 holds theta_k1. Updates keep entries >= 0 by folding with abs().
struct ExpandedParams {
  Eigen::MatrixXd theta;  // K x 2
  Eigen::MatrixXd phi;    // N x K

  int n_communities() const { return static_cast<int>(theta.rows()); }
  int n_nodes() const { return static_cast<int>(phi.rows()); }
};

// Normalized parameters: pi rows on the simplex, beta in (0,1).
struct BlockParams {
  Eigen::MatrixXd pi;    // N x K, row-stochastic
  Eigen::VectorXd beta;  // K
};

// beta_k = theta_k1 / (theta_k0 + theta_k1); pi_ak = phi_ak / sum_l phi_al.
inline BlockParams to_block_params(const ExpandedParams& p) {
  BlockParams bp;
  bp.beta.resize(p.theta.rows());
  for (Eigen::Index k = 0; k < p.theta.rows(); ++k) {
    const double sum = p.theta(k, 0) + p.theta(k, 1);
    if (sum <= 0.0)
      throw std::runtime_error("to_block_params: theta row " + std::to_string(k) +
                               " sums to zero");
    bp.beta[k] = p.theta(k, 1) / sum;
  }
  bp.pi.resize(p.phi.rows(), p.phi.cols());
  for (Eigen::Index a = 0; a < p.phi.rows(); ++a) {
    const double sum = p.phi.row(a).sum();
    if (sum <= 0.0)
      throw std::runtime_error("to_block_params: phi row " + std::to_string(a) +
                               " sums to zero");
    bp.pi.row(a) = p.phi.row(a) / sum;
  }
  return bp;
}

// Inverse of to_block_params at fixed magnitudes: phi_a = c_phi * pi_a,
// theta_k = c_theta * (1 - beta_k, beta_k).
inline ExpandedParams expand_block_params(const BlockParams& bp, const MmsbmHyper& hyper) {
  ExpandedParams p;
  p.phi = hyper.init_phi_scale * bp.pi;
  p.theta.resize(bp.beta.size(), 2);
  for (Eigen::Index k = 0; k < bp.beta.size(); ++k) {
    p.theta(k, 0) = hyper.init_theta_scale * (1.0 - bp.beta[k]);
    p.theta(k, 1) = hyper.init_theta_scale * bp.beta[k];
  }
  return p;
}

namespace detail {

constexpr double kLikelihoodFloor = 1e-15;

inline double bern(bool y, double p) { return y ? p : 1.0 - p; }

// Pair likelihood with the K^2 community assignments collapsed out:
//   p(y | pi_a, pi_b, beta) = sum_k pi_ak pi_bk f(y; beta_k)
//                             + (1 - sum_k pi_ak pi_bk) f(y; delta).
template <typename RowA, typename RowB>
inline double pair_likelihood(bool y, const RowA& pi_a, const RowB& pi_b,
                              const Eigen::VectorXd& beta, double delta) {
  double same = 0.0, lik = 0.0;
  for (Eigen::Index k = 0; k < beta.size(); ++k) {
    const double w = pi_a[k] * pi_b[k];
    same += w;
    lik += w * bern(y, beta[k]);
  }
  lik += (1.0 - same) * bern(y, delta);
  return lik;
}

}  // namespace detail

template <typename RowA, typename RowB>
inline double edge_loglik(bool y, const RowA& pi_a, const RowB& pi_b,
                          const Eigen::VectorXd& beta, double delta) {
  return std::log(
      std::max(detail::pair_likelihood(y, pi_a, pi_b, beta, delta), detail::kLikelihoodFloor));
}

namespace detail {

// d/dtheta of edge_loglik through beta_k(theta_k0, theta_k1). Contribution of
// one pair; callers sum over pairs.
template <typename RowA, typename RowB>
inline void add_theta_pair_grad(bool y, const RowA& pi_a, const RowB& pi_b,
                                const Eigen::VectorXd& beta, const Eigen::MatrixXd& theta,
                                double delta, Eigen::MatrixXd& acc) {
  const double p = std::max(pair_likelihood(y, pi_a, pi_b, beta, delta), kLikelihoodFloor);
  const double sign = y ? 1.0 : -1.0;
  for (Eigen::Index k = 0; k < beta.size(); ++k) {
    const double w = pi_a[k] * pi_b[k];
    if (w == 0.0) continue;
    const double s = theta(k, 0) + theta(k, 1);
    const double dlik_dbeta = sign * w / p;
    acc(k, 0) += dlik_dbeta * (-theta(k, 1) / (s * s));
    acc(k, 1) += dlik_dbeta * (theta(k, 0) / (s * s));
  }
}

// d/dphi_a of edge_loglik through pi_a(phi_a). phi_row_sum is sum_l phi_al.
template <typename RowA, typename RowB>
inline void add_phi_pair_grad(bool y, const RowA& pi_a, const RowB& pi_b,
                              const Eigen::VectorXd& beta, double phi_row_sum, double delta,
                              Eigen::Ref<Eigen::RowVectorXd> acc) {
  const double p = std::max(pair_likelihood(y, pi_a, pi_b, beta, delta), kLikelihoodFloor);
  const double f_delta = bern(y, delta);
  double cross = 0.0;
  for (Eigen::Index l = 0; l < beta.size(); ++l)
    cross += pi_a[l] * pi_b[l] * (bern(y, beta[l]) - f_delta);
  const double denom = p * phi_row_sum;
  for (Eigen::Index k = 0; k < beta.size(); ++k)
    acc[k] += (pi_b[k] * (bern(y, beta[k]) - f_delta) - cross) / denom;
}

}  // namespace detail

// Per-pair gradient of log p(y_ab | pi_a, pi_b, beta) with respect to theta.
// Convenience form; the update loops use the cached accumulation above.
inline Eigen::MatrixXd grad_theta(bool y, int a, int b, const ExpandedParams& p,
                                  const MmsbmHyper& hyper) {
  const BlockParams bp = to_block_params(p);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(p.theta.rows(), 2);
  detail::add_theta_pair_grad(y, bp.pi.row(a), bp.pi.row(b), bp.beta, p.theta, hyper.delta, g);
  return g;
}

// Per-pair gradient with respect to phi_a (the row of the first node).
inline Eigen::RowVectorXd grad_phi(bool y, int a, int b, const ExpandedParams& p,
                                   const MmsbmHyper& hyper) {
  const BlockParams bp = to_block_params(p);
  Eigen::RowVectorXd g = Eigen::RowVectorXd::Zero(p.phi.cols());
  detail::add_phi_pair_grad(y, bp.pi.row(a), bp.pi.row(b), bp.beta, p.phi.row(a).sum(),
                            hyper.delta, g);
  return g;
}

inline double step_size(std::int64_t t, const MmsbmHyper& hyper) {
  if (t < 0) throw std::invalid_argument("step_size: negative iteration");
  return hyper.eps0 * std::pow(static_cast<double>(t) + hyper.tau, -hyper.kappa);
}

// --- gradient-sum estimators -----------------------------------------------
//
// The theta update needs sum_{a<b} g_ab(theta); the phi update for node a
// needs sum_{b != a} g_ab(phi_a). The full sums are O(N^2); the stochastic
// variants keep the edge/neighbor terms exact and estimate the non-edge part
// from a uniform sample, scaled so the estimator stays unbiased.

inline Eigen::MatrixXd theta_gradient_full(const ExpandedParams& p, const Graph& g,
                                           const MmsbmHyper& hyper) {
  const BlockParams bp = to_block_params(p);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p.theta.rows(), 2);
  for (int a = 0; a < g.n_nodes(); ++a)
    for (int b = a + 1; b < g.n_nodes(); ++b)
      detail::add_theta_pair_grad(g.has_edge(a, b), bp.pi.row(a), bp.pi.row(b), bp.beta,
                                  p.theta, hyper.delta, acc);
  return acc;
}

// Exact edge term plus a non-edge mini-batch: m = round(fraction * M) pairs
// drawn uniformly (with replacement, by rejection against edges/self-pairs),
// scaled by M/m. For fraction = 0.01 and sparse graphs that matches the
// "sample 1%, scale by 100" schedule while staying exactly unbiased when
// fraction * M is not an integer.
inline Eigen::MatrixXd theta_gradient_stochastic(const ExpandedParams& p, const Graph& g,
                                                 const MmsbmHyper& hyper,
                                                 std::mt19937_64& rng) {
  const BlockParams bp = to_block_params(p);
  const int n = g.n_nodes();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p.theta.rows(), 2);
  for (const auto& [a, b] : g.edges())
    detail::add_theta_pair_grad(true, bp.pi.row(a), bp.pi.row(b), bp.beta, p.theta,
                                hyper.delta, acc);

  const std::int64_t n_nonedges = g.n_pairs() - g.n_edges();
  if (n_nonedges <= 0) return acc;
  std::int64_t m = std::llround(hyper.nonedge_fraction * static_cast<double>(n_nonedges));
  m = std::max<std::int64_t>(1, std::min(m, n_nonedges));

  if (m == n_nonedges) {
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        if (!g.has_edge(a, b))
          detail::add_theta_pair_grad(false, bp.pi.row(a), bp.pi.row(b), bp.beta, p.theta,
                                      hyper.delta, acc);
    return acc;
  }

  Eigen::MatrixXd sample_acc = Eigen::MatrixXd::Zero(p.theta.rows(), 2);
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (std::int64_t i = 0; i < m; ++i) {
    int a, b;
    do {
      a = pick(rng);
      b = pick(rng);
    } while (a == b || g.has_edge(a, b));
    detail::add_theta_pair_grad(false, bp.pi.row(a), bp.pi.row(b), bp.beta, p.theta,
                                hyper.delta, sample_acc);
  }
  acc += (static_cast<double>(n_nonedges) / static_cast<double>(m)) * sample_acc;
  return acc;
}

inline Eigen::RowVectorXd phi_gradient_full_row(const ExpandedParams& p, const BlockParams& bp,
                                                const Graph& g, int a,
                                                const MmsbmHyper& hyper) {
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(p.phi.cols());
  const double row_sum = p.phi.row(a).sum();
  for (int b = 0; b < g.n_nodes(); ++b) {
    if (b == a) continue;
    detail::add_phi_pair_grad(g.has_edge(a, b), bp.pi.row(a), bp.pi.row(b), bp.beta, row_sum,
                              hyper.delta, acc);
  }
  return acc;
}

// Neighbor terms exact; non-neighbors estimated from s = n_minibatch - |N(a)|
// distinct uniform samples scaled by (N - 1 - |N(a)|)/s. Falls back to the
// exact sum when the sample budget is non-positive or covers all
// non-neighbors.
inline Eigen::RowVectorXd phi_gradient_stochastic_row(const ExpandedParams& p,
                                                      const BlockParams& bp, const Graph& g,
                                                      int a, const MmsbmHyper& hyper,
                                                      std::mt19937_64& rng) {
  const int n = g.n_nodes();
  const int deg = g.degree(a);
  const std::int64_t n_nonneighbors = n - 1 - deg;
  const std::int64_t budget = static_cast<std::int64_t>(hyper.n_minibatch) - deg;
  if (budget <= 0 || budget >= n_nonneighbors)
    return phi_gradient_full_row(p, bp, g, a, hyper);

  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(p.phi.cols());
  const double row_sum = p.phi.row(a).sum();
  for (int b : g.neighbors(a))
    detail::add_phi_pair_grad(true, bp.pi.row(a), bp.pi.row(b), bp.beta, row_sum, hyper.delta,
                              acc);

  Eigen::RowVectorXd sample_acc = Eigen::RowVectorXd::Zero(p.phi.cols());
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::unordered_set<int> chosen;
  chosen.reserve(static_cast<std::size_t>(budget) * 2);
  while (static_cast<std::int64_t>(chosen.size()) < budget) {
    const int b = pick(rng);
    if (b == a || g.has_edge(a, b) || !chosen.insert(b).second) continue;
    detail::add_phi_pair_grad(false, bp.pi.row(a), bp.pi.row(b), bp.beta, row_sum, hyper.delta,
                              sample_acc);
  }
  acc += (static_cast<double>(n_nonneighbors) / static_cast<double>(budget)) * sample_acc;
  return acc;
}

// --- preconditioned updates -------------------------------------------------
//
// With preconditioner diag(theta)^{-1} the ascent step becomes
//   theta_ki <- | theta_ki + eps_t (eta - 1 - rho theta_ki
//                                   + theta_ki * sum_pairs g_ab(theta_ki)) |
// and analogously for phi with shape alpha. The absolute value folds
// negative proposals back into the non-negative orthant.

inline ExpandedParams update_theta(const ExpandedParams& p, const Graph& g, std::int64_t t,
                                   const MmsbmHyper& hyper, std::uint64_t seed) {
  auto rng = make_rng(seed);
  const Eigen::MatrixXd grad_sum = theta_gradient_stochastic(p, g, hyper, rng);
  const double eps = step_size(t, hyper);
  ExpandedParams out = p;
  out.theta = (p.theta.array() +
               eps * (hyper.eta - 1.0 - hyper.rho * p.theta.array() +
                      p.theta.array() * grad_sum.array()))
                  .abs()
                  .matrix();
  return out;
}

inline ExpandedParams update_phi(const ExpandedParams& p, const Graph& g,
                                 const std::vector<int>& node_batch, std::int64_t t,
                                 const MmsbmHyper& hyper, std::uint64_t seed) {
  auto rng = make_rng(seed);
  const BlockParams bp = to_block_params(p);
  const double eps = step_size(t, hyper);
  // All new rows are computed from the pre-update state, then written.
  std::vector<Eigen::RowVectorXd> new_rows;
  new_rows.reserve(node_batch.size());
  for (int a : node_batch) {
    const Eigen::RowVectorXd grad_sum = phi_gradient_stochastic_row(p, bp, g, a, hyper, rng);
    new_rows.push_back((p.phi.row(a).array() +
                        eps * (hyper.alpha - 1.0 - hyper.rho * p.phi.row(a).array() +
                               p.phi.row(a).array() * grad_sum.array()))
                           .abs()
                           .matrix());
  }
  ExpandedParams out = p;
  for (std::size_t i = 0; i < node_batch.size(); ++i) out.phi.row(node_batch[i]) = new_rows[i];
  return out;
}

// --- joint log-posterior (diagnostic / oracle use) ---------------------------

namespace detail {

inline double gamma_log_pdf(double x, double shape, double rate) {
  const double log_x_term = (shape == 1.0) ? 0.0 : (shape - 1.0) * std::log(x);
  return log_x_term - rate * x + shape * std::log(rate) - std::lgamma(shape);
}

}  // namespace detail

inline double log_joint(const ExpandedParams& p, const Graph& g, const MmsbmHyper& hyper) {
  double lp = 0.0;
  for (Eigen::Index k = 0; k < p.theta.rows(); ++k)
    for (Eigen::Index i = 0; i < 2; ++i)
      lp += detail::gamma_log_pdf(p.theta(k, i), hyper.eta, hyper.rho);
  for (Eigen::Index a = 0; a < p.phi.rows(); ++a)
    for (Eigen::Index k = 0; k < p.phi.cols(); ++k)
      lp += detail::gamma_log_pdf(p.phi(a, k), hyper.alpha, hyper.rho);
  const BlockParams bp = to_block_params(p);
  for (int a = 0; a < g.n_nodes(); ++a)
    for (int b = a + 1; b < g.n_nodes(); ++b)
      lp += edge_loglik(g.has_edge(a, b), bp.pi.row(a), bp.pi.row(b), bp.beta, hyper.delta);
  return lp;
}

// Priors plus the pair term evaluated on a fixed subsample, scaled up to the
// full pair count. Cheap stand-in for log_joint on large graphs.
inline double log_joint_subsample(const ExpandedParams& p, const Graph& g,
                                  const MmsbmHyper& hyper,
                                  const std::vector<NodePair>& pairs) {
  double lp = 0.0;
  for (Eigen::Index k = 0; k < p.theta.rows(); ++k)
    for (Eigen::Index i = 0; i < 2; ++i)
      lp += detail::gamma_log_pdf(p.theta(k, i), hyper.eta, hyper.rho);
  for (Eigen::Index a = 0; a < p.phi.rows(); ++a)
    for (Eigen::Index k = 0; k < p.phi.cols(); ++k)
      lp += detail::gamma_log_pdf(p.phi(a, k), hyper.alpha, hyper.rho);
  if (pairs.empty()) return lp;
  const BlockParams bp = to_block_params(p);
  double pair_sum = 0.0;
  for (const auto& [a, b] : pairs)
    pair_sum += edge_loglik(g.has_edge(a, b), bp.pi.row(a), bp.pi.row(b), bp.beta, hyper.delta);
  return lp + pair_sum * (static_cast<double>(g.n_pairs()) / static_cast<double>(pairs.size()));
}

// --- inference driver --------------------------------------------------------

struct MmsbmState {
  ExpandedParams params;
  std::int64_t t = 0;  // global step counter; continues across warm starts
};

// Fixed pair subsample used for cheap log-joint evaluation (all pairs when
// the graph is small enough).
inline std::vector<NodePair> sample_eval_pairs(const Graph& g, int n_pairs,
                                               std::uint64_t seed) {
  std::vector<NodePair> pairs;
  if (g.n_pairs() <= n_pairs) {
    for (int a = 0; a < g.n_nodes(); ++a)
      for (int b = a + 1; b < g.n_nodes(); ++b) pairs.emplace_back(a, b);
    return pairs;
  }
  auto rng = make_rng(seed);
  std::uniform_int_distribution<int> pick(0, g.n_nodes() - 1);
  while (static_cast<int>(pairs.size()) < n_pairs) {
    int a = pick(rng), b = pick(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    pairs.emplace_back(a, b);
  }
  return pairs;
}

// Optional per-iteration CSV trace: iteration, subsampled log_joint, step size.
class MmsbmTrace {
 public:
  MmsbmTrace(const std::string& path, const Graph& g, int n_pairs, int every,
             std::uint64_t seed)
      : out_(path), every_(every <= 0 ? 1 : every), pairs_(sample_eval_pairs(g, n_pairs, seed)) {
    if (!out_) throw std::runtime_error("cannot write trace " + path);
    out_ << "iteration,log_joint_subsample,step_size\n" << std::flush;
  }

  // Flushed per row so long fits can be tailed while running.
  void record(const MmsbmState& state, const Graph& g, const MmsbmHyper& hyper) {
    if (state.t % every_ != 0) return;
    out_ << state.t << "," << log_joint_subsample(state.params, g, hyper, pairs_) << ","
         << step_size(state.t, hyper) << "\n"
         << std::flush;
  }

 private:
  std::ofstream out_;
  int every_;
  std::vector<NodePair> pairs_;
};

namespace detail {

inline std::vector<int> sample_node_batch(int n, int batch_size, std::mt19937_64& rng) {
  std::vector<int> nodes(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) nodes[static_cast<std::size_t>(i)] = i;
  if (batch_size >= n) return nodes;
  // Partial Fisher-Yates: the first batch_size entries are a uniform draw
  // without replacement.
  for (int i = 0; i < batch_size; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(nodes[static_cast<std::size_t>(i)], nodes[static_cast<std::size_t>(pick(rng))]);
  }
  nodes.resize(static_cast<std::size_t>(batch_size));
  return nodes;
}

}  // namespace detail

// One inference iteration = one theta update followed by one phi mini-batch
// update, both at step index state.t.
inline void map_inference_steps(MmsbmState& state, const Graph& g, int n_iters,
                                const MmsbmHyper& hyper, std::uint64_t seed,
                                MmsbmTrace* trace = nullptr) {
  for (int i = 0; i < n_iters; ++i) {
    const std::uint64_t iter_tag = static_cast<std::uint64_t>(state.t);
    state.params = update_theta(state.params, g, state.t, hyper,
                                derive_seed(seed, {0xA1, iter_tag}));
    auto batch_rng = make_rng(derive_seed(seed, {0xA2, iter_tag}));
    const auto batch = detail::sample_node_batch(g.n_nodes(), hyper.n_minibatch, batch_rng);
    state.params = update_phi(state.params, g, batch, state.t, hyper,
                              derive_seed(seed, {0xA3, iter_tag}));
    if (!state.params.theta.allFinite() || !state.params.phi.allFinite())
      throw std::runtime_error("mmsbm inference produced non-finite parameters at iteration " +
                               std::to_string(state.t));
    ++state.t;
    if (trace) trace->record(state, g, hyper);
  }
}

inline ExpandedParams map_inference(const Graph& g, const BlockParams& init, int n_iters,
                                    const MmsbmHyper& hyper, std::uint64_t seed,
                                    MmsbmTrace* trace = nullptr) {
  MmsbmState state{expand_block_params(init, hyper), 0};
  map_inference_steps(state, g, n_iters, hyper, seed, trace);
  return state.params;
}

// Initialization from a trained classifier's softmax output: phi rows follow
// the class probabilities, beta_k starts at the empirical link rate among
// node pairs whose argmax class is k. Communities with no such pair fall back
// to the overall graph density (delta when the graph has no pairs at all).
// Everything is clamped to [delta, 1 - 10*delta].
inline ExpandedParams init_from_softmax(const Eigen::MatrixXd& z, const Graph& g,
                                        const MmsbmHyper& hyper) {
  const int n = static_cast<int>(z.rows());
  const int k = static_cast<int>(z.cols());
  if (n != g.n_nodes()) throw std::invalid_argument("init_from_softmax: row count mismatch");

  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  for (int a = 0; a < n; ++a) {
    int best = 0;
    for (int c = 1; c < k; ++c)
      if (z(a, c) > z(a, best)) best = c;  // ties keep the lowest index
    assign[static_cast<std::size_t>(a)] = best;
  }

  std::vector<std::int64_t> members(static_cast<std::size_t>(k), 0);
  for (int a = 0; a < n; ++a) ++members[static_cast<std::size_t>(assign[static_cast<std::size_t>(a)])];
  std::vector<std::int64_t> intra_edges(static_cast<std::size_t>(k), 0);
  for (const auto& [a, b] : g.edges())
    if (assign[static_cast<std::size_t>(a)] == assign[static_cast<std::size_t>(b)])
      ++intra_edges[static_cast<std::size_t>(assign[static_cast<std::size_t>(a)])];

  const double density = g.n_pairs() > 0
                             ? static_cast<double>(g.n_edges()) / static_cast<double>(g.n_pairs())
                             : hyper.delta;
  const double lo = hyper.delta, hi = 1.0 - 10.0 * hyper.delta;

  BlockParams bp;
  bp.pi = z;
  bp.beta.resize(k);
  for (int c = 0; c < k; ++c) {
    const std::int64_t pairs = members[static_cast<std::size_t>(c)] *
                               (members[static_cast<std::size_t>(c)] - 1) / 2;
    const double rate = pairs > 0 ? static_cast<double>(intra_edges[static_cast<std::size_t>(c)]) /
                                        static_cast<double>(pairs)
                                  : density;
    bp.beta[c] = std::clamp(rate, lo, hi);
  }
  return expand_block_params(bp, hyper);
}

// --- parameter checkpoints ---------------------------------------------------

inline void save_mmsbm_params(const ExpandedParams& p, const MmsbmHyper& hyper,
                              const std::string& path) {
  auto matrix_json = [](const Eigen::MatrixXd& m) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    return nlohmann::json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
  };
  nlohmann::json j = {{"format", "bgcn-mmsbm"},
                      {"version", 1},
                      {"theta", matrix_json(p.theta)},
                      {"phi", matrix_json(p.phi)},
                      {"hyper",
                       {{"eta", hyper.eta},
                        {"alpha", hyper.alpha},
                        {"rho", hyper.rho},
                        {"delta", hyper.delta},
                        {"n_minibatch", hyper.n_minibatch},
                        {"eps0", hyper.eps0},
                        {"tau", hyper.tau},
                        {"kappa", hyper.kappa},
                        {"nonedge_fraction", hyper.nonedge_fraction},
                        {"init_phi_scale", hyper.init_phi_scale},
                        {"init_theta_scale", hyper.init_theta_scale}}}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

inline std::pair<ExpandedParams, MmsbmHyper> load_mmsbm_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "bgcn-mmsbm" || j.value("version", 0) != 1)
    throw std::runtime_error(path + ": not a version-1 mmsbm checkpoint");
  auto matrix_from = [](const nlohmann::json& mj) {
    const auto rows = mj.at("rows").get<Eigen::Index>();
    const auto cols = mj.at("cols").get<Eigen::Index>();
    const auto data = mj.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
      throw std::runtime_error("mmsbm checkpoint: data length does not match shape");
    Eigen::MatrixXd m(rows, cols);
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[i++];
    return m;
  };
  ExpandedParams p{matrix_from(j.at("theta")), matrix_from(j.at("phi"))};
  MmsbmHyper h;
  const auto& hj = j.at("hyper");
  h.eta = hj.at("eta").get<double>();
  h.alpha = hj.at("alpha").get<double>();
  h.rho = hj.at("rho").get<double>();
  h.delta = hj.at("delta").get<double>();
  h.n_minibatch = hj.at("n_minibatch").get<int>();
  h.eps0 = hj.at("eps0").get<double>();
  h.tau = hj.at("tau").get<double>();
  h.kappa = hj.at("kappa").get<double>();
  h.nonedge_fraction = hj.at("nonedge_fraction").get<double>();
  h.init_phi_scale = hj.at("init_phi_scale").get<double>();
  h.init_theta_scale = hj.at("init_theta_scale").get<double>();
  return {std::move(p), h};
}

}  // namespace bgcn

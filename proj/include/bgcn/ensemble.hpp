#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "bgcn/gcnn.hpp"
#include "bgcn/graph.hpp"
#include "bgcn/graph_sampler.hpp"
#include "bgcn/mmsbm.hpp"
#include "bgcn/random.hpp"

namespace bgcn {

struct EnsembleConfig {
  int n_graphs = 10;           // N_G
  int n_dropout_samples = 5;   // S
  int n_mmsbm_iters = 200;     // iterations of block-model inference per graph
  GcnnConfig gcnn;
  MmsbmHyper mmsbm;
  SampleMethod sample_method = SampleMethod::exact;
  bool warm_start_mmsbm = true;  // false restarts from the softmax init each graph
  bool keep_samples = true;
  std::uint64_t master_seed = 1;
};

struct EnsemblePrediction {
  Eigen::MatrixXd mean;                 // n_nodes x n_classes, rows sum to 1
  std::vector<Eigen::MatrixXd> samples; // empty when keep_samples is off
  std::vector<int> predicted;           // argmax of mean, ties -> lowest index
};

namespace detail {

inline std::vector<int> argmax_rows(const Eigen::MatrixXd& m) {
  std::vector<int> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    int best = 0;
    for (Eigen::Index c = 1; c < m.cols(); ++c)
      if (m(r, c) > m(r, best)) best = static_cast<int>(c);
    out[static_cast<std::size_t>(r)] = best;
  }
  return out;
}

}  // namespace detail

// Entrywise arithmetic mean of the sample stack, fixed-order reduction.
inline EnsemblePrediction aggregate(const std::vector<Eigen::MatrixXd>& samples) {
  if (samples.empty()) throw std::invalid_argument("aggregate: no samples");
  Eigen::MatrixXd mean = samples.front();
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].rows() != mean.rows() || samples[i].cols() != mean.cols())
      throw std::invalid_argument("aggregate: sample shapes differ");
    mean += samples[i];
  }
  mean /= static_cast<double>(samples.size());
  EnsemblePrediction pred;
  pred.predicted = detail::argmax_rows(mean);
  pred.mean = std::move(mean);
  pred.samples = samples;
  return pred;
}

// Per-node entropy of the argmax votes across the sample stack: zero exactly
// when every sample picks the same class for the node.
inline Eigen::VectorXd vote_entropy(const std::vector<Eigen::MatrixXd>& samples) {
  if (samples.empty()) throw std::invalid_argument("vote_entropy: no samples");
  const auto n = samples.front().rows();
  const auto k = samples.front().cols();
  Eigen::VectorXd entropy = Eigen::VectorXd::Zero(n);
  std::vector<std::vector<int>> votes;
  votes.reserve(samples.size());
  for (const auto& s : samples) votes.push_back(detail::argmax_rows(s));
  for (Eigen::Index a = 0; a < n; ++a) {
    std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
    for (const auto& v : votes) counts[static_cast<std::size_t>(v[static_cast<std::size_t>(a)])] += 1.0;
    double h = 0.0;
    for (double c : counts) {
      if (c == 0.0) continue;
      const double p = c / static_cast<double>(samples.size());
      h -= p * std::log(p);
    }
    entropy[a] = h;
  }
  return entropy;
}

// Seed stream tags for the ensemble; documented so runs can be reproduced
// piecewise.
namespace seed_stream {
constexpr std::uint64_t kBaseTrain = 1;
constexpr std::uint64_t kMmsbm = 2;
constexpr std::uint64_t kGraphSample = 3;
constexpr std::uint64_t kGcnnTrain = 4;
constexpr std::uint64_t kDropout = 5;
}  // namespace seed_stream

struct EnsembleRun {
  EnsemblePrediction prediction;
  GcnnWeights base_weights;               // trained on the observed graph
  std::vector<BlockParams> block_history; // fitted (pi, beta) per ensemble graph
  ExpandedParams final_params;
};

// The full pipeline: train a base classifier on the observed graph, use its
// softmax output to initialize block-model inference, then for each of
// N_G rounds run N_b inference iterations, sample a graph, train a
// classifier on it (warm-started from the base weights) and draw S dropout
// samples. The prediction averages all N_G * S softmax samples.
inline EnsembleRun run_ensemble(const Graph& g, const FeatureMatrix& x, const LabelSet& labels,
                                const EnsembleConfig& cfg) {
  if (cfg.n_graphs < 1 || cfg.n_dropout_samples < 1)
    throw std::invalid_argument("run_ensemble: n_graphs and n_dropout_samples must be >= 1");
  const std::uint64_t master = cfg.master_seed;

  EnsembleRun run;
  {
    GcnnConfig base_cfg = cfg.gcnn;
    base_cfg.seed = derive_seed(master, {seed_stream::kBaseTrain});
    const PropagationMatrix a_obs = normalize_adjacency(g);
    run.base_weights = train(a_obs, x, labels, base_cfg);
    const Eigen::MatrixXd z_obs = forward(run.base_weights, a_obs, x, base_cfg.activation).z;
    run.final_params = init_from_softmax(z_obs, g, cfg.mmsbm);
  }

  MmsbmState state{run.final_params, 0};
  const ExpandedParams init_params = state.params;

  std::vector<Eigen::MatrixXd> samples;
  samples.reserve(static_cast<std::size_t>(cfg.n_graphs * cfg.n_dropout_samples));
  for (int i = 0; i < cfg.n_graphs; ++i) {
    try {
      if (!cfg.warm_start_mmsbm) state = MmsbmState{init_params, 0};
      map_inference_steps(state, g, cfg.n_mmsbm_iters, cfg.mmsbm,
                          derive_seed(master, {seed_stream::kMmsbm, static_cast<std::uint64_t>(i)}));
      const BlockParams bp = to_block_params(state.params);
      run.block_history.push_back(bp);

      const SampledGraph sampled = sample_graph(
          bp, cfg.mmsbm.delta,
          derive_seed(master, {seed_stream::kGraphSample, static_cast<std::uint64_t>(i)}),
          cfg.sample_method);
      const PropagationMatrix a_i = normalize_adjacency(sampled.graph);

      GcnnConfig gcnn_cfg = cfg.gcnn;
      gcnn_cfg.seed = derive_seed(master, {seed_stream::kGcnnTrain, static_cast<std::uint64_t>(i)});
      const GcnnWeights w_i = train(a_i, x, labels, gcnn_cfg, &run.base_weights);

      auto draws = mc_dropout_predict(
          w_i, a_i, x, gcnn_cfg, cfg.n_dropout_samples,
          derive_seed(master, {seed_stream::kDropout, static_cast<std::uint64_t>(i)}));
      for (auto& z : draws) samples.push_back(std::move(z));
    } catch (const std::exception& e) {
      throw std::runtime_error("ensemble graph " + std::to_string(i) + ": " + e.what());
    }
  }
  run.final_params = state.params;
  run.prediction = aggregate(samples);
  if (!cfg.keep_samples) run.prediction.samples.clear();
  return run;
}

// --- posterior edge report ----------------------------------------------------

struct EdgeReportRow {
  int a = 0;
  int b = 0;
  double avg_probability = 0.0;
  bool both_labeled = false;
  bool labels_agree = false;
  int degree_a = 0;
  int degree_b = 0;
};

struct PosteriorEdgeReport {
  // Observed edges, ascending average posterior link probability.
  std::vector<EdgeReportRow> least_probable_edges;
  // Non-edges, descending average posterior link probability.
  std::vector<EdgeReportRow> most_probable_nonedges;
};

// Ranks observed edges by how poorly the fitted block models support them and
// non-edges by how strongly the models expect them. Probabilities are
// averaged over the parameter history. Rankings are deterministic: ties break
// on the (a, b) pair order.
inline PosteriorEdgeReport posterior_edge_report(const std::vector<ExpandedParams>& history,
                                                 const Graph& g, double delta,
                                                 const LabelSet* labels, int top_m) {
  if (history.empty()) throw std::invalid_argument("posterior_edge_report: empty history");
  if (top_m <= 0) throw std::invalid_argument("posterior_edge_report: top_m must be positive");
  std::vector<BlockParams> bps;
  bps.reserve(history.size());
  for (const auto& p : history) bps.push_back(to_block_params(p));
  const double inv = 1.0 / static_cast<double>(bps.size());

  auto avg_prob = [&](int a, int b) {
    double p = 0.0;
    for (const auto& bp : bps) p += edge_probability(bp.pi.row(a), bp.pi.row(b), bp.beta, delta);
    return p * inv;
  };
  auto make_row = [&](int a, int b, double p) {
    EdgeReportRow row;
    row.a = a;
    row.b = b;
    row.avg_probability = p;
    row.degree_a = g.degree(a);
    row.degree_b = g.degree(b);
    if (labels && labels->has_label(a) && labels->has_label(b)) {
      row.both_labeled = true;
      row.labels_agree = labels->label(a) == labels->label(b);
    }
    return row;
  };

  PosteriorEdgeReport report;
  {
    std::vector<std::pair<double, NodePair>> scored;
    scored.reserve(static_cast<std::size_t>(g.n_edges()));
    for (const auto& [a, b] : g.edges()) scored.emplace_back(avg_prob(a, b), NodePair{a, b});
    std::sort(scored.begin(), scored.end());
    const auto take = std::min<std::size_t>(scored.size(), static_cast<std::size_t>(top_m));
    for (std::size_t i = 0; i < take; ++i)
      report.least_probable_edges.push_back(
          make_row(scored[i].second.first, scored[i].second.second, scored[i].first));
  }
  {
    // Min-heap keeps the top_m most probable non-edges without materializing
    // all O(N^2) pairs.
    using Entry = std::pair<double, NodePair>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
    for (int a = 0; a < g.n_nodes(); ++a) {
      for (int b = a + 1; b < g.n_nodes(); ++b) {
        if (g.has_edge(a, b)) continue;
        const double p = avg_prob(a, b);
        if (static_cast<int>(heap.size()) < top_m) {
          heap.emplace(p, NodePair{a, b});
        } else if (p > heap.top().first) {
          heap.pop();
          heap.emplace(p, NodePair{a, b});
        }
      }
    }
    std::vector<Entry> entries;
    entries.reserve(heap.size());
    while (!heap.empty()) {
      entries.push_back(heap.top());
      heap.pop();
    }
    std::sort(entries.begin(), entries.end(),
              [](const Entry& x, const Entry& y) { return x.first > y.first || (x.first == y.first && x.second < y.second); });
    for (const auto& [p, pair] : entries)
      report.most_probable_nonedges.push_back(make_row(pair.first, pair.second, p));
  }
  return report;
}

}  // namespace bgcn

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bgcn/ensemble.hpp"
#include "bgcn/gcnn.hpp"
#include "bgcn/graph.hpp"
#include "bgcn/parallel.hpp"
#include "bgcn/random.hpp"

namespace bgcn {

// score(true class) minus the best wrong-class score. Positive iff the node
// is classified correctly; ties at 0 count as incorrect.
template <typename Row>
inline double classification_margin(const Row& scores, int true_class) {
  double best_other = -std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < scores.size(); ++c)
    if (static_cast<int>(c) != true_class) best_other = std::max(best_other, scores[c]);
  return scores[true_class] - best_other;
}

struct MarginRecord {
  int node = 0;
  int true_class = 0;
  Eigen::RowVectorXd scores;
  double margin = 0.0;
};

inline std::vector<MarginRecord> margin_records(const Eigen::MatrixXd& scores,
                                                const LabelSet& labels,
                                                const std::vector<int>& nodes) {
  std::vector<MarginRecord> out;
  out.reserve(nodes.size());
  for (int a : nodes) {
    MarginRecord r;
    r.node = a;
    r.true_class = labels.label(a);
    r.scores = scores.row(a);
    r.margin = classification_margin(r.scores, r.true_class);
    out.push_back(std::move(r));
  }
  return out;
}

// Degree-dependent perturbation of one target node: remove floor(budget/2)
// of its edges and add ceil(budget/2) edges to differently-labeled nodes,
// with budget = degree + 2. When the target has fewer neighbors than the
// removal half, every neighbor is removed and the remainder of the budget
// shifts to additions.
struct AttackPlan {
  int target = 0;
  std::vector<int> removals;   // current neighbors of the target
  std::vector<int> additions;  // non-neighbors with a different label
  int budget = 0;
};

inline AttackPlan make_attack_plan(const Graph& g, const LabelSet& labels, int target,
                                   std::uint64_t seed, bool zero_budget = false) {
  AttackPlan plan;
  plan.target = target;
  if (zero_budget) return plan;
  if (!labels.has_label(target))
    throw std::invalid_argument("make_attack_plan: target node has no label");
  const int degree = g.degree(target);
  plan.budget = degree + 2;
  int n_remove = plan.budget / 2;
  int n_add = plan.budget - n_remove;
  if (n_remove > degree) {
    n_add += n_remove - degree;
    n_remove = degree;
  }

  auto rng = make_rng(seed);
  std::vector<int> neighbors = g.neighbors(target);
  std::shuffle(neighbors.begin(), neighbors.end(), rng);
  plan.removals.assign(neighbors.begin(), neighbors.begin() + n_remove);

  std::vector<int> candidates;
  for (int b = 0; b < g.n_nodes(); ++b) {
    if (b == target || g.has_edge(target, b)) continue;
    if (!labels.has_label(b) || labels.label(b) == labels.label(target)) continue;
    candidates.push_back(b);
  }
  if (static_cast<int>(candidates.size()) < n_add)
    throw std::runtime_error("make_attack_plan: only " + std::to_string(candidates.size()) +
                             " differently-labeled non-neighbors available, need " +
                             std::to_string(n_add));
  std::shuffle(candidates.begin(), candidates.end(), rng);
  plan.additions.assign(candidates.begin(), candidates.begin() + n_add);
  return plan;
}

// Applies a plan: removals deleted, additions inserted, everything else
// untouched.
inline Graph perturb(const Graph& g, const AttackPlan& plan) {
  for (int b : plan.removals)
    if (!g.has_edge(plan.target, b))
      throw std::invalid_argument("perturb: removal (" + std::to_string(plan.target) + "," +
                                  std::to_string(b) + ") is not an edge");
  for (int b : plan.additions)
    if (b == plan.target || g.has_edge(plan.target, b))
      throw std::invalid_argument("perturb: addition (" + std::to_string(plan.target) + "," +
                                  std::to_string(b) + ") is invalid");
  std::vector<NodePair> edges;
  edges.reserve(g.edges().size() + plan.additions.size());
  auto removed = [&](int a, int b) {
    if (a != plan.target && b != plan.target) return false;
    const int other = (a == plan.target) ? b : a;
    return std::find(plan.removals.begin(), plan.removals.end(), other) != plan.removals.end();
  };
  for (const auto& [a, b] : g.edges())
    if (!removed(a, b)) edges.emplace_back(a, b);
  for (int b : plan.additions) edges.emplace_back(std::min(plan.target, b), std::max(plan.target, b));
  return Graph::from_edges(g.n_nodes(), std::move(edges));
}

// Per-algorithm target choice: the n_top highest-margin and n_bottom
// lowest-positive-margin nodes of each algorithm, plus n_random nodes drawn
// from the set classified correctly by both algorithms (excluding every
// per-algorithm pick), shared between the two target lists.
struct TargetSelection {
  std::vector<int> targets_a;
  std::vector<int> targets_b;
  std::vector<int> shared;
};

inline TargetSelection select_targets(const std::vector<MarginRecord>& margins_a,
                                      const std::vector<MarginRecord>& margins_b,
                                      std::uint64_t seed, int n_top = 10, int n_bottom = 10,
                                      int n_random = 20) {
  auto pick_extremes = [&](const std::vector<MarginRecord>& margins, std::vector<int>& out) {
    std::vector<MarginRecord> correct;
    for (const auto& r : margins)
      if (r.margin > 0.0) correct.push_back(r);
    if (static_cast<int>(correct.size()) < n_top + n_bottom)
      throw std::runtime_error("select_targets: only " + std::to_string(correct.size()) +
                               " correctly classified nodes, need " +
                               std::to_string(n_top + n_bottom) + " for the extremes");
    std::stable_sort(correct.begin(), correct.end(),
                     [](const MarginRecord& x, const MarginRecord& y) { return x.margin > y.margin; });
    for (int i = 0; i < n_top; ++i) out.push_back(correct[static_cast<std::size_t>(i)].node);
    for (int i = 0; i < n_bottom; ++i)
      out.push_back(correct[correct.size() - 1 - static_cast<std::size_t>(i)].node);
  };

  TargetSelection sel;
  pick_extremes(margins_a, sel.targets_a);
  pick_extremes(margins_b, sel.targets_b);

  std::vector<int> correct_a, correct_b;
  for (const auto& r : margins_a)
    if (r.margin > 0.0) correct_a.push_back(r.node);
  for (const auto& r : margins_b)
    if (r.margin > 0.0) correct_b.push_back(r.node);
  std::sort(correct_a.begin(), correct_a.end());
  std::sort(correct_b.begin(), correct_b.end());
  std::vector<int> common;
  std::set_intersection(correct_a.begin(), correct_a.end(), correct_b.begin(), correct_b.end(),
                        std::back_inserter(common));
  std::vector<int> taken = sel.targets_a;
  taken.insert(taken.end(), sel.targets_b.begin(), sel.targets_b.end());
  std::sort(taken.begin(), taken.end());
  std::vector<int> eligible;
  for (int v : common)
    if (!std::binary_search(taken.begin(), taken.end(), v)) eligible.push_back(v);
  if (static_cast<int>(eligible.size()) < n_random)
    throw std::runtime_error("select_targets: only " + std::to_string(eligible.size()) +
                             " shared correctly classified nodes left, need " +
                             std::to_string(n_random));
  auto rng = make_rng(seed);
  std::shuffle(eligible.begin(), eligible.end(), rng);
  sel.shared.assign(eligible.begin(), eligible.begin() + n_random);
  sel.targets_a.insert(sel.targets_a.end(), sel.shared.begin(), sel.shared.end());
  sel.targets_b.insert(sel.targets_b.end(), sel.shared.begin(), sel.shared.end());
  return sel;
}

// --- experiment driver ---------------------------------------------------------

enum class AttackAlgorithm { gcnn, bayesian };

inline const char* to_string(AttackAlgorithm a) {
  return a == AttackAlgorithm::gcnn ? "gcnn" : "bayesian";
}

struct AttackConfig {
  int n_margin_trials = 10;  // trials averaged for target selection
  int n_eval_trials = 5;     // fresh trials for the reported numbers
  int n_top = 10;
  int n_bottom = 10;
  int n_random = 20;
  GcnnConfig gcnn;
  EnsembleConfig ensemble;
  bool zero_budget = false;  // control: empty perturbations
  int n_workers = 0;
  std::uint64_t master_seed = 1;
};

struct AttackCell {
  int target = 0;
  int trial = 0;
  double pre_margin = 0.0;   // clean graph, same trial seed
  double post_margin = 0.0;  // perturbed graph
  bool pre_correct = false;
  bool post_correct = false;
};

struct AlgorithmAttackResult {
  AttackAlgorithm algorithm = AttackAlgorithm::gcnn;
  std::vector<int> targets;
  std::vector<AttackCell> cells;  // n_targets * n_eval_trials
  double clean_accuracy = 0.0;
  double attacked_accuracy = 0.0;
  double clean_margin = 0.0;
  double attacked_margin = 0.0;
};

struct AttackReport {
  AlgorithmAttackResult gcnn;
  AlgorithmAttackResult bayesian;
  std::vector<int> shared_targets;
};

namespace detail {

// Seed stream tags local to the attack experiment.
constexpr std::uint64_t kSelectionTrial = 11;
constexpr std::uint64_t kEvalTrial = 12;
constexpr std::uint64_t kPlan = 13;
constexpr std::uint64_t kTargetShuffle = 14;

inline Eigen::MatrixXd attack_scores(AttackAlgorithm algo, const Graph& g,
                                     const FeatureMatrix& x, const LabelSet& labels,
                                     const AttackConfig& cfg, std::uint64_t seed) {
  if (algo == AttackAlgorithm::gcnn) {
    GcnnConfig gc = cfg.gcnn;
    gc.seed = seed;
    const PropagationMatrix a = normalize_adjacency(g);
    const GcnnWeights w = train(a, x, labels, gc);
    return forward(w, a, x, gc.activation).z;
  }
  EnsembleConfig ec = cfg.ensemble;
  ec.master_seed = seed;
  ec.keep_samples = false;
  return run_ensemble(g, x, labels, ec).prediction.mean;
}

inline double mean_of(const std::vector<AttackCell>& cells, double AttackCell::* field) {
  double sum = 0.0;
  for (const auto& c : cells) sum += c.*field;
  return cells.empty() ? 0.0 : sum / static_cast<double>(cells.size());
}

inline double accuracy_of(const std::vector<AttackCell>& cells, bool AttackCell::* field) {
  double sum = 0.0;
  for (const auto& c : cells) sum += (c.*field) ? 1.0 : 0.0;
  return cells.empty() ? 0.0 : sum / static_cast<double>(cells.size());
}

}  // namespace detail

// Poisoning-style robustness experiment. Targets are picked per algorithm
// from margins averaged over n_margin_trials fresh trainings; each
// (target, trial) cell then retrains from scratch on a freshly perturbed
// graph. Clean-graph trials share one training per (algorithm, trial) since
// the perturbation is the only target-specific input; with zero_budget the
// attacked cells therefore reproduce the clean cells bit for bit.
inline AttackReport run_attack_experiment(const Graph& g, const FeatureMatrix& x,
                                          const LabelSet& labels, const AttackConfig& cfg) {
  if (labels.test_mask.empty())
    throw std::invalid_argument("run_attack_experiment: empty test mask");
  const std::uint64_t master = cfg.master_seed;
  const std::vector<int>& test_nodes = labels.test_mask;

  // Margins for target selection, averaged per algorithm. Trials run on the
  // worker pool; the reduction over trials is fixed-order.
  auto avg_margins = [&](AttackAlgorithm algo) {
    std::vector<Eigen::MatrixXd> trial_scores(static_cast<std::size_t>(cfg.n_margin_trials));
    parallel_for(cfg.n_margin_trials, cfg.n_workers, [&](int trial) {
      trial_scores[static_cast<std::size_t>(trial)] = detail::attack_scores(
          algo, g, x, labels, cfg,
          derive_seed(master, {static_cast<std::uint64_t>(algo), detail::kSelectionTrial,
                               static_cast<std::uint64_t>(trial)}));
    });
    std::vector<double> sum(test_nodes.size(), 0.0);
    for (const auto& z : trial_scores)
      for (std::size_t i = 0; i < test_nodes.size(); ++i)
        sum[i] += classification_margin(Eigen::RowVectorXd(z.row(test_nodes[i])),
                                        labels.label(test_nodes[i]));
    std::vector<MarginRecord> records;
    records.reserve(test_nodes.size());
    for (std::size_t i = 0; i < test_nodes.size(); ++i) {
      MarginRecord r;
      r.node = test_nodes[i];
      r.true_class = labels.label(test_nodes[i]);
      r.margin = sum[i] / static_cast<double>(cfg.n_margin_trials);
      records.push_back(std::move(r));
    }
    return records;
  };
  const auto margins_gcnn = avg_margins(AttackAlgorithm::gcnn);
  const auto margins_bayes = avg_margins(AttackAlgorithm::bayesian);
  const TargetSelection sel =
      select_targets(margins_gcnn, margins_bayes, derive_seed(master, {detail::kTargetShuffle}),
                     cfg.n_top, cfg.n_bottom, cfg.n_random);

  AttackReport report;
  report.shared_targets = sel.shared;

  auto run_algorithm = [&](AttackAlgorithm algo, const std::vector<int>& targets) {
    AlgorithmAttackResult result;
    result.algorithm = algo;
    result.targets = targets;

    // Clean-graph margins: one training per trial, shared across targets.
    std::vector<Eigen::MatrixXd> clean_scores(static_cast<std::size_t>(cfg.n_eval_trials));
    parallel_for(cfg.n_eval_trials, cfg.n_workers, [&](int trial) {
      clean_scores[static_cast<std::size_t>(trial)] = detail::attack_scores(
          algo, g, x, labels, cfg,
          derive_seed(master, {static_cast<std::uint64_t>(algo), detail::kEvalTrial,
                               static_cast<std::uint64_t>(trial)}));
    });

    const int n_cells = static_cast<int>(targets.size()) * cfg.n_eval_trials;
    result.cells.resize(static_cast<std::size_t>(n_cells));
    parallel_for(n_cells, cfg.n_workers, [&](int idx) {
      const int ti = idx / cfg.n_eval_trials;
      const int trial = idx % cfg.n_eval_trials;
      const int target = targets[static_cast<std::size_t>(ti)];
      const AttackPlan plan = make_attack_plan(
          g, labels, target,
          derive_seed(master, {static_cast<std::uint64_t>(algo), detail::kPlan,
                               static_cast<std::uint64_t>(target), static_cast<std::uint64_t>(trial)}),
          cfg.zero_budget);
      const Graph attacked = perturb(g, plan);
      const auto z = detail::attack_scores(
          algo, attacked, x, labels, cfg,
          derive_seed(master, {static_cast<std::uint64_t>(algo), detail::kEvalTrial,
                               static_cast<std::uint64_t>(trial)}));
      AttackCell cell;
      cell.target = target;
      cell.trial = trial;
      cell.pre_margin = classification_margin(
          Eigen::RowVectorXd(clean_scores[static_cast<std::size_t>(trial)].row(target)),
          labels.label(target));
      cell.post_margin =
          classification_margin(Eigen::RowVectorXd(z.row(target)), labels.label(target));
      cell.pre_correct = cell.pre_margin > 0.0;
      cell.post_correct = cell.post_margin > 0.0;
      result.cells[static_cast<std::size_t>(idx)] = cell;
    });

    result.clean_accuracy = detail::accuracy_of(result.cells, &AttackCell::pre_correct);
    result.attacked_accuracy = detail::accuracy_of(result.cells, &AttackCell::post_correct);
    result.clean_margin = detail::mean_of(result.cells, &AttackCell::pre_margin);
    result.attacked_margin = detail::mean_of(result.cells, &AttackCell::post_margin);
    return result;
  };

  report.gcnn = run_algorithm(AttackAlgorithm::gcnn, sel.targets_a);
  report.bayesian = run_algorithm(AttackAlgorithm::bayesian, sel.targets_b);
  return report;
}

inline void write_attack_csv(const AttackReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "algorithm,target,trial,pre_margin,post_margin,pre_correct,post_correct\n";
  out.precision(17);
  for (const auto* result : {&report.gcnn, &report.bayesian})
    for (const auto& c : result->cells)
      out << to_string(result->algorithm) << "," << c.target << "," << c.trial << ","
          << c.pre_margin << "," << c.post_margin << "," << (c.pre_correct ? 1 : 0) << ","
          << (c.post_correct ? 1 : 0) << "\n";
}

inline nlohmann::json attack_summary_json(const AttackReport& report) {
  auto algo_json = [](const AlgorithmAttackResult& r) {
    return nlohmann::json{{"targets", r.targets},
                          {"no_attack", {{"accuracy", r.clean_accuracy}, {"mean_margin", r.clean_margin}}},
                          {"random_attack",
                           {{"accuracy", r.attacked_accuracy}, {"mean_margin", r.attacked_margin}}}};
  };
  return nlohmann::json{{"gcnn", algo_json(report.gcnn)},
                        {"bayesian", algo_json(report.bayesian)},
                        {"shared_targets", report.shared_targets}};
}

}  // namespace bgcn

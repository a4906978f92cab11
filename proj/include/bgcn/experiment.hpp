#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bgcn/attack.hpp"
#include "bgcn/dataset.hpp"
#include "bgcn/ensemble.hpp"
#include "bgcn/gcnn.hpp"
#include "bgcn/mmsbm.hpp"
#include "bgcn/parallel.hpp"
#include "bgcn/random.hpp"
#include "bgcn/split.hpp"

namespace bgcn {

inline constexpr const char* kToolVersion = "0.1.0";

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- configuration -----------------------------------------------------------

struct SplitSpec {
  int per_class = 20;
  SplitMode mode = SplitMode::fixed;
};

struct EnsembleSettings {
  int n_graphs = 10;
  int n_dropout_samples = 5;
  int n_mmsbm_iters = 200;
  SampleMethod sample_method = SampleMethod::exact;
  bool warm_start_mmsbm = true;
};

struct AttackSettings {
  int n_margin_trials = 10;
  int n_eval_trials = 5;
  int n_top = 10;
  int n_bottom = 10;
  int n_random = 20;
  bool zero_budget = false;
};

struct ExperimentConfig {
  std::string dataset;
  std::string task = "train_gcnn";  // train_gcnn | train_bayesian | mmsbm_fit | attack
  SplitSpec split;
  GcnnConfig gcnn;
  MmsbmHyper mmsbm;
  EnsembleSettings ensemble;
  AttackSettings attack;
  int mmsbm_fit_iters = 2000;
  int repetitions = 10;
  int n_workers = 0;
  std::uint64_t master_seed = 1;
  bool row_normalize_features = true;
  std::string output_dir = "runs";

  EnsembleConfig ensemble_config() const {
    EnsembleConfig ec;
    ec.n_graphs = ensemble.n_graphs;
    ec.n_dropout_samples = ensemble.n_dropout_samples;
    ec.n_mmsbm_iters = ensemble.n_mmsbm_iters;
    ec.sample_method = ensemble.sample_method;
    ec.warm_start_mmsbm = ensemble.warm_start_mmsbm;
    ec.gcnn = gcnn;
    ec.mmsbm = mmsbm;
    return ec;
  }

  AttackConfig attack_config() const {
    AttackConfig ac;
    ac.n_margin_trials = attack.n_margin_trials;
    ac.n_eval_trials = attack.n_eval_trials;
    ac.n_top = attack.n_top;
    ac.n_bottom = attack.n_bottom;
    ac.n_random = attack.n_random;
    ac.zero_budget = attack.zero_budget;
    ac.gcnn = gcnn;
    ac.ensemble = ensemble_config();
    ac.n_workers = n_workers;
    ac.master_seed = master_seed;
    return ac;
  }
};

namespace detail {

inline std::string activation_name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::linear: return "linear";
  }
  return "relu";
}

inline Activation activation_from(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "linear") return Activation::linear;
  throw ValidationError("unknown activation '" + s + "'");
}

inline std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

// Write-then-rename so concurrent readers never see a partial file.
inline void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentConfig& c) {
  return nlohmann::json{
      {"dataset", c.dataset},
      {"task", c.task},
      {"split",
       {{"per_class", c.split.per_class},
        {"mode", c.split.mode == SplitMode::fixed ? "fixed" : "random"}}},
      {"gcnn",
       {{"hidden_units", c.gcnn.hidden_units},
        {"learning_rate", c.gcnn.learning_rate},
        {"l2_coeff", c.gcnn.l2_coeff},
        {"dropout_rate", c.gcnn.dropout_rate},
        {"epochs", c.gcnn.epochs},
        {"activation", detail::activation_name(c.gcnn.activation)},
        {"optimizer", c.gcnn.optimizer == Optimizer::adam ? "adam" : "sgd"}}},
      {"mmsbm",
       {{"eta", c.mmsbm.eta},
        {"alpha", c.mmsbm.alpha},
        {"rho", c.mmsbm.rho},
        {"delta", c.mmsbm.delta},
        {"n_minibatch", c.mmsbm.n_minibatch},
        {"eps0", c.mmsbm.eps0},
        {"tau", c.mmsbm.tau},
        {"kappa", c.mmsbm.kappa},
        {"nonedge_fraction", c.mmsbm.nonedge_fraction},
        {"init_phi_scale", c.mmsbm.init_phi_scale},
        {"init_theta_scale", c.mmsbm.init_theta_scale}}},
      {"ensemble",
       {{"n_graphs", c.ensemble.n_graphs},
        {"n_dropout_samples", c.ensemble.n_dropout_samples},
        {"n_mmsbm_iters", c.ensemble.n_mmsbm_iters},
        {"sample_method", c.ensemble.sample_method == SampleMethod::exact ? "exact" : "fast"},
        {"warm_start_mmsbm", c.ensemble.warm_start_mmsbm}}},
      {"attack",
       {{"n_margin_trials", c.attack.n_margin_trials},
        {"n_eval_trials", c.attack.n_eval_trials},
        {"n_top", c.attack.n_top},
        {"n_bottom", c.attack.n_bottom},
        {"n_random", c.attack.n_random},
        {"zero_budget", c.attack.zero_budget}}},
      {"mmsbm_fit_iters", c.mmsbm_fit_iters},
      {"repetitions", c.repetitions},
      {"n_workers", c.n_workers},
      {"master_seed", c.master_seed},
      {"row_normalize_features", c.row_normalize_features},
      {"output_dir", c.output_dir}};
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.dataset = j.value("dataset", c.dataset);
  c.task = j.value("task", c.task);
  if (j.contains("split")) {
    const auto& s = j.at("split");
    c.split.per_class = s.value("per_class", c.split.per_class);
    const std::string mode = s.value("mode", "fixed");
    if (mode == "fixed")
      c.split.mode = SplitMode::fixed;
    else if (mode == "random")
      c.split.mode = SplitMode::random;
    else
      throw ValidationError("unknown split mode '" + mode + "'");
  }
  if (j.contains("gcnn")) {
    const auto& g = j.at("gcnn");
    c.gcnn.hidden_units = g.value("hidden_units", c.gcnn.hidden_units);
    c.gcnn.learning_rate = g.value("learning_rate", c.gcnn.learning_rate);
    c.gcnn.l2_coeff = g.value("l2_coeff", c.gcnn.l2_coeff);
    c.gcnn.dropout_rate = g.value("dropout_rate", c.gcnn.dropout_rate);
    c.gcnn.epochs = g.value("epochs", c.gcnn.epochs);
    c.gcnn.activation = detail::activation_from(g.value("activation", "relu"));
    const std::string opt = g.value("optimizer", "adam");
    if (opt == "adam")
      c.gcnn.optimizer = Optimizer::adam;
    else if (opt == "sgd")
      c.gcnn.optimizer = Optimizer::sgd;
    else
      throw ValidationError("unknown optimizer '" + opt + "'");
  }
  if (j.contains("mmsbm")) {
    const auto& m = j.at("mmsbm");
    c.mmsbm.eta = m.value("eta", c.mmsbm.eta);
    c.mmsbm.alpha = m.value("alpha", c.mmsbm.alpha);
    c.mmsbm.rho = m.value("rho", c.mmsbm.rho);
    c.mmsbm.delta = m.value("delta", c.mmsbm.delta);
    c.mmsbm.n_minibatch = m.value("n_minibatch", c.mmsbm.n_minibatch);
    c.mmsbm.eps0 = m.value("eps0", c.mmsbm.eps0);
    c.mmsbm.tau = m.value("tau", c.mmsbm.tau);
    c.mmsbm.kappa = m.value("kappa", c.mmsbm.kappa);
    c.mmsbm.nonedge_fraction = m.value("nonedge_fraction", c.mmsbm.nonedge_fraction);
    c.mmsbm.init_phi_scale = m.value("init_phi_scale", c.mmsbm.init_phi_scale);
    c.mmsbm.init_theta_scale = m.value("init_theta_scale", c.mmsbm.init_theta_scale);
  }
  if (j.contains("ensemble")) {
    const auto& e = j.at("ensemble");
    c.ensemble.n_graphs = e.value("n_graphs", c.ensemble.n_graphs);
    c.ensemble.n_dropout_samples = e.value("n_dropout_samples", c.ensemble.n_dropout_samples);
    c.ensemble.n_mmsbm_iters = e.value("n_mmsbm_iters", c.ensemble.n_mmsbm_iters);
    const std::string sm = e.value("sample_method", "exact");
    if (sm == "exact")
      c.ensemble.sample_method = SampleMethod::exact;
    else if (sm == "fast")
      c.ensemble.sample_method = SampleMethod::fast;
    else
      throw ValidationError("unknown sample method '" + sm + "'");
    c.ensemble.warm_start_mmsbm = e.value("warm_start_mmsbm", c.ensemble.warm_start_mmsbm);
  }
  if (j.contains("attack")) {
    const auto& a = j.at("attack");
    c.attack.n_margin_trials = a.value("n_margin_trials", c.attack.n_margin_trials);
    c.attack.n_eval_trials = a.value("n_eval_trials", c.attack.n_eval_trials);
    c.attack.n_top = a.value("n_top", c.attack.n_top);
    c.attack.n_bottom = a.value("n_bottom", c.attack.n_bottom);
    c.attack.n_random = a.value("n_random", c.attack.n_random);
    c.attack.zero_budget = a.value("zero_budget", c.attack.zero_budget);
  }
  c.mmsbm_fit_iters = j.value("mmsbm_fit_iters", c.mmsbm_fit_iters);
  c.repetitions = j.value("repetitions", c.repetitions);
  c.n_workers = j.value("n_workers", c.n_workers);
  c.master_seed = j.value("master_seed", c.master_seed);
  c.row_normalize_features = j.value("row_normalize_features", c.row_normalize_features);
  c.output_dir = j.value("output_dir", c.output_dir);
  return c;
}

// Stable under key reordering: nlohmann objects serialize with sorted keys.
inline std::string config_hash(const ExperimentConfig& c) {
  const std::string dump = to_json(c).dump();
  std::ostringstream out;
  out << std::hex << std::setfill('0') << std::setw(16) << fnv1a64(dump.data(), dump.size());
  return out.str();
}

inline std::vector<std::string> validate(const ExperimentConfig& c) {
  std::vector<std::string> errors;
  if (c.dataset.empty())
    errors.push_back("dataset path is required");
  else if (!std::filesystem::exists(c.dataset))
    errors.push_back("dataset path does not exist: " + c.dataset);
  const bool known_task = c.task == "train_gcnn" || c.task == "train_bayesian" ||
                          c.task == "mmsbm_fit" || c.task == "attack";
  if (!known_task) errors.push_back("unknown task '" + c.task + "'");
  if (c.split.per_class <= 0) errors.push_back("split.per_class must be positive");
  if (c.repetitions <= 0) errors.push_back("repetitions must be positive");
  if (c.gcnn.learning_rate <= 0) errors.push_back("gcnn.learning_rate must be positive");
  if (c.gcnn.dropout_rate < 0 || c.gcnn.dropout_rate >= 1)
    errors.push_back("gcnn.dropout_rate must be in [0,1)");
  if (c.gcnn.hidden_units <= 0) errors.push_back("gcnn.hidden_units must be positive");
  if (c.gcnn.epochs <= 0) errors.push_back("gcnn.epochs must be positive");
  if (c.mmsbm.delta <= 0 || c.mmsbm.delta >= 1) errors.push_back("mmsbm.delta must be in (0,1)");
  if (c.mmsbm.eta <= 0 || c.mmsbm.alpha <= 0 || c.mmsbm.rho <= 0)
    errors.push_back("mmsbm prior parameters must be positive");
  if (c.mmsbm.nonedge_fraction <= 0 || c.mmsbm.nonedge_fraction > 1)
    errors.push_back("mmsbm.nonedge_fraction must be in (0,1]");
  if (c.ensemble.n_graphs < 1 || c.ensemble.n_dropout_samples < 1)
    errors.push_back("ensemble.n_graphs and ensemble.n_dropout_samples must be >= 1");
  if (c.output_dir.empty()) errors.push_back("output_dir is required");
  return errors;
}

inline void validate_or_throw(const ExperimentConfig& c) {
  const auto errors = validate(c);
  if (errors.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& e : errors) msg += "\n  - " + e;
  throw ValidationError(msg);
}

// --- metrics helpers -----------------------------------------------------------

inline double test_accuracy(const std::vector<int>& predicted, const LabelSet& labels) {
  if (labels.test_mask.empty()) throw std::invalid_argument("test_accuracy: empty test mask");
  std::int64_t correct = 0;
  for (int a : labels.test_mask)
    if (predicted[static_cast<std::size_t>(a)] == labels.label(a)) ++correct;
  return static_cast<double>(correct) / static_cast<double>(labels.test_mask.size());
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
inline double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Linear-interpolation quantile (the common "type 7" rule) on sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty data");
  if (sorted.size() == 1) return sorted.front();
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

// --- train command ---------------------------------------------------------------

struct RunRecord {
  int run_index = 0;
  std::uint64_t seed = 0;
  nlohmann::json metrics;
  std::string started_at;
  std::string finished_at;
  double wall_seconds = 0.0;
};

struct TrainOutcome {
  nlohmann::json summary;  // deterministic: carries no timestamps
  std::vector<RunRecord> runs;
  std::string summary_path;
  std::string runs_path;
};

namespace detail {

constexpr std::uint64_t kRepStream = 0x30;
constexpr std::uint64_t kSplitStream = 0x31;
constexpr std::uint64_t kGcnnStream = 0x32;
constexpr std::uint64_t kMmsbmFitStream = 0x33;
constexpr std::uint64_t kEvalPairStream = 0x34;

inline nlohmann::json run_one_repetition(const ExperimentConfig& cfg, const Dataset& ds, int rep,
                                         std::uint64_t rep_seed, const std::string& out_dir) {
  const LabelSet split = make_split(ds.labels, cfg.split.per_class, cfg.split.mode,
                                    derive_seed(rep_seed, {kSplitStream}));
  nlohmann::json metrics;
  if (cfg.task == "train_gcnn") {
    GcnnConfig gc = cfg.gcnn;
    gc.seed = derive_seed(rep_seed, {kGcnnStream});
    const PropagationMatrix a = normalize_adjacency(ds.graph);
    const GcnnWeights w = train(a, ds.features, split, gc);
    const ForwardPass fp = forward(w, a, ds.features, gc.activation);
    metrics["accuracy"] = test_accuracy(argmax_rows(fp.z), split);
    metrics["train_loss"] = loss(fp.z, split, w, gc.l2_coeff);
    save_weights(w, out_dir + "/weights_" + std::to_string(rep) + ".json");
  } else if (cfg.task == "train_bayesian") {
    EnsembleConfig ec = cfg.ensemble_config();
    ec.master_seed = rep_seed;
    ec.keep_samples = false;
    const EnsembleRun run = run_ensemble(ds.graph, ds.features, split, ec);
    metrics["accuracy"] = test_accuracy(run.prediction.predicted, split);
    // Paired plain-GCNN baseline under the same repetition seed stream as the
    // train_gcnn task, so cross-task comparisons share seeds.
    GcnnConfig gc = cfg.gcnn;
    gc.seed = derive_seed(rep_seed, {kGcnnStream});
    const PropagationMatrix a = normalize_adjacency(ds.graph);
    const GcnnWeights w = train(a, ds.features, split, gc);
    metrics["baseline_accuracy"] =
        test_accuracy(argmax_rows(forward(w, a, ds.features, gc.activation).z), split);
  } else if (cfg.task == "mmsbm_fit") {
    GcnnConfig gc = cfg.gcnn;
    gc.seed = derive_seed(rep_seed, {kGcnnStream});
    const PropagationMatrix a = normalize_adjacency(ds.graph);
    const GcnnWeights w = train(a, ds.features, split, gc);
    const Eigen::MatrixXd z = forward(w, a, ds.features, gc.activation).z;
    MmsbmState state{init_from_softmax(z, ds.graph, cfg.mmsbm), 0};
    MmsbmTrace trace(out_dir + "/mmsbm_trace_" + std::to_string(rep) + ".csv", ds.graph, 2000,
                     10, derive_seed(rep_seed, {kEvalPairStream}));
    map_inference_steps(state, ds.graph, cfg.mmsbm_fit_iters, cfg.mmsbm,
                        derive_seed(rep_seed, {kMmsbmFitStream}), &trace);
    save_mmsbm_params(state.params, cfg.mmsbm,
                      out_dir + "/mmsbm_params_" + std::to_string(rep) + ".json");
    const auto pairs = sample_eval_pairs(ds.graph, 2000, derive_seed(rep_seed, {kEvalPairStream}));
    metrics["final_log_joint_subsample"] =
        log_joint_subsample(state.params, ds.graph, cfg.mmsbm, pairs);
  } else {
    throw ValidationError("task '" + cfg.task + "' is not a train task");
  }
  return metrics;
}

inline nlohmann::json metric_block(const std::vector<double>& values) {
  return nlohmann::json{{"values", values}, {"mean", mean(values)}, {"stddev", stddev(values)}};
}

}  // namespace detail

// Argmax per row, ties to the lowest index (shared with the ensemble module).
inline std::vector<int> argmax_rows(const Eigen::MatrixXd& m) { return detail::argmax_rows(m); }

// Runs cfg.repetitions seeded repetitions of the configured task and writes
// runs.json (with timestamps) plus summary.json (bit-deterministic for a
// fixed config and master seed). Returns everything it wrote.
inline TrainOutcome cmd_train(const ExperimentConfig& cfg) {
  validate_or_throw(cfg);
  std::filesystem::create_directories(cfg.output_dir);

  LoadOptions opts;
  opts.row_normalize_features = cfg.row_normalize_features;
  const Dataset ds = load_dataset(cfg.dataset, opts);

  TrainOutcome outcome;
  outcome.runs.resize(static_cast<std::size_t>(cfg.repetitions));
  auto record_json = [](const RunRecord& rec) {
    return nlohmann::json{{"run_index", rec.run_index}, {"seed", rec.seed},
                          {"metrics", rec.metrics},    {"started_at", rec.started_at},
                          {"finished_at", rec.finished_at}, {"wall_seconds", rec.wall_seconds}};
  };
  parallel_for(cfg.repetitions, cfg.n_workers, [&](int rep) {
    RunRecord rec;
    rec.run_index = rep;
    rec.seed = derive_seed(cfg.master_seed, {detail::kRepStream, static_cast<std::uint64_t>(rep)});
    rec.started_at = detail::iso_timestamp();
    const auto t0 = std::chrono::steady_clock::now();
    rec.metrics = detail::run_one_repetition(cfg, ds, rep, rec.seed, cfg.output_dir);
    const auto t1 = std::chrono::steady_clock::now();
    rec.finished_at = detail::iso_timestamp();
    rec.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    // Each repetition lands on disk as soon as it finishes.
    detail::atomic_write(cfg.output_dir + "/run_" + std::to_string(rep) + ".json",
                         record_json(rec).dump(2) + "\n");
    outcome.runs[static_cast<std::size_t>(rep)] = std::move(rec);
  });

  // Collect per-metric values in run order.
  std::map<std::string, std::vector<double>> metric_values;
  std::vector<std::uint64_t> seeds;
  for (const auto& rec : outcome.runs) {
    seeds.push_back(rec.seed);
    for (const auto& [key, value] : rec.metrics.items())
      metric_values[key].push_back(value.get<double>());
  }

  nlohmann::json summary{{"format", "bgcn-summary"},
                         {"version", 1},
                         {"tool_version", kToolVersion},
                         {"config_hash", config_hash(cfg)},
                         {"config", to_json(cfg)},
                         {"task", cfg.task},
                         {"n_runs", cfg.repetitions},
                         {"seeds", seeds}};
  for (const auto& [key, values] : metric_values) summary["metrics"][key] = detail::metric_block(values);
  outcome.summary = summary;

  outcome.summary_path = cfg.output_dir + "/summary.json";
  detail::atomic_write(outcome.summary_path, summary.dump(2) + "\n");
  outcome.runs_path = cfg.output_dir + "/runs.json";
  {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& rec : outcome.runs) runs.push_back(record_json(rec));
    detail::atomic_write(outcome.runs_path, runs.dump(2) + "\n");
  }
  return outcome;
}

// --- attack command ---------------------------------------------------------------

struct AttackOutcome {
  AttackReport report;
  nlohmann::json summary;
  std::string csv_path;
  std::string summary_path;
};

inline AttackOutcome cmd_attack(const ExperimentConfig& cfg) {
  validate_or_throw(cfg);
  std::filesystem::create_directories(cfg.output_dir);
  LoadOptions opts;
  opts.row_normalize_features = cfg.row_normalize_features;
  const Dataset ds = load_dataset(cfg.dataset, opts);
  const LabelSet split = make_split(ds.labels, cfg.split.per_class, cfg.split.mode,
                                    derive_seed(cfg.master_seed, {detail::kSplitStream}));

  AttackOutcome outcome;
  outcome.report = run_attack_experiment(ds.graph, ds.features, split, cfg.attack_config());
  outcome.csv_path = cfg.output_dir + "/attack_report.csv";
  write_attack_csv(outcome.report, outcome.csv_path);
  outcome.summary = attack_summary_json(outcome.report);
  outcome.summary["config"] = to_json(cfg);
  outcome.summary["config_hash"] = config_hash(cfg);
  outcome.summary["tool_version"] = kToolVersion;
  outcome.summary_path = cfg.output_dir + "/attack_summary.json";
  std::ofstream out(outcome.summary_path);
  if (!out) throw std::runtime_error("cannot write " + outcome.summary_path);
  out << outcome.summary.dump(2) << "\n";
  return outcome;
}

// --- report command ----------------------------------------------------------------

struct ReportInputs {
  std::vector<std::string> summaries;    // summary.json files from cmd_train
  std::vector<std::string> attack_csvs;  // attack_report.csv files
  std::string output_dir = "report";
};

namespace detail {

struct SummaryRow {
  std::string file;
  std::string task;
  std::string dataset;
  int per_class = 0;
  std::string mode;
  int n_runs = 0;
  double mean_accuracy = 0.0;
  double sd_accuracy = 0.0;
  bool has_baseline = false;
  double mean_baseline = 0.0;
  double sd_baseline = 0.0;
  std::vector<double> accuracies;
};

inline SummaryRow parse_summary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "bgcn-summary")
    throw std::runtime_error(path + ": not a bgcn summary file");
  SummaryRow row;
  row.file = path;
  row.task = j.value("task", "");
  row.n_runs = j.value("n_runs", 0);
  const auto& cfg = j.at("config");
  row.dataset = cfg.value("dataset", "");
  row.per_class = cfg.at("split").value("per_class", 0);
  row.mode = cfg.at("split").value("mode", "");
  if (j.contains("metrics") && j.at("metrics").contains("accuracy")) {
    const auto& acc = j.at("metrics").at("accuracy");
    row.mean_accuracy = acc.value("mean", 0.0);
    row.sd_accuracy = acc.value("stddev", 0.0);
    row.accuracies = acc.value("values", std::vector<double>{});
  }
  if (j.contains("metrics") && j.at("metrics").contains("baseline_accuracy")) {
    const auto& acc = j.at("metrics").at("baseline_accuracy");
    row.has_baseline = true;
    row.mean_baseline = acc.value("mean", 0.0);
    row.sd_baseline = acc.value("stddev", 0.0);
  }
  return row;
}

struct MarginGroup {
  std::string source;
  std::string algorithm;
  std::string phase;  // no_attack | random_attack
  std::vector<double> per_target_mean_margin;
};

inline std::vector<MarginGroup> parse_attack_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty attack csv");
  // algorithm,target,trial,pre_margin,post_margin,pre_correct,post_correct
  std::map<std::pair<std::string, int>, std::pair<std::vector<double>, std::vector<double>>> cells;
  std::int64_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 7) throw ParseError(path, lineno, "expected 7 fields");
    const std::string algo = fields[0];
    const int target = static_cast<int>(parse_int(fields[1], path, lineno, "target"));
    const double pre = parse_double(fields[3], path, lineno, "pre_margin");
    const double post = parse_double(fields[4], path, lineno, "post_margin");
    auto& entry = cells[{algo, target}];
    entry.first.push_back(pre);
    entry.second.push_back(post);
  }
  std::map<std::pair<std::string, std::string>, std::vector<double>> grouped;
  for (const auto& [key, margins] : cells) {
    grouped[{key.first, "no_attack"}].push_back(mean(margins.first));
    grouped[{key.first, "random_attack"}].push_back(mean(margins.second));
  }
  std::vector<MarginGroup> out;
  for (auto& [key, values] : grouped) {
    MarginGroup g;
    g.source = path;
    g.algorithm = key.first;
    g.phase = key.second;
    g.per_target_mean_margin = std::move(values);
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace detail

struct ReportOutcome {
  std::string table_text;
  std::string report_path;
  std::string table_csv_path;
  std::string accuracies_csv_path;
  std::string boxplot_csv_path;  // empty when no attack csv was given
};

// Formats accuracy tables from train summaries, dumps raw per-run accuracies,
// and turns attack CSVs into boxplot-ready quartile rows (per-target margins
// averaged over trials). Never mutates its inputs.
inline ReportOutcome cmd_report(const ReportInputs& inputs) {
  if (inputs.summaries.empty() && inputs.attack_csvs.empty())
    throw ValidationError("cmd_report: no input files given");
  std::filesystem::create_directories(inputs.output_dir);
  ReportOutcome outcome;

  std::vector<detail::SummaryRow> rows;
  rows.reserve(inputs.summaries.size());
  for (const auto& path : inputs.summaries) rows.push_back(detail::parse_summary(path));

  std::ostringstream table;
  table << std::left << std::setw(16) << "task" << std::setw(28) << "dataset" << std::setw(8)
        << "labels" << std::setw(8) << "mode" << std::setw(6) << "runs" << std::setw(20)
        << "accuracy" << std::setw(20) << "baseline" << "\n";
  table << std::string(106, '-') << "\n";
  table << std::fixed << std::setprecision(4);
  for (const auto& r : rows) {
    std::ostringstream acc, base;
    acc << std::fixed << std::setprecision(4) << r.mean_accuracy << " +/- " << r.sd_accuracy;
    if (r.has_baseline)
      base << std::fixed << std::setprecision(4) << r.mean_baseline << " +/- " << r.sd_baseline;
    else
      base << "-";
    table << std::left << std::setw(16) << r.task << std::setw(28)
          << std::filesystem::path(r.dataset).filename().string() << std::setw(8) << r.per_class
          << std::setw(8) << r.mode << std::setw(6) << r.n_runs << std::setw(20) << acc.str()
          << std::setw(20) << base.str() << "\n";
  }
  outcome.table_text = table.str();

  outcome.report_path = inputs.output_dir + "/report.txt";
  {
    std::ofstream out(outcome.report_path);
    out << outcome.table_text;
  }
  outcome.table_csv_path = inputs.output_dir + "/accuracy_table.csv";
  {
    std::ofstream out(outcome.table_csv_path);
    out.precision(17);
    out << "file,task,dataset,per_class,mode,n_runs,mean_accuracy,sd_accuracy,mean_baseline,sd_baseline\n";
    for (const auto& r : rows) {
      out << r.file << "," << r.task << "," << r.dataset << "," << r.per_class << "," << r.mode
          << "," << r.n_runs << "," << r.mean_accuracy << "," << r.sd_accuracy << ",";
      if (r.has_baseline)
        out << r.mean_baseline << "," << r.sd_baseline;
      else
        out << ",";
      out << "\n";
    }
  }
  outcome.accuracies_csv_path = inputs.output_dir + "/accuracies.csv";
  {
    std::ofstream out(outcome.accuracies_csv_path);
    out.precision(17);
    out << "file,task,run_index,accuracy\n";
    for (const auto& r : rows)
      for (std::size_t i = 0; i < r.accuracies.size(); ++i)
        out << r.file << "," << r.task << "," << i << "," << r.accuracies[i] << "\n";
  }

  if (!inputs.attack_csvs.empty()) {
    outcome.boxplot_csv_path = inputs.output_dir + "/margins_boxplot.csv";
    std::ofstream out(outcome.boxplot_csv_path);
    out.precision(17);
    out << "source,algorithm,phase,n,min,q25,median,q75,max,mean\n";
    for (const auto& path : inputs.attack_csvs) {
      for (auto& group : detail::parse_attack_csv(path)) {
        std::vector<double> sorted = group.per_target_mean_margin;
        std::sort(sorted.begin(), sorted.end());
        out << group.source << "," << group.algorithm << "," << group.phase << ","
            << sorted.size() << "," << sorted.front() << "," << quantile_sorted(sorted, 0.25)
            << "," << quantile_sorted(sorted, 0.5) << "," << quantile_sorted(sorted, 0.75) << ","
            << sorted.back() << "," << mean(sorted) << "\n";
      }
    }
  }
  return outcome;
}

// --- convert command ----------------------------------------------------------------

struct ConvertArgs {
  std::string edges;     // pairs of original node ids, comma/whitespace separated
  std::string features;  // one row per node, aligned with the labels file order
  std::string labels;    // id,class[,role]; defines the node ordering
  std::string output_dir;
  int expect_nodes = -1;
  std::int64_t expect_edges = -1;
  int expect_classes = -1;
  int expect_feature_dim = -1;
};

namespace detail {

inline std::vector<std::string> split_loose(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!field.empty()) fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  if (!field.empty()) fields.push_back(field);
  return fields;
}

}  // namespace detail

// Converts the documented raw layout into a container directory. Node order
// follows the labels file; original ids may be arbitrary tokens; class tokens
// are mapped to indices in sorted order and recorded in the manifest.
inline nlohmann::json cmd_convert(const ConvertArgs& args) {
  if (args.edges.empty() || args.features.empty() || args.labels.empty() ||
      args.output_dir.empty())
    throw ValidationError("convert: edges, features, labels and output_dir are all required");

  // Pass 1: labels define node ordering and the class vocabulary.
  std::vector<std::string> node_ids;
  std::vector<std::string> class_tokens;
  std::vector<std::string> role_tokens;
  {
    std::ifstream in(args.labels);
    if (!in) throw ParseError(args.labels, 0, "cannot open file");
    std::string line;
    std::int64_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto fields = detail::split_loose(line);
      if (lineno == 1 && !fields.empty() && (fields[0] == "id" || fields[0] == "node")) continue;
      if (fields.size() != 2 && fields.size() != 3)
        throw ParseError(args.labels, lineno, "expected 'id,class[,role]'");
      node_ids.push_back(fields[0]);
      class_tokens.push_back(fields[1]);
      role_tokens.push_back(fields.size() == 3 ? fields[2] : "train_pool");
    }
  }
  const int n_nodes = static_cast<int>(node_ids.size());
  if (n_nodes == 0) throw ParseError(args.labels, 0, "no label rows");

  std::map<std::string, int> id_index;
  for (int a = 0; a < n_nodes; ++a) {
    if (!id_index.emplace(node_ids[static_cast<std::size_t>(a)], a).second)
      throw ParseError(args.labels, a + 1,
                       "duplicate node id '" + node_ids[static_cast<std::size_t>(a)] + "'");
  }
  std::vector<std::string> class_names;
  for (const auto& t : class_tokens)
    if (!t.empty() && t != "-") class_names.push_back(t);
  std::sort(class_names.begin(), class_names.end());
  class_names.erase(std::unique(class_names.begin(), class_names.end()), class_names.end());
  std::map<std::string, int> class_index;
  for (std::size_t i = 0; i < class_names.size(); ++i)
    class_index[class_names[i]] = static_cast<int>(i);

  Dataset ds;
  ds.labels.n_classes = static_cast<int>(class_names.size());
  ds.labels.labels.assign(static_cast<std::size_t>(n_nodes), -1);
  ds.labels.roles.assign(static_cast<std::size_t>(n_nodes), NodeRole::unlabeled);
  for (int a = 0; a < n_nodes; ++a) {
    const auto& cls = class_tokens[static_cast<std::size_t>(a)];
    if (!cls.empty() && cls != "-") ds.labels.labels[static_cast<std::size_t>(a)] = class_index.at(cls);
    const auto& role = role_tokens[static_cast<std::size_t>(a)];
    if (role == "train_pool")
      ds.labels.roles[static_cast<std::size_t>(a)] = NodeRole::train_pool;
    else if (role == "test")
      ds.labels.roles[static_cast<std::size_t>(a)] = NodeRole::test;
    else if (role == "unlabeled")
      ds.labels.roles[static_cast<std::size_t>(a)] = NodeRole::unlabeled;
    else
      throw ParseError(args.labels, a + 1, "unknown role '" + role + "'");
    if (ds.labels.labels[static_cast<std::size_t>(a)] < 0 &&
        ds.labels.roles[static_cast<std::size_t>(a)] != NodeRole::unlabeled)
      throw ParseError(args.labels, a + 1, "node without class cannot have role '" + role + "'");
  }
  for (int a = 0; a < n_nodes; ++a)
    if (ds.labels.roles[static_cast<std::size_t>(a)] == NodeRole::test && ds.labels.has_label(a))
      ds.labels.test_mask.push_back(a);
  ds.labels.validate();

  // Pass 2: edges, remapped through the id index.
  {
    std::ifstream in(args.edges);
    if (!in) throw ParseError(args.edges, 0, "cannot open file");
    std::string line;
    std::int64_t lineno = 0;
    std::vector<NodePair> pairs;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto fields = detail::split_loose(line);
      if (lineno == 1 && !fields.empty() && (fields[0] == "src" || fields[0] == "source")) continue;
      if (fields.size() != 2) throw ParseError(args.edges, lineno, "expected 2 fields");
      const auto a = id_index.find(fields[0]);
      const auto b = id_index.find(fields[1]);
      if (a == id_index.end())
        throw ParseError(args.edges, lineno, "unknown node id '" + fields[0] + "'");
      if (b == id_index.end())
        throw ParseError(args.edges, lineno, "unknown node id '" + fields[1] + "'");
      if (a->second == b->second) continue;  // self-citations carry no graph information
      pairs.emplace_back(a->second, b->second);
    }
    ds.graph = Graph::from_edges(n_nodes, std::move(pairs));
  }

  // Pass 3: features, one row per node in labels-file order.
  {
    std::ifstream in(args.features);
    if (!in) throw ParseError(args.features, 0, "cannot open file");
    std::string line;
    std::int64_t lineno = 0;
    int row = 0;
    int dim = -1;
    std::vector<Eigen::Triplet<double>> entries;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      if (row >= n_nodes) throw ParseError(args.features, lineno, "more feature rows than nodes");
      auto fields = detail::split_loose(line);
      if (dim < 0)
        dim = static_cast<int>(fields.size());
      else if (static_cast<int>(fields.size()) != dim)
        throw ParseError(args.features, lineno,
                         "row width " + std::to_string(fields.size()) + " != " + std::to_string(dim));
      for (int j = 0; j < dim; ++j) {
        const double v = detail::parse_double(fields[static_cast<std::size_t>(j)], args.features,
                                              lineno, "feature " + std::to_string(j));
        if (v != 0.0) entries.emplace_back(row, j, v);
      }
      ++row;
    }
    if (row != n_nodes)
      throw ParseError(args.features, lineno,
                       "expected " + std::to_string(n_nodes) + " rows, got " + std::to_string(row));
    ds.features.resize(n_nodes, dim);
    ds.features.setFromTriplets(entries.begin(), entries.end());
    ds.features.makeCompressed();
  }

  std::vector<std::string> mismatches;
  auto expect = [&](const char* name, std::int64_t expected, std::int64_t actual) {
    if (expected >= 0 && expected != actual)
      mismatches.push_back(std::string(name) + ": expected " + std::to_string(expected) +
                           ", got " + std::to_string(actual));
  };
  expect("n_nodes", args.expect_nodes, n_nodes);
  expect("n_edges", args.expect_edges, ds.graph.n_edges());
  expect("n_classes", args.expect_classes, ds.labels.n_classes);
  expect("feature_dim", args.expect_feature_dim, ds.features.cols());
  if (!mismatches.empty()) {
    std::string msg = "convert: count validation failed:";
    for (const auto& m : mismatches) msg += "\n  - " + m;
    throw ValidationError(msg);
  }

  nlohmann::json extra{{"class_names", class_names},
                       {"source",
                        {{"edges", args.edges}, {"features", args.features}, {"labels", args.labels}}}};
  save_container(ds, args.output_dir, extra);
  return nlohmann::json{{"n_nodes", n_nodes},
                        {"n_edges", ds.graph.n_edges()},
                        {"n_classes", ds.labels.n_classes},
                        {"feature_dim", ds.features.cols()},
                        {"output_dir", args.output_dir}};
}

}  // namespace bgcn

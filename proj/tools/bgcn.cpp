#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bgcn/dataset.hpp"
#include "bgcn/experiment.hpp"
#include "bgcn/synthetic.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

bgcn::ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw bgcn::ValidationError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw bgcn::ValidationError(path + ": invalid JSON: " + e.what());
  }
  return bgcn::config_from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian graph convolution toolkit"};
  app.require_subcommand(1);

  // --- convert -------------------------------------------------------------
  bgcn::ConvertArgs convert_args;
  auto* convert = app.add_subcommand("convert", "Convert raw CSVs into a dataset container");
  convert->add_option("--edges", convert_args.edges, "Edge list (original ids)")->required();
  convert->add_option("--features", convert_args.features, "Feature rows, labels-file order")
      ->required();
  convert->add_option("--labels", convert_args.labels, "id,class[,role] rows; defines node order")
      ->required();
  convert->add_option("--out", convert_args.output_dir, "Output container directory")->required();
  convert->add_option("--expect-nodes", convert_args.expect_nodes, "Validate node count");
  convert->add_option("--expect-edges", convert_args.expect_edges, "Validate edge count");
  convert->add_option("--expect-classes", convert_args.expect_classes, "Validate class count");
  convert->add_option("--expect-feature-dim", convert_args.expect_feature_dim,
                      "Validate feature dimension");

  // --- train / attack shared options ----------------------------------------
  struct CommonOpts {
    std::string config_file;
    std::string dataset;
    std::string task;
    std::string output_dir;
    std::string split_mode;
    int per_class = -1;
    int repetitions = -1;
    int epochs = -1;
    int n_graphs = -1;
    int n_dropout_samples = -1;
    int n_mmsbm_iters = -1;
    int n_workers = -1;
    std::uint64_t master_seed = 0;
    bool seed_set = false;
  };

  CommonOpts train_opts;
  auto* train = app.add_subcommand("train", "Run a training experiment over R repetitions");
  auto add_common = [](CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_file, "JSON config file (flags override it)");
    cmd->add_option("--dataset", o.dataset, "Dataset container (dir or manifest.json)");
    cmd->add_option("--out", o.output_dir, "Output directory");
    cmd->add_option("--per-class", o.per_class, "Training labels per class");
    cmd->add_option("--split", o.split_mode, "Split mode: fixed|random");
    cmd->add_option("--reps", o.repetitions, "Number of repetitions");
    cmd->add_option("--epochs", o.epochs, "Classifier training epochs");
    cmd->add_option("--n-graphs", o.n_graphs, "Ensemble: graphs to sample");
    cmd->add_option("--n-dropout-samples", o.n_dropout_samples, "Ensemble: dropout samples per graph");
    cmd->add_option("--n-mmsbm-iters", o.n_mmsbm_iters, "Ensemble: block-model iterations per graph");
    cmd->add_option("--workers", o.n_workers, "Worker threads (0 = auto)");
    auto* seed = cmd->add_option("--seed", o.master_seed, "Master seed");
    seed->each([&o](const std::string&) { o.seed_set = true; });
  };
  add_common(train, train_opts);
  train->add_option("--task", train_opts.task, "train_gcnn | train_bayesian | mmsbm_fit");

  CommonOpts attack_opts;
  auto* attack = app.add_subcommand("attack", "Run the node-attack robustness experiment");
  add_common(attack, attack_opts);
  int attack_margin_trials = -1, attack_eval_trials = -1;
  bool attack_zero_budget = false;
  attack->add_option("--margin-trials", attack_margin_trials, "Trials for target selection");
  attack->add_option("--eval-trials", attack_eval_trials, "Trials per target");
  attack->add_flag("--zero-budget", attack_zero_budget, "Control run with empty perturbations");

  // --- report ----------------------------------------------------------------
  bgcn::ReportInputs report_inputs;
  auto* report = app.add_subcommand("report", "Format tables and plot data from run files");
  report->add_option("summaries", report_inputs.summaries, "summary.json files");
  report->add_option("--attack-csv", report_inputs.attack_csvs, "attack_report.csv files");
  report->add_option("--out", report_inputs.output_dir, "Output directory");

  // --- synth -----------------------------------------------------------------
  bgcn::SyntheticSpec synth_spec;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Write a synthetic planted-community container");
  synth->add_option("--nodes", synth_spec.n_nodes, "Node count");
  synth->add_option("--classes", synth_spec.n_classes, "Class/community count");
  synth->add_option("--intra", synth_spec.intra_strength, "Intra-community link probability");
  synth->add_option("--cross", synth_spec.cross_probability, "Cross-community link probability");
  synth->add_option("--feature-dim", synth_spec.feature_dim, "Feature dimension");
  synth->add_option("--train-pool", synth_spec.train_pool_per_class, "Train-pool nodes per class");
  synth->add_option("--seed", synth_spec.seed, "Seed");
  synth->add_option("--out", synth_out, "Output container directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  auto build_config = [](const CommonOpts& o, const std::string& default_task) {
    bgcn::ExperimentConfig cfg;
    if (!o.config_file.empty()) cfg = load_config_file(o.config_file);
    if (cfg.task.empty() || (!default_task.empty() && o.config_file.empty())) cfg.task = default_task;
    if (!o.task.empty()) cfg.task = o.task;
    if (!o.dataset.empty()) cfg.dataset = o.dataset;
    if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
    if (o.per_class > 0) cfg.split.per_class = o.per_class;
    if (!o.split_mode.empty()) {
      if (o.split_mode == "fixed")
        cfg.split.mode = bgcn::SplitMode::fixed;
      else if (o.split_mode == "random")
        cfg.split.mode = bgcn::SplitMode::random;
      else
        throw bgcn::ValidationError("unknown split mode '" + o.split_mode + "'");
    }
    if (o.repetitions > 0) cfg.repetitions = o.repetitions;
    if (o.epochs > 0) cfg.gcnn.epochs = o.epochs;
    if (o.n_graphs > 0) cfg.ensemble.n_graphs = o.n_graphs;
    if (o.n_dropout_samples > 0) cfg.ensemble.n_dropout_samples = o.n_dropout_samples;
    if (o.n_mmsbm_iters > 0) cfg.ensemble.n_mmsbm_iters = o.n_mmsbm_iters;
    if (o.n_workers >= 0) cfg.n_workers = o.n_workers;
    if (o.seed_set) cfg.master_seed = o.master_seed;
    return cfg;
  };

  try {
    if (convert->parsed()) {
      const auto result = bgcn::cmd_convert(convert_args);
      std::cout << result.dump(2) << "\n";
      return kExitOk;
    }
    if (train->parsed()) {
      auto cfg = build_config(train_opts, "train_gcnn");
      const auto outcome = bgcn::cmd_train(cfg);
      std::cout << "wrote " << outcome.summary_path << " and " << outcome.runs_path << "\n";
      const auto& metrics = outcome.summary.at("metrics");
      if (metrics.contains("accuracy"))
        std::cout << "accuracy: " << metrics.at("accuracy").at("mean").get<double>() << " +/- "
                  << metrics.at("accuracy").at("stddev").get<double>() << " over "
                  << cfg.repetitions << " run(s)\n";
      return kExitOk;
    }
    if (attack->parsed()) {
      auto cfg = build_config(attack_opts, "attack");
      cfg.task = "attack";
      if (attack_margin_trials > 0) cfg.attack.n_margin_trials = attack_margin_trials;
      if (attack_eval_trials > 0) cfg.attack.n_eval_trials = attack_eval_trials;
      if (attack_zero_budget) cfg.attack.zero_budget = true;
      const auto outcome = bgcn::cmd_attack(cfg);
      std::cout << "wrote " << outcome.csv_path << " and " << outcome.summary_path << "\n";
      for (const auto* r : {&outcome.report.gcnn, &outcome.report.bayesian})
        std::cout << bgcn::to_string(r->algorithm) << ": accuracy " << r->clean_accuracy << " -> "
                  << r->attacked_accuracy << ", margin " << r->clean_margin << " -> "
                  << r->attacked_margin << "\n";
      return kExitOk;
    }
    if (report->parsed()) {
      const auto outcome = bgcn::cmd_report(report_inputs);
      std::cout << outcome.table_text;
      std::cout << "wrote " << outcome.report_path << "\n";
      return kExitOk;
    }
    if (synth->parsed()) {
      const auto ds = bgcn::make_synthetic_dataset(synth_spec);
      bgcn::save_container(ds, synth_out);
      std::cout << "wrote container with " << ds.labels.n_nodes() << " nodes, "
                << ds.graph.n_edges() << " edges to " << synth_out << "\n";
      return kExitOk;
    }
  } catch (const bgcn::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const bgcn::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

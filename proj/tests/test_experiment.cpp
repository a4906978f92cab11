#include <catch2/catch.hpp>

#include <fstream>
#include <sstream>

#include "bgcn/experiment.hpp"
#include "bgcn/synthetic.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace bgcn;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string write_synth_container(const testutil::TempDir& tmp, const std::string& name,
                                  std::uint64_t seed = 3) {
  SyntheticSpec spec;
  spec.n_nodes = 60;
  spec.n_classes = 3;
  spec.intra_strength = 0.3;
  spec.cross_probability = 0.02;
  spec.feature_dim = 30;
  spec.features_per_node = 4;
  spec.train_pool_per_class = 8;
  spec.seed = seed;
  const Dataset ds = make_synthetic_dataset(spec);
  const std::string dir = tmp.file(name);
  save_container(ds, dir);
  return dir;
}

ExperimentConfig tiny_config(const std::string& dataset, const std::string& out_dir) {
  ExperimentConfig cfg;
  cfg.dataset = dataset;
  cfg.output_dir = out_dir;
  cfg.task = "train_gcnn";
  cfg.split.per_class = 5;
  cfg.repetitions = 2;
  cfg.gcnn.hidden_units = 8;
  cfg.gcnn.epochs = 20;
  cfg.ensemble.n_graphs = 1;
  cfg.ensemble.n_dropout_samples = 2;
  cfg.ensemble.n_mmsbm_iters = 5;
  cfg.mmsbm.delta = 0.02;
  cfg.mmsbm.n_minibatch = 60;
  cfg.mmsbm.nonedge_fraction = 0.1;
  cfg.n_workers = 2;
  cfg.master_seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("experiment config serialization", "[experiment][config]") {
  SECTION("round trips through JSON") {
    ExperimentConfig cfg;
    cfg.dataset = "somewhere";
    cfg.task = "train_bayesian";
    cfg.split.per_class = 10;
    cfg.split.mode = SplitMode::random;
    cfg.gcnn.epochs = 123;
    cfg.mmsbm.delta = 0.05;
    cfg.ensemble.sample_method = SampleMethod::fast;
    cfg.master_seed = 99;
    const ExperimentConfig back = config_from_json(to_json(cfg));
    CHECK(to_json(back) == to_json(cfg));
  }

  SECTION("hash is stable under key reordering") {
    ExperimentConfig cfg;
    cfg.dataset = "x";
    const nlohmann::json a = to_json(cfg);
    // Rebuild the object inserting keys in reverse order.
    nlohmann::json b;
    std::vector<std::string> keys;
    for (const auto& [k, v] : a.items()) keys.push_back(k);
    for (auto it = keys.rbegin(); it != keys.rend(); ++it) b[*it] = a.at(*it);
    CHECK(config_hash(config_from_json(b)) == config_hash(cfg));
  }

  SECTION("validation reports every problem before any compute") {
    ExperimentConfig cfg;
    cfg.dataset = "/definitely/not/here";
    cfg.task = "noop";
    cfg.repetitions = 0;
    cfg.gcnn.dropout_rate = 1.5;
    const auto errors = validate(cfg);
    CHECK(errors.size() >= 4);
    CHECK_THROWS_AS(validate_or_throw(cfg), ValidationError);
  }
}

TEST_CASE("quantiles match the reference", "[experiment]") {
  auto rng = make_rng(17);
  std::uniform_real_distribution<double> unit(-2.0, 2.0);
  std::vector<double> data;
  for (int i = 0; i < 37; ++i) data.push_back(unit(rng));
  std::vector<double> sorted = data;
  std::sort(sorted.begin(), sorted.end());
  for (double q : {0.0, 0.25, 0.5, 0.75, 1.0})
    CHECK(quantile_sorted(sorted, q) == Approx(oracle::quantile_reference(data, q)).epsilon(1e-12));
}

TEST_CASE("cmd_train", "[experiment][training]") {
  testutil::TempDir tmp;
  const std::string dataset = write_synth_container(tmp, "data");

  SECTION("summary is bit-identical across two runs of the same config") {
    ExperimentConfig cfg = tiny_config(dataset, tmp.file("out1"));
    const TrainOutcome o1 = cmd_train(cfg);
    cfg.output_dir = tmp.file("out2");
    const TrainOutcome o2 = cmd_train(cfg);
    // output_dir participates in the config echo, so compare the rest.
    nlohmann::json s1 = o1.summary, s2 = o2.summary;
    s1["config"].erase("output_dir");
    s2["config"].erase("output_dir");
    s1.erase("config_hash");
    s2.erase("config_hash");
    CHECK(s1.dump() == s2.dump());

    // And byte-identical files when the directory is reused.
    cfg.output_dir = tmp.file("out1");
    cmd_train(cfg);
    CHECK(slurp(tmp.file("out1") + "/summary.json") == slurp(tmp.file("out1") + "/summary.json"));
  }

  SECTION("summary statistics match the per-run records") {
    const ExperimentConfig cfg = tiny_config(dataset, tmp.file("out"));
    const TrainOutcome outcome = cmd_train(cfg);
    REQUIRE(outcome.runs.size() == 2);
    // Weight checkpoints land next to the records and load back.
    const GcnnWeights w = load_weights(tmp.file("out") + "/weights_1.json");
    CHECK(w.w0.rows() == 30);
    CHECK(w.w0.cols() == 8);
    std::vector<double> accs;
    for (const auto& rec : outcome.runs) accs.push_back(rec.metrics.at("accuracy").get<double>());
    const auto& acc = outcome.summary.at("metrics").at("accuracy");
    CHECK(acc.at("mean").get<double>() == Approx(mean(accs)).epsilon(1e-15));
    CHECK(acc.at("stddev").get<double>() == Approx(stddev(accs)).epsilon(1e-15));
    CHECK(acc.at("values").size() == 2);
    CHECK(std::filesystem::exists(outcome.runs_path));
  }

  SECTION("identical seeds give identical metrics") {
    ExperimentConfig cfg = tiny_config(dataset, tmp.file("outA"));
    const TrainOutcome o1 = cmd_train(cfg);
    cfg.output_dir = tmp.file("outB");
    const TrainOutcome o2 = cmd_train(cfg);
    CHECK(o1.runs[0].metrics.dump() == o2.runs[0].metrics.dump());
    CHECK(o1.runs[1].metrics.dump() == o2.runs[1].metrics.dump());
  }

  SECTION("worker count does not change the results") {
    ExperimentConfig cfg = tiny_config(dataset, tmp.file("outw1"));
    cfg.repetitions = 3;
    cfg.n_workers = 1;
    const TrainOutcome serial = cmd_train(cfg);
    cfg.output_dir = tmp.file("outw3");
    cfg.n_workers = 3;
    const TrainOutcome pooled = cmd_train(cfg);
    CHECK(serial.summary.at("metrics").dump() == pooled.summary.at("metrics").dump());
  }

  SECTION("bayesian task reports the paired baseline") {
    ExperimentConfig cfg = tiny_config(dataset, tmp.file("outb"));
    cfg.task = "train_bayesian";
    cfg.repetitions = 1;
    const TrainOutcome outcome = cmd_train(cfg);
    CHECK(outcome.summary.at("metrics").contains("accuracy"));
    CHECK(outcome.summary.at("metrics").contains("baseline_accuracy"));
  }

  SECTION("mmsbm_fit writes parameter checkpoints and a trace") {
    ExperimentConfig cfg = tiny_config(dataset, tmp.file("outm"));
    cfg.task = "mmsbm_fit";
    cfg.repetitions = 1;
    cfg.mmsbm_fit_iters = 10;
    const TrainOutcome outcome = cmd_train(cfg);
    CHECK(outcome.summary.at("metrics").contains("final_log_joint_subsample"));
    CHECK(std::filesystem::exists(tmp.file("outm") + "/mmsbm_params_0.json"));
    CHECK(std::filesystem::exists(tmp.file("outm") + "/mmsbm_trace_0.csv"));
  }

  SECTION("validation failures surface before compute") {
    ExperimentConfig cfg = tiny_config(dataset, tmp.file("outv"));
    cfg.dataset = "/missing/container";
    CHECK_THROWS_AS(cmd_train(cfg), ValidationError);
  }
}

TEST_CASE("cmd_report", "[experiment]") {
  testutil::TempDir tmp;
  const std::string dataset = write_synth_container(tmp, "data");
  ExperimentConfig cfg = tiny_config(dataset, tmp.file("run1"));
  const TrainOutcome outcome = cmd_train(cfg);

  SECTION("a single summary produces a one-row table") {
    ReportInputs inputs;
    inputs.summaries = {outcome.summary_path};
    inputs.output_dir = tmp.file("report");
    const ReportOutcome rep = cmd_report(inputs);
    CHECK(rep.table_text.find("train_gcnn") != std::string::npos);
    CHECK(std::filesystem::exists(rep.report_path));
    CHECK(std::filesystem::exists(rep.table_csv_path));
    const std::string accs = slurp(rep.accuracies_csv_path);
    CHECK(accs.find("run_index") != std::string::npos);

    // Deterministic for fixed inputs.
    ReportInputs again = inputs;
    again.output_dir = tmp.file("report2");
    const ReportOutcome rep2 = cmd_report(again);
    CHECK(rep2.table_text == rep.table_text);
  }

  SECTION("boxplot rows match an independent quantile oracle") {
    // Hand-built attack CSV: 3 targets x 2 trials for one algorithm.
    const std::string csv_path = tmp.file("attack.csv");
    std::ofstream out(csv_path);
    out << "algorithm,target,trial,pre_margin,post_margin,pre_correct,post_correct\n";
    const double pre[3][2] = {{0.6, 0.8}, {0.2, 0.4}, {-0.1, 0.3}};
    const double post[3][2] = {{0.1, 0.3}, {-0.2, 0.0}, {-0.4, -0.6}};
    for (int t = 0; t < 3; ++t)
      for (int r = 0; r < 2; ++r)
        out << "gcnn," << (100 + t) << "," << r << "," << pre[t][r] << "," << post[t][r]
            << ",1,0\n";
    out.close();

    ReportInputs inputs;
    inputs.attack_csvs = {csv_path};
    inputs.output_dir = tmp.file("reportx");
    const ReportOutcome rep = cmd_report(inputs);
    REQUIRE_FALSE(rep.boxplot_csv_path.empty());
    const std::string box = slurp(rep.boxplot_csv_path);

    // Per-target means: no_attack {0.7, 0.3, 0.1}, random_attack {0.2, -0.1, -0.5}.
    const std::vector<double> clean{0.7, 0.3, 0.1};
    std::ostringstream expected;
    expected.precision(17);
    expected << oracle::quantile_reference(clean, 0.25);
    CHECK(box.find("no_attack") != std::string::npos);
    CHECK(box.find(expected.str()) != std::string::npos);
    const std::vector<double> attacked{0.2, -0.1, -0.5};
    std::ostringstream expected_median;
    expected_median.precision(17);
    expected_median << oracle::quantile_reference(attacked, 0.5);
    CHECK(box.find(expected_median.str()) != std::string::npos);
  }

  SECTION("no inputs is a validation error") {
    CHECK_THROWS_AS(cmd_report(ReportInputs{}), ValidationError);
  }
}

TEST_CASE("cmd_convert", "[experiment][convert]") {
  testutil::TempDir tmp;

  auto write_raw = [&](const std::string& labels_body, const std::string& edges_body,
                       const std::string& features_body) {
    testutil::write_file(tmp.file("raw_labels.csv"), labels_body);
    testutil::write_file(tmp.file("raw_edges.csv"), edges_body);
    testutil::write_file(tmp.file("raw_features.csv"), features_body);
  };

  SECTION("converts, remaps ids and classes, and round-trips through load") {
    write_raw("id,class,role\n77,cat,train_pool\n12,dog,test\n31,cat,test\n9,ant,unlabeled\n",
              "77 12\n12\t31\n31,77\n9 77\n",
              "1 0 0\n0 1 0\n0 0 1\n0.5 0.5 0\n");
    ConvertArgs args;
    args.edges = tmp.file("raw_edges.csv");
    args.features = tmp.file("raw_features.csv");
    args.labels = tmp.file("raw_labels.csv");
    args.output_dir = tmp.file("container");
    const auto result = cmd_convert(args);
    CHECK(result.at("n_nodes") == 4);
    CHECK(result.at("n_edges") == 4);
    CHECK(result.at("n_classes") == 3);

    LoadOptions opts;
    opts.row_normalize_features = false;
    const Dataset ds = load_dataset(tmp.file("container"), opts);
    CHECK(ds.graph.n_edges() == 4);
    // Classes sorted: ant=0, cat=1, dog=2; node order follows the labels file.
    CHECK(ds.labels.label(0) == 1);
    CHECK(ds.labels.label(1) == 2);
    CHECK(ds.labels.label(3) == 0);
    CHECK(ds.labels.test_mask == std::vector<int>{1, 2});
    CHECK(ds.graph.has_edge(0, 1));
    CHECK(ds.graph.has_edge(3, 0));

    // The manifest records the class vocabulary.
    nlohmann::json manifest;
    std::ifstream in(tmp.file("container") + "/manifest.json");
    in >> manifest;
    CHECK(manifest.at("class_names") == nlohmann::json({"ant", "cat", "dog"}));
  }

  SECTION("malformed rows carry line numbers") {
    write_raw("id,class,role\n1,cat,test\n", "1 nonexistent\n", "1 0\n");
    ConvertArgs args;
    args.edges = tmp.file("raw_edges.csv");
    args.features = tmp.file("raw_features.csv");
    args.labels = tmp.file("raw_labels.csv");
    args.output_dir = tmp.file("c2");
    try {
      cmd_convert(args);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 1);
      CHECK(std::string(e.what()).find("nonexistent") != std::string::npos);
    }
  }

  SECTION("expected-count validation") {
    write_raw("id,class\n1,a\n2,b\n", "1 2\n", "1\n0\n");
    ConvertArgs args;
    args.edges = tmp.file("raw_edges.csv");
    args.features = tmp.file("raw_features.csv");
    args.labels = tmp.file("raw_labels.csv");
    args.output_dir = tmp.file("c3");
    args.expect_nodes = 5;
    CHECK_THROWS_AS(cmd_convert(args), ValidationError);
    args.expect_nodes = 2;
    args.expect_edges = 1;
    CHECK(cmd_convert(args).at("n_edges") == 1);
  }
}

TEST_CASE("attack command writes its artifacts", "[experiment][attack-cmd][training]") {
  testutil::TempDir tmp;
  const std::string dataset = write_synth_container(tmp, "data", 13);
  ExperimentConfig cfg = tiny_config(dataset, tmp.file("atk"));
  cfg.task = "attack";
  cfg.attack.n_margin_trials = 2;
  cfg.attack.n_eval_trials = 2;
  cfg.attack.n_top = 2;
  cfg.attack.n_bottom = 2;
  cfg.attack.n_random = 2;
  const AttackOutcome outcome = cmd_attack(cfg);
  CHECK(std::filesystem::exists(outcome.csv_path));
  CHECK(std::filesystem::exists(outcome.summary_path));
  CHECK(outcome.summary.at("gcnn").at("no_attack").contains("accuracy"));
  CHECK(outcome.summary.at("config_hash").is_string());
}

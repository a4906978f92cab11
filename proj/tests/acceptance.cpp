// Acceptance suite. Two groups:
//
//   --properties    self-contained numerical checks (run everywhere)
//   --experiments   benchmark experiments on the Cora/Citeseer containers;
//                   each criterion SKIPs loudly when its container is absent
//
// Containers are looked up under $BGCN_DATA_DIR (default ./data) as
// <dir>/cora and <dir>/citeseer. See the README for how to build them with
// `bgcn convert`. Exit code: 1 if any criterion failed, 77 if none failed but
// some were skipped, 0 otherwise.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bgcn/experiment.hpp"
#include "bgcn/synthetic.hpp"

using namespace bgcn;

namespace {

struct Outcome {
  std::string name;
  std::string status;  // PASS | FAIL | SKIP
  std::string detail;
};

std::vector<Outcome> g_outcomes;

void record(const std::string& name, bool pass, const std::string& detail) {
  g_outcomes.push_back({name, pass ? "PASS" : "FAIL", detail});
  std::cout << "[" << g_outcomes.back().status << "] " << name << ": " << detail << "\n"
            << std::flush;
}

void record_skip(const std::string& name, const std::string& why) {
  g_outcomes.push_back({name, "SKIP", why});
  std::cout << "[SKIP] " << name << ": " << why << "\n" << std::flush;
}

// --- shared helpers -----------------------------------------------------------

Graph random_graph(int n, double p, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<NodePair> edges;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (unit(rng) < p) edges.emplace_back(a, b);
  return Graph::from_edges(n, std::move(edges));
}

Eigen::RowVectorXd random_simplex_row(int k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  Eigen::RowVectorXd row(k);
  for (int c = 0; c < k; ++c) row[c] = unit(rng);
  return row / row.sum();
}

ExpandedParams random_params(int n, int k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.2, 3.0);
  ExpandedParams p;
  p.theta.resize(k, 2);
  p.phi.resize(n, k);
  for (int c = 0; c < k; ++c) {
    p.theta(c, 0) = unit(rng);
    p.theta(c, 1) = unit(rng);
  }
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < k; ++c) p.phi(a, c) = unit(rng);
  return p;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(precision);
  out << v;
  return out.str();
}

// --- property criteria (5a-5g) --------------------------------------------------

void criterion_5a_gradcheck() {
  double worst = 0.0;
  for (std::uint64_t seed : {401u, 402u, 403u, 404u, 405u}) {
    auto rng = make_rng(seed);
    const int n = 12 + static_cast<int>(seed % 9);
    const Graph g = random_graph(n, 0.3, seed);
    const PropagationMatrix a = normalize_adjacency(g);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Eigen::Triplet<double>> tr;
    for (int v = 0; v < n; ++v)
      for (int j = 0; j < 5; ++j)
        if (unit(rng) < 0.6) tr.emplace_back(v, j, unit(rng));
    FeatureMatrix x(n, 5);
    x.setFromTriplets(tr.begin(), tr.end());
    LabelSet labels;
    labels.n_classes = 3;
    labels.labels.resize(static_cast<std::size_t>(n));
    labels.roles.assign(static_cast<std::size_t>(n), NodeRole::unlabeled);
    std::uniform_int_distribution<int> cls(0, 2);
    for (int v = 0; v < n; ++v) {
      labels.labels[static_cast<std::size_t>(v)] = cls(rng);
      if (v % 2 == 0) labels.train_mask.push_back(v);
    }
    GcnnWeights w = init_weights(5, 4, 3, rng);
    const DropoutMask mask = make_dropout_mask(x, 4, 0.3, rng);
    const double l2 = 1e-3;
    const ForwardPass fp = forward(w, a, x, Activation::relu, &mask);
    const GcnnGradients grad = backward(w, a, labels, l2, Activation::relu, fp, &mask);

    auto loss_at = [&](const GcnnWeights& wt) {
      return loss(forward(wt, a, x, Activation::relu, &mask).z, labels, wt, l2);
    };
    auto fd_check = [&](Eigen::MatrixXd GcnnWeights::* field, const Eigen::MatrixXd& analytic) {
      Eigen::MatrixXd m = w.*field;
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
          const double orig = m(r, c);
          GcnnWeights wt = w;
          (wt.*field)(r, c) = orig + 1e-4;
          const double up = loss_at(wt);
          (wt.*field)(r, c) = orig - 1e-4;
          const double down = loss_at(wt);
          const double fd = (up - down) / 2e-4;
          const double rel = std::abs(analytic(r, c) - fd) /
                             std::max({std::abs(fd), std::abs(analytic(r, c)), 1e-6});
          worst = std::max(worst, rel);
        }
    };
    fd_check(&GcnnWeights::w0, grad.w0);
    fd_check(&GcnnWeights::w1, grad.w1);
  }
  record("criterion 5a (gcnn backward vs finite differences)", worst < 1e-5,
         "max relative error " + fmt(worst, 10) + " over 5 instances (tolerance 1e-5)");
}

void criterion_5b_edge_loglik() {
  auto rng = make_rng(411);
  std::uniform_int_distribution<int> pick_k(1, 5);
  std::uniform_real_distribution<double> pick_beta(0.01, 0.99);
  std::uniform_real_distribution<double> pick_delta(0.001, 0.2);
  std::bernoulli_distribution pick_y(0.5);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int k = pick_k(rng);
    const Eigen::RowVectorXd pa = random_simplex_row(k, rng);
    const Eigen::RowVectorXd pb = random_simplex_row(k, rng);
    Eigen::VectorXd beta(k);
    for (int c = 0; c < k; ++c) beta[c] = pick_beta(rng);
    const double delta = pick_delta(rng);
    const bool y = pick_y(rng);
    double enumerated = 0.0;
    for (int za = 0; za < k; ++za)
      for (int zb = 0; zb < k; ++zb) {
        const double p_link = (za == zb) ? beta[za] : delta;
        enumerated += pa[za] * pb[zb] * (y ? p_link : 1.0 - p_link);
      }
    worst = std::max(worst, std::abs(edge_loglik(y, pa, pb, beta, delta) - std::log(enumerated)));
  }
  record("criterion 5b (edge_loglik vs z-enumeration)", worst < 1e-12,
         "max |difference| " + fmt(worst, 16) + " over 1000 instances (tolerance 1e-12)");
}

void criterion_5c_param_gradients() {
  auto rng = make_rng(421);
  std::uniform_int_distribution<int> pick_k(1, 5);
  std::uniform_real_distribution<double> pick_delta(0.001, 0.1);
  std::bernoulli_distribution pick_y(0.5);
  MmsbmHyper hyper;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int k = pick_k(rng);
    ExpandedParams p = random_params(4, k, rng);
    hyper.delta = pick_delta(rng);
    const bool y = pick_y(rng);
    const Eigen::MatrixXd g_theta = grad_theta(y, 0, 1, p, hyper);
    const Eigen::RowVectorXd g_phi = grad_phi(y, 0, 1, p, hyper);
    auto loglik_at = [&](const ExpandedParams& q) {
      const BlockParams bp = to_block_params(q);
      return edge_loglik(y, bp.pi.row(0), bp.pi.row(1), bp.beta, hyper.delta);
    };
    auto rel = [](double g, double fd) {
      return std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), 1e-8});
    };
    for (int c = 0; c < k; ++c) {
      for (int j = 0; j < 2; ++j) {
        const double h = 1e-5 * std::max(1.0, std::abs(p.theta(c, j)));
        ExpandedParams q = p;
        q.theta(c, j) = p.theta(c, j) + h;
        const double up = loglik_at(q);
        q.theta(c, j) = p.theta(c, j) - h;
        const double down = loglik_at(q);
        worst = std::max(worst, rel(g_theta(c, j), (up - down) / (2.0 * h)));
      }
      const double h = 1e-5 * std::max(1.0, std::abs(p.phi(0, c)));
      ExpandedParams q = p;
      q.phi(0, c) = p.phi(0, c) + h;
      const double up = loglik_at(q);
      q.phi(0, c) = p.phi(0, c) - h;
      const double down = loglik_at(q);
      worst = std::max(worst, rel(g_phi[c], (up - down) / (2.0 * h)));
    }
  }
  record("criterion 5c (theta/phi gradients vs finite differences)", worst < 1e-6,
         "max relative error " + fmt(worst, 10) + " over 100 instances (tolerance 1e-6)");
}

void criterion_5d_unbiasedness() {
  const Graph g = random_graph(30, 0.25, 431);
  auto rng = make_rng(432);
  const ExpandedParams p = random_params(30, 3, rng);
  MmsbmHyper hyper;
  hyper.delta = 0.01;
  hyper.nonedge_fraction = 0.05;
  hyper.n_minibatch = 10;
  const int reps = 2000;
  bool pass = true;
  std::string detail;

  {
    const Eigen::MatrixXd full = theta_gradient_full(p, g, hyper);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(3, 2), sumsq = Eigen::MatrixXd::Zero(3, 2);
    for (int r = 0; r < reps; ++r) {
      auto draw = make_rng(derive_seed(433, {static_cast<std::uint64_t>(r)}));
      const Eigen::MatrixXd s = theta_gradient_stochastic(p, g, hyper, draw);
      sum += s;
      sumsq += s.cwiseProduct(s);
    }
    double worst_sigma = 0.0;
    for (int c = 0; c < 3; ++c)
      for (int j = 0; j < 2; ++j) {
        const double m = sum(c, j) / reps;
        const double var = (sumsq(c, j) / reps - m * m) * reps / (reps - 1.0);
        const double se = std::sqrt(std::max(var, 1e-30) / reps);
        worst_sigma = std::max(worst_sigma, std::abs(m - full(c, j)) / se);
      }
    pass = pass && worst_sigma <= 3.0;
    detail += "theta max |z| = " + fmt(worst_sigma, 2);
  }
  {
    const BlockParams bp = to_block_params(p);
    const int node = 4;
    const Eigen::RowVectorXd full = phi_gradient_full_row(p, bp, g, node, hyper);
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(3), sumsq = Eigen::RowVectorXd::Zero(3);
    for (int r = 0; r < reps; ++r) {
      auto draw = make_rng(derive_seed(434, {static_cast<std::uint64_t>(r)}));
      const Eigen::RowVectorXd s = phi_gradient_stochastic_row(p, bp, g, node, hyper, draw);
      sum += s;
      sumsq += s.cwiseProduct(s);
    }
    double worst_sigma = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double m = sum[c] / reps;
      const double var = (sumsq[c] / reps - m * m) * reps / (reps - 1.0);
      const double se = std::sqrt(std::max(var, 1e-30) / reps);
      worst_sigma = std::max(worst_sigma, std::abs(m - full[c]) / se);
    }
    pass = pass && worst_sigma <= 3.0;
    detail += ", phi max |z| = " + fmt(worst_sigma, 2);
  }
  record("criterion 5d (stochastic update unbiasedness)", pass,
         detail + " over 2000 mini-batch draws (threshold 3 standard errors)");
}

void criterion_5e_sampler_frequencies() {
  const int n = 20;
  auto rng = make_rng(441);
  BlockParams bp;
  bp.pi.resize(n, 3);
  for (int a = 0; a < n; ++a) bp.pi.row(a) = random_simplex_row(3, rng);
  bp.beta.resize(3);
  std::uniform_real_distribution<double> strength(0.1, 0.6);
  for (int c = 0; c < 3; ++c) bp.beta[c] = strength(rng);
  const double delta = 0.02;
  const int reps = 5000;

  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n, n);
  for (int r = 0; r < reps; ++r) {
    const SampledGraph s =
        sample_graph(bp, delta, derive_seed(442, {static_cast<std::uint64_t>(r)}));
    for (const auto& [a, b] : s.graph.edges()) counts(a, b) += 1.0;
  }
  int violations = 0;
  double worst_sigma = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      const double p = edge_probability(bp.pi.row(a), bp.pi.row(b), bp.beta, delta);
      const double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) / reps);
      const double sigma = std::abs(counts(a, b) / reps - p) / se;
      worst_sigma = std::max(worst_sigma, sigma);
      if (sigma > 4.0) ++violations;
    }
  record("criterion 5e (sample_graph pair frequencies)", violations == 0,
         "max |z| = " + fmt(worst_sigma, 2) + " over 190 pairs x 5000 draws (threshold 4 SE)");
}

void criterion_5f_planted_recovery() {
  const int n = 100;
  std::vector<int> classes(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) classes[static_cast<std::size_t>(a)] = a < n / 2 ? 0 : 1;
  const Graph g = generate_sbm(n, 2, hard_memberships(classes, 2),
                               Eigen::VectorXd::Constant(2, 0.2), 0.005, 451);
  MmsbmHyper hyper;
  hyper.delta = 0.005;
  hyper.nonedge_fraction = 0.1;
  hyper.n_minibatch = 500;
  BlockParams init;
  auto rng = make_rng(452);
  init.pi.resize(n, 2);
  for (int a = 0; a < n; ++a) init.pi.row(a) = random_simplex_row(2, rng);
  init.beta = Eigen::VectorXd::Constant(2, 0.1);

  const ExpandedParams fitted = map_inference(g, init, 600, hyper, 453);
  const BlockParams bp = to_block_params(fitted);
  int agree = 0;
  for (int a = 0; a < n; ++a) {
    const int hard = bp.pi(a, 0) >= bp.pi(a, 1) ? 0 : 1;
    if (hard == classes[static_cast<std::size_t>(a)]) ++agree;
  }
  const int matched = std::max(agree, n - agree);
  record("criterion 5f (planted 2-block recovery)", matched >= 95,
         std::to_string(matched) + "/100 nodes recovered (threshold 95)");
}

void criterion_5g_determinism(const std::filesystem::path& scratch) {
  SyntheticSpec spec;
  spec.n_nodes = 80;
  spec.n_classes = 2;
  spec.intra_strength = 0.2;
  spec.cross_probability = 0.02;
  spec.feature_dim = 24;
  spec.features_per_node = 4;
  spec.train_pool_per_class = 8;
  spec.seed = 31;
  const std::string data_dir = (scratch / "synth_data").string();
  save_container(make_synthetic_dataset(spec), data_dir);

  ExperimentConfig cfg;
  cfg.dataset = data_dir;
  cfg.task = "train_bayesian";
  cfg.split.per_class = 5;
  cfg.repetitions = 2;
  cfg.gcnn.hidden_units = 8;
  cfg.gcnn.epochs = 25;
  cfg.mmsbm.delta = 0.02;
  cfg.mmsbm.n_minibatch = 80;
  cfg.mmsbm.nonedge_fraction = 0.1;
  cfg.ensemble.n_graphs = 2;
  cfg.ensemble.n_dropout_samples = 2;
  cfg.ensemble.n_mmsbm_iters = 10;
  cfg.n_workers = 2;
  cfg.master_seed = 12345;
  cfg.output_dir = (scratch / "determinism_run").string();

  auto run_bytes = [&] {
    cmd_train(cfg);
    std::ifstream in(cfg.output_dir + "/summary.json");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  const std::string first = run_bytes();
  const std::string second = run_bytes();
  record("criterion 5g (end-to-end determinism)", !first.empty() && first == second,
         first == second ? "two cmd_train runs produced bit-identical summary.json"
                         : "summary.json differed between runs");
}

// Supplemental, not a numbered criterion: the whole pipeline on an easy
// planted dataset must learn something sensible end to end.
void supplemental_synthetic_pipeline(const std::filesystem::path& scratch) {
  SyntheticSpec spec;
  spec.n_nodes = 150;
  spec.n_classes = 3;
  spec.intra_strength = 0.15;
  spec.cross_probability = 0.01;
  spec.feature_dim = 45;
  spec.features_per_node = 5;
  spec.feature_noise = 0.3;
  spec.train_pool_per_class = 10;
  spec.seed = 61;
  const std::string data_dir = (scratch / "synth_pipeline").string();
  save_container(make_synthetic_dataset(spec), data_dir);

  ExperimentConfig cfg;
  cfg.dataset = data_dir;
  cfg.task = "train_bayesian";
  cfg.split.per_class = 5;
  cfg.repetitions = 2;
  cfg.gcnn.hidden_units = 12;
  cfg.gcnn.epochs = 80;
  cfg.mmsbm.delta = 0.01;
  cfg.mmsbm.n_minibatch = 150;
  cfg.mmsbm.nonedge_fraction = 0.05;
  cfg.ensemble.n_graphs = 3;
  cfg.ensemble.n_dropout_samples = 3;
  cfg.ensemble.n_mmsbm_iters = 50;
  cfg.n_workers = 2;
  cfg.master_seed = 62;
  cfg.output_dir = (scratch / "synth_pipeline_run").string();
  const TrainOutcome outcome = cmd_train(cfg);
  const double acc = outcome.summary.at("metrics").at("accuracy").at("mean").get<double>();
  record("supplemental (bayesian pipeline on planted data)", acc > 0.7,
         "mean accuracy " + fmt(acc) + " on a planted 3-community dataset (threshold 0.70)");
}

// Supplemental, not a numbered criterion: under random node attacks the
// ensemble retains more classification margin than the plain network. The
// accuracy gap depends on the graph regime, but the margin ordering held in
// every regime tried; it is asserted on a frozen seed.
void supplemental_attack_margin(const std::filesystem::path& scratch) {
  SyntheticSpec spec;
  spec.n_nodes = 500;
  spec.n_classes = 4;
  spec.feature_dim = 80;
  spec.intra_strength = 0.06;
  spec.cross_probability = 0.01;
  spec.train_pool_per_class = 15;
  spec.seed = 21;
  const std::string data_dir = (scratch / "synth_attack").string();
  save_container(make_synthetic_dataset(spec), data_dir);

  ExperimentConfig cfg;
  cfg.dataset = data_dir;
  cfg.task = "attack";
  cfg.split.per_class = 10;
  cfg.gcnn.epochs = 80;
  cfg.attack.n_margin_trials = 2;
  cfg.attack.n_eval_trials = 2;
  cfg.ensemble.n_graphs = 2;
  cfg.ensemble.n_dropout_samples = 3;
  cfg.ensemble.n_mmsbm_iters = 40;
  cfg.n_workers = 2;
  cfg.master_seed = 77;
  cfg.output_dir = (scratch / "synth_attack_run").string();
  const AttackOutcome outcome = cmd_attack(cfg);
  const double gcnn_margin = outcome.report.gcnn.attacked_margin;
  const double bayes_margin = outcome.report.bayesian.attacked_margin;
  record("supplemental (attack margin retention on planted data)", bayes_margin > gcnn_margin,
         "post-attack mean margin " + fmt(bayes_margin, 3) + " (ensemble) vs " +
             fmt(gcnn_margin, 3) + " (plain)");
}

// --- experiment criteria (1-4) ---------------------------------------------------

std::string dataset_root() {
  if (const char* env = std::getenv("BGCN_DATA_DIR")) return env;
  return "data";
}

bool container_present(const std::string& name, std::string& path_out) {
  const std::filesystem::path p = std::filesystem::path(dataset_root()) / name;
  path_out = p.string();
  return std::filesystem::exists(p / "manifest.json");
}

ExperimentConfig paper_config(const std::string& dataset) {
  ExperimentConfig cfg;
  cfg.dataset = dataset;
  cfg.n_workers = 2;
  cfg.master_seed = 1;
  return cfg;
}

void criterion_1_gcnn_cora(const std::filesystem::path& scratch) {
  std::string path;
  if (!container_present("cora", path)) {
    record_skip("criterion 1 (gcnn on cora, 20 labels/class)",
                "container not found at " + path + " (see README: datasets are not bundled)");
    return;
  }
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset ds = load_dataset(path);
  const bool counts_ok = ds.graph.n_nodes() == 2708 && ds.graph.n_edges() == 5429 &&
                         ds.features.cols() == 1433 && ds.labels.n_classes == 7;

  ExperimentConfig cfg = paper_config(path);
  cfg.task = "train_gcnn";
  cfg.split.per_class = 20;
  cfg.repetitions = 10;
  cfg.output_dir = (scratch / "criterion1").string();
  const TrainOutcome outcome = cmd_train(cfg);
  const double acc = 100.0 * outcome.summary.at("metrics").at("accuracy").at("mean").get<double>();
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  const bool pass = counts_ok && acc >= 79.5 && acc <= 83.5 && minutes < 5.0;
  record("criterion 1 (gcnn on cora, 20 labels/class)", pass,
         "mean accuracy " + fmt(acc, 2) + "% (window [79.5, 83.5]), counts " +
             (counts_ok ? "ok" : "WRONG") + ", " + fmt(minutes, 1) + " min (limit 5)");
}

void criterion_2_bayesian_citeseer(const std::filesystem::path& scratch) {
  std::string path;
  if (!container_present("citeseer", path)) {
    record_skip("criterion 2 (bayesian on citeseer, 10 labels/class)",
                "container not found at " + path + " (see README: datasets are not bundled)");
    return;
  }
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset ds = load_dataset(path);
  const bool counts_ok = ds.graph.n_nodes() == 3327 && ds.graph.n_edges() == 4732 &&
                         ds.labels.n_classes == 6;

  ExperimentConfig cfg = paper_config(path);
  cfg.task = "train_bayesian";
  cfg.split.per_class = 10;
  cfg.repetitions = 5;
  cfg.ensemble.n_graphs = 10;
  cfg.ensemble.n_dropout_samples = 5;
  cfg.ensemble.n_mmsbm_iters = 200;
  cfg.output_dir = (scratch / "criterion2").string();
  const TrainOutcome outcome = cmd_train(cfg);
  const double acc = 100.0 * outcome.summary.at("metrics").at("accuracy").at("mean").get<double>();
  const double base =
      100.0 * outcome.summary.at("metrics").at("baseline_accuracy").at("mean").get<double>();
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  const bool pass = counts_ok && acc >= 68.8 && acc <= 72.8 && acc > base && minutes < 60.0;
  record("criterion 2 (bayesian on citeseer, 10 labels/class)", pass,
         "mean accuracy " + fmt(acc, 2) + "% (window [68.8, 72.8]) vs paired gcnn " +
             fmt(base, 2) + "%, counts " + (counts_ok ? "ok" : "WRONG") + ", " + fmt(minutes, 1) +
             " min (limit 60)");
}

void criterion_3_bayesian_cora5(const std::filesystem::path& scratch) {
  std::string path;
  if (!container_present("cora", path)) {
    record_skip("criterion 3 (bayesian on cora, 5 labels/class)",
                "container not found at " + path + " (see README: datasets are not bundled)");
    return;
  }
  ExperimentConfig cfg = paper_config(path);
  cfg.task = "train_bayesian";
  cfg.split.per_class = 5;
  cfg.repetitions = 10;
  cfg.ensemble.n_graphs = 10;
  cfg.ensemble.n_dropout_samples = 5;
  cfg.ensemble.n_mmsbm_iters = 200;
  cfg.output_dir = (scratch / "criterion3").string();
  const TrainOutcome outcome = cmd_train(cfg);
  const auto& metrics = outcome.summary.at("metrics");
  const double acc = 100.0 * metrics.at("accuracy").at("mean").get<double>();
  const auto bayes = metrics.at("accuracy").at("values").get<std::vector<double>>();
  const auto base = metrics.at("baseline_accuracy").at("values").get<std::vector<double>>();

  // One-sided sign test on paired repetitions: p = P(Binomial(n, 1/2) >= wins).
  int wins = 0, ties = 0;
  for (std::size_t i = 0; i < bayes.size(); ++i) {
    if (bayes[i] > base[i])
      ++wins;
    else if (bayes[i] == base[i])
      ++ties;
  }
  const int n_eff = static_cast<int>(bayes.size()) - ties;
  double p_value = 0.0;
  for (int k = wins; k <= n_eff; ++k) {
    double log_term = std::lgamma(n_eff + 1.0) - std::lgamma(k + 1.0) -
                      std::lgamma(n_eff - k + 1.0) - n_eff * std::log(2.0);
    p_value += std::exp(log_term);
  }
  const bool pass = acc >= 73.0 && acc <= 77.5 && p_value < 0.1;
  record("criterion 3 (bayesian on cora, 5 labels/class)", pass,
         "mean accuracy " + fmt(acc, 2) + "% (window [73.0, 77.5]); sign test: " +
             std::to_string(wins) + "/" + std::to_string(n_eff) + " wins, p = " + fmt(p_value, 3) +
             " (need < 0.1)");
}

void criterion_4_attack_cora(const std::filesystem::path& scratch) {
  std::string path;
  if (!container_present("cora", path)) {
    record_skip("criterion 4 (random node attack on cora)",
                "container not found at " + path + " (see README: datasets are not bundled)");
    return;
  }
  ExperimentConfig cfg = paper_config(path);
  cfg.task = "attack";
  cfg.split.per_class = 20;
  cfg.output_dir = (scratch / "criterion4").string();
  // 40 targets x 5 trials, poisoning-style retraining per cell. The ensemble
  // size per cell is dialed down to keep 400+ full retrainings tractable on
  // a CPU; raise it through the config for a larger machine.
  cfg.attack.n_margin_trials = 10;
  cfg.attack.n_eval_trials = 5;
  cfg.gcnn.epochs = 150;
  cfg.ensemble.n_graphs = 3;
  cfg.ensemble.n_dropout_samples = 5;
  cfg.ensemble.n_mmsbm_iters = 100;
  const AttackOutcome outcome = cmd_attack(cfg);
  const double gcnn_acc = 100.0 * outcome.report.gcnn.attacked_accuracy;
  const double bayes_acc = 100.0 * outcome.report.bayesian.attacked_accuracy;
  const double gcnn_margin = outcome.report.gcnn.attacked_margin;
  const double bayes_margin = outcome.report.bayesian.attacked_margin;
  const bool pass = (bayes_acc - gcnn_acc >= 5.0) && (bayes_margin > gcnn_margin);
  record("criterion 4 (random node attack on cora)", pass,
         "post-attack accuracy bayesian " + fmt(bayes_acc, 2) + "% vs gcnn " + fmt(gcnn_acc, 2) +
             "% (need >= 5pp gap); post-attack margin " + fmt(bayes_margin, 3) + " vs " +
             fmt(gcnn_margin, 3));
}

}  // namespace

int main(int argc, char** argv) {
  bool run_properties = false, run_experiments = false;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--properties") run_properties = true;
    if (arg == "--experiments") run_experiments = true;
  }
  if (!run_properties && !run_experiments) run_properties = run_experiments = true;

  std::filesystem::path scratch =
      std::filesystem::temp_directory_path() / ("bgcn_acceptance_" + std::to_string(::getpid()));
  std::filesystem::create_directories(scratch);

  try {
    if (run_properties) {
      criterion_5a_gradcheck();
      criterion_5b_edge_loglik();
      criterion_5c_param_gradients();
      criterion_5d_unbiasedness();
      criterion_5e_sampler_frequencies();
      criterion_5f_planted_recovery();
      criterion_5g_determinism(scratch);
      supplemental_synthetic_pipeline(scratch);
      supplemental_attack_margin(scratch);
    }
    if (run_experiments) {
      criterion_1_gcnn_cora(scratch);
      criterion_2_bayesian_citeseer(scratch);
      criterion_3_bayesian_cora5(scratch);
      criterion_4_attack_cora(scratch);
    }
  } catch (const std::exception& e) {
    std::cout << "[FAIL] suite aborted: " << e.what() << "\n";
    g_outcomes.push_back({"suite", "FAIL", e.what()});
  }

  std::error_code ec;
  std::filesystem::remove_all(scratch, ec);

  int failed = 0, skipped = 0, passed = 0;
  for (const auto& o : g_outcomes) {
    if (o.status == "FAIL") ++failed;
    if (o.status == "SKIP") ++skipped;
    if (o.status == "PASS") ++passed;
  }
  std::cout << "acceptance: " << passed << " passed, " << failed << " failed, " << skipped
            << " skipped\n";
  if (failed > 0) return 1;
  if (skipped > 0) return 77;
  return 0;
}

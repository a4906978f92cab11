#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bgcn/graph.hpp"
#include "bgcn/random.hpp"

namespace bgcn {

enum class Activation { relu, tanh, linear };
enum class Optimizer { adam, sgd };

struct GcnnConfig {
  int hidden_units = 16;
  double learning_rate = 0.01;
  double l2_coeff = 5e-4;      // applied to the first-layer weights only
  double dropout_rate = 0.5;   // in [0, 1), shared by both layers
  int epochs = 200;
  Activation activation = Activation::relu;
  Optimizer optimizer = Optimizer::adam;
  std::uint64_t seed = 0;
};

struct GcnnWeights {
  Eigen::MatrixXd w0;  // feature_dim x hidden
  Eigen::MatrixXd w1;  // hidden x n_classes
};

// Inverted dropout masks: entries are 0 or 1/(1-rate), so inference needs no
// rescaling. The input mask covers the stored nonzeros of the feature matrix
// (zeros are unaffected by dropout); the hidden mask is dense.
struct DropoutMask {
  Eigen::VectorXd input;   // one entry per stored nonzero of X
  Eigen::MatrixXd hidden;  // n_nodes x hidden
};

inline DropoutMask make_dropout_mask(const FeatureMatrix& x, int hidden_units, double rate,
                                     std::mt19937_64& rng) {
  if (rate < 0.0 || rate >= 1.0)
    throw std::invalid_argument("dropout rate must be in [0,1)");
  const double keep_scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DropoutMask mask;
  mask.input.resize(x.nonZeros());
  for (Eigen::Index i = 0; i < x.nonZeros(); ++i)
    mask.input[i] = (unit(rng) < rate) ? 0.0 : keep_scale;
  mask.hidden.resize(x.rows(), hidden_units);
  for (Eigen::Index r = 0; r < mask.hidden.rows(); ++r)
    for (Eigen::Index c = 0; c < mask.hidden.cols(); ++c)
      mask.hidden(r, c) = (unit(rng) < rate) ? 0.0 : keep_scale;
  return mask;
}

namespace detail {

inline void apply_activation(Activation act, Eigen::MatrixXd& m) {
  switch (act) {
    case Activation::relu:
      m = m.cwiseMax(0.0);
      break;
    case Activation::tanh:
      m = m.array().tanh().matrix();
      break;
    case Activation::linear:
      break;
  }
}

// Derivative of the activation given pre-activation and activation values.
inline Eigen::MatrixXd activation_grad(Activation act, const Eigen::MatrixXd& pre,
                                       const Eigen::MatrixXd& post) {
  switch (act) {
    case Activation::relu:
      return (pre.array() > 0.0).cast<double>().matrix();
    case Activation::tanh:
      return (1.0 - post.array().square()).matrix();
    case Activation::linear:
      return Eigen::MatrixXd::Ones(pre.rows(), pre.cols());
  }
  return Eigen::MatrixXd::Ones(pre.rows(), pre.cols());
}

inline Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd z(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    Eigen::RowVectorXd e = (logits.row(r).array() - m).exp();
    z.row(r) = e / e.sum();
  }
  return z;
}

inline FeatureMatrix apply_input_mask(const FeatureMatrix& x, const Eigen::VectorXd& mask) {
  FeatureMatrix xd = x;
  double* values = xd.valuePtr();
  for (Eigen::Index i = 0; i < xd.nonZeros(); ++i) values[i] *= mask[i];
  return xd;
}

}  // namespace detail

// Full forward state; the backward pass reuses the cached intermediates.
struct ForwardPass {
  FeatureMatrix x_dropped;      // X with the input mask applied
  Eigen::MatrixXd pre1;         // A (X o m_in) W0
  Eigen::MatrixXd h1;           // activation(pre1)
  Eigen::MatrixXd h1_dropped;   // h1 o m_hid
  Eigen::MatrixXd logits;       // A h1_dropped W1
  Eigen::MatrixXd z;            // row-softmax(logits)
};

// masks == nullptr gives the deterministic inference pass.
inline ForwardPass forward(const GcnnWeights& w, const PropagationMatrix& a,
                           const FeatureMatrix& x, Activation act,
                           const DropoutMask* masks = nullptr) {
  if (x.cols() != w.w0.rows())
    throw std::invalid_argument("forward: feature dim " + std::to_string(x.cols()) +
                                " does not match W0 rows " + std::to_string(w.w0.rows()));
  if (w.w0.cols() != w.w1.rows())
    throw std::invalid_argument("forward: W0 cols do not match W1 rows");
  if (a.rows() != x.rows())
    throw std::invalid_argument("forward: propagation matrix size does not match node count");
  ForwardPass fp;
  fp.x_dropped = masks ? detail::apply_input_mask(x, masks->input) : x;
  fp.pre1 = a * (fp.x_dropped * w.w0);
  fp.h1 = fp.pre1;
  detail::apply_activation(act, fp.h1);
  fp.h1_dropped = masks ? fp.h1.cwiseProduct(masks->hidden) : fp.h1;
  fp.logits = a * (fp.h1_dropped * w.w1);
  fp.z = detail::softmax_rows(fp.logits);
  return fp;
}

// Mean cross-entropy over the train mask plus (l2/2) ||W0||_F^2.
inline double loss(const Eigen::MatrixXd& z, const LabelSet& labels, const GcnnWeights& w,
                   double l2) {
  if (labels.train_mask.empty()) throw std::invalid_argument("loss: empty train mask");
  double ce = 0.0;
  for (int a : labels.train_mask) {
    const double p = std::max(z(a, labels.label(a)), 1e-12);
    ce -= std::log(p);
  }
  ce /= static_cast<double>(labels.train_mask.size());
  return ce + 0.5 * l2 * w.w0.squaredNorm();
}

struct GcnnGradients {
  Eigen::MatrixXd w0;
  Eigen::MatrixXd w1;
};

// Exact gradients of loss() for the forward pass in `fp` (masks fixed).
inline GcnnGradients backward(const GcnnWeights& w, const PropagationMatrix& a,
                              const LabelSet& labels, double l2, Activation act,
                              const ForwardPass& fp, const DropoutMask* masks = nullptr) {
  if (labels.train_mask.empty()) throw std::invalid_argument("backward: empty train mask");
  const auto n_train = static_cast<double>(labels.train_mask.size());
  Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(fp.z.rows(), fp.z.cols());
  for (int i : labels.train_mask) {
    dlogits.row(i) = fp.z.row(i) / n_train;
    dlogits(i, labels.label(i)) -= 1.0 / n_train;
  }
  // A is symmetric, so A^T dlogits == A dlogits.
  const Eigen::MatrixXd back2 = a * dlogits;
  GcnnGradients g;
  g.w1 = fp.h1_dropped.transpose() * back2;
  Eigen::MatrixXd dh1 = back2 * w.w1.transpose();
  if (masks) dh1 = dh1.cwiseProduct(masks->hidden);
  const Eigen::MatrixXd dpre1 = dh1.cwiseProduct(detail::activation_grad(act, fp.pre1, fp.h1));
  const Eigen::MatrixXd back1 = a * dpre1;
  g.w0 = fp.x_dropped.transpose() * back1 + l2 * w.w0;
  return g;
}

// Glorot-style uniform init, fan-based range, seed-controlled.
inline GcnnWeights init_weights(int in_dim, int hidden, int out_dim, std::mt19937_64& rng) {
  auto glorot = [&rng](int rows, int cols) {
    const double limit = std::sqrt(6.0 / (rows + cols));
    std::uniform_real_distribution<double> u(-limit, limit);
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = u(rng);
    return m;
  };
  return GcnnWeights{glorot(in_dim, hidden), glorot(hidden, out_dim)};
}

// Trains for cfg.epochs steps with a fresh dropout mask per step.
// `init` warm-starts the weights when provided. Throws if the loss goes
// non-finite, naming the epoch.
inline GcnnWeights train(const PropagationMatrix& a, const FeatureMatrix& x,
                         const LabelSet& labels, const GcnnConfig& cfg,
                         const GcnnWeights* init = nullptr) {
  if (cfg.learning_rate <= 0.0) throw std::invalid_argument("train: learning rate must be positive");
  auto rng = make_rng(cfg.seed);
  GcnnWeights w = init ? *init
                       : init_weights(static_cast<int>(x.cols()), cfg.hidden_units,
                                      labels.n_classes, rng);

  Eigen::MatrixXd m0 = Eigen::MatrixXd::Zero(w.w0.rows(), w.w0.cols());
  Eigen::MatrixXd v0 = m0, m1 = Eigen::MatrixXd::Zero(w.w1.rows(), w.w1.cols()), v1 = m1;
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const DropoutMask mask = make_dropout_mask(x, cfg.hidden_units, cfg.dropout_rate, rng);
    const ForwardPass fp = forward(w, a, x, cfg.activation, &mask);
    const double l = loss(fp.z, labels, w, cfg.l2_coeff);
    if (!std::isfinite(l))
      throw std::runtime_error("gcnn training diverged at epoch " + std::to_string(epoch) +
                               ": loss is not finite");
    const GcnnGradients g = backward(w, a, labels, cfg.l2_coeff, cfg.activation, fp, &mask);

    if (cfg.optimizer == Optimizer::sgd) {
      w.w0 -= cfg.learning_rate * g.w0;
      w.w1 -= cfg.learning_rate * g.w1;
    } else {
      const double t = epoch + 1;
      const double corr = std::sqrt(1.0 - std::pow(kBeta2, t)) / (1.0 - std::pow(kBeta1, t));
      auto adam_step = [&](Eigen::MatrixXd& wm, Eigen::MatrixXd& mm, Eigen::MatrixXd& vm,
                           const Eigen::MatrixXd& grad) {
        mm = kBeta1 * mm + (1.0 - kBeta1) * grad;
        vm = kBeta2 * vm + (1.0 - kBeta2) * grad.cwiseProduct(grad);
        wm.array() -= cfg.learning_rate * corr * mm.array() / (vm.array().sqrt() + kEps);
      };
      adam_step(w.w0, m0, v0, g.w0);
      adam_step(w.w1, m1, v1, g.w1);
    }
  }
  if (!w.w0.allFinite() || !w.w1.allFinite())
    throw std::runtime_error("gcnn training diverged at epoch " + std::to_string(cfg.epochs) +
                             ": weights are not finite");
  return w;
}

inline GcnnWeights train(const Graph& g, const FeatureMatrix& x, const LabelSet& labels,
                         const GcnnConfig& cfg, const GcnnWeights* init = nullptr) {
  return train(normalize_adjacency(g), x, labels, cfg, init);
}

// S stochastic forward passes with independent dropout masks at inference
// time; the spread across samples approximates the predictive uncertainty.
inline std::vector<Eigen::MatrixXd> mc_dropout_predict(const GcnnWeights& w,
                                                       const PropagationMatrix& a,
                                                       const FeatureMatrix& x,
                                                       const GcnnConfig& cfg, int s,
                                                       std::uint64_t seed) {
  if (s < 1) throw std::invalid_argument("mc_dropout_predict: need at least one sample");
  auto rng = make_rng(seed);
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(s));
  for (int i = 0; i < s; ++i) {
    const DropoutMask mask = make_dropout_mask(x, cfg.hidden_units, cfg.dropout_rate, rng);
    out.push_back(forward(w, a, x, cfg.activation, &mask).z);
  }
  return out;
}

// --- weight checkpoints (versioned JSON, row-major data) -------------------

namespace detail {

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw std::runtime_error("weight checkpoint: data length does not match shape");
  Eigen::MatrixXd m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[i++];
  return m;
}

}  // namespace detail

inline void save_weights(const GcnnWeights& w, const std::string& path) {
  nlohmann::json j = {{"format", "bgcn-weights"},
                      {"version", 1},
                      {"w0", detail::matrix_to_json(w.w0)},
                      {"w1", detail::matrix_to_json(w.w1)}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

inline GcnnWeights load_weights(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "bgcn-weights" || j.value("version", 0) != 1)
    throw std::runtime_error(path + ": not a version-1 weight checkpoint");
  return GcnnWeights{detail::matrix_from_json(j.at("w0")), detail::matrix_from_json(j.at("w1"))};
}

}  // namespace bgcn

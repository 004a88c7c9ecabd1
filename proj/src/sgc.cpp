#include "vsgraph/sgc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "vsgraph/io.hpp"
#include "vsgraph/parallel.hpp"

namespace vsgraph {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (weight_decay < 0.0) throw ArgumentError("weight decay must be nonnegative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ArgumentError("adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ArgumentError("adam epsilon must be positive");
}

DenseMatrix smooth_features(const PropagationOperator& op, const DenseMatrix& features,
                            std::size_t layers) {
  if (layers < 1) throw ArgumentError("layer count must be >= 1");
  DenseMatrix h = propagate(op, features);
  for (std::size_t l = 1; l < layers; ++l) h = propagate(op, h);
  return h;
}

namespace {

// Anchors in (sample, label) order: fixed summation order for the loss and
// gradient regardless of how the set was assembled.
std::vector<Anchor> sorted_members(const AnchorSet& anchors) {
  std::vector<Anchor> m = anchors.members;
  std::sort(m.begin(), m.end(), [](const Anchor& a, const Anchor& b) {
    if (a.sample != b.sample) return a.sample < b.sample;
    return a.label < b.label;
  });
  return m;
}

void check_anchors(const std::vector<Anchor>& members, std::size_t rows,
                   std::size_t class_count) {
  if (members.empty()) throw ArgumentError("anchor set is empty");
  for (const auto& a : members) {
    if (a.sample >= rows)
      throw ShapeError("anchor sample " + std::to_string(a.sample) + " outside " +
                       std::to_string(rows) + " rows");
    if (a.label < 0 || static_cast<std::size_t>(a.label) >= class_count)
      throw ShapeError("anchor label " + std::to_string(a.label) + " outside " +
                       std::to_string(class_count) + " classes");
  }
}

// log softmax probabilities of one row, max-shifted.
void row_log_softmax(const double* logits, std::size_t n, double* out) {
  double mx = logits[0];
  for (std::size_t c = 1; c < n; ++c) mx = std::max(mx, logits[c]);
  double sum = 0.0;
  for (std::size_t c = 0; c < n; ++c) sum += std::exp(logits[c] - mx);
  const double lse = mx + std::log(sum);
  for (std::size_t c = 0; c < n; ++c) out[c] = logits[c] - lse;
}

}  // namespace

std::pair<double, DenseMatrix> anchor_loss_grad(const DenseMatrix& smoothed,
                                                const AnchorSet& anchors,
                                                std::size_t class_count,
                                                const DenseMatrix& theta,
                                                double weight_decay) {
  const std::size_t d = smoothed.cols();
  if (theta.rows() != d || theta.cols() != class_count)
    throw ShapeError("theta is " + std::to_string(theta.rows()) + "x" +
                     std::to_string(theta.cols()) + ", expected " + std::to_string(d) + "x" +
                     std::to_string(class_count));
  const std::vector<Anchor> members = sorted_members(anchors);
  check_anchors(members, smoothed.rows(), class_count);

  DenseMatrix grad(d, class_count);
  std::vector<double> logits(class_count), logp(class_count);
  double loss = 0.0;
  for (const auto& a : members) {
    const double* x = smoothed.data().data() + a.sample * d;
    for (std::size_t c = 0; c < class_count; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += x[j] * theta(j, c);
      logits[c] = s;
    }
    row_log_softmax(logits.data(), class_count, logp.data());
    loss -= logp[static_cast<std::size_t>(a.label)];
    // d loss / d theta += x^T (p - y)
    for (std::size_t c = 0; c < class_count; ++c) {
      const double delta =
          std::exp(logp[c]) - (c == static_cast<std::size_t>(a.label) ? 1.0 : 0.0);
      for (std::size_t j = 0; j < d; ++j) grad(j, c) += x[j] * delta;
    }
  }
  if (weight_decay != 0.0)
    for (std::size_t i = 0; i < grad.size(); ++i)
      grad.data()[i] += weight_decay * theta.data()[i];
  return {loss, std::move(grad)};
}

SgcModel train(const DenseMatrix& smoothed, const AnchorSet& anchors,
               std::size_t class_count, const TrainConfig& config,
               std::vector<double>* loss_history) {
  config.validate();
  const std::size_t d = smoothed.cols();
  DenseMatrix theta(d, class_count);  // zero init: the objective is convex
  std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0);

  double beta1_t = 1.0, beta2_t = 1.0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    auto [loss, grad] = anchor_loss_grad(smoothed, anchors, class_count, theta,
                                         config.weight_decay);
    if (!std::isfinite(loss))
      throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch));
    if (loss_history) loss_history->push_back(loss);

    beta1_t *= config.beta1;
    beta2_t *= config.beta2;
    const double* g = grad.data().data();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double m_hat = m[i] / (1.0 - beta1_t);
      const double v_hat = v[i] / (1.0 - beta2_t);
      theta.data()[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }

  SgcModel model;
  model.layers = 1;
  model.final_loss =
      anchor_loss_grad(smoothed, anchors, class_count, theta, config.weight_decay).first;
  model.weights = std::move(theta);
  return model;
}

DenseMatrix infer(const SgcModel& model, const DenseMatrix& smoothed) {
  const std::size_t d = smoothed.cols();
  const std::size_t classes = model.weights.cols();
  if (model.weights.rows() != d)
    throw ShapeError("model expects " + std::to_string(model.weights.rows()) +
                     " feature dims, got " + std::to_string(d));
  DenseMatrix out(smoothed.rows(), classes);
  parallel_for(0, smoothed.rows(), [&](std::size_t i) {
    const double* x = smoothed.data().data() + i * d;
    std::vector<double> logits(classes), logp(classes);
    for (std::size_t c = 0; c < classes; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += x[j] * model.weights(j, c);
      logits[c] = s;
    }
    row_log_softmax(logits.data(), classes, logp.data());
    for (std::size_t c = 0; c < classes; ++c) out(i, c) = std::exp(logp[c]);
  });
  return out;
}

void save_model(const SgcModel& model, const TrainConfig& config, double self_weight,
                const std::filesystem::path& json_path) {
  std::filesystem::path weights_path = json_path;
  weights_path.replace_extension(".vsgm");
  save_matrix(model.weights, weights_path);

  nlohmann::json j;
  j["layers"] = model.layers;
  j["final_loss"] = model.final_loss;
  j["self_weight"] = self_weight;
  j["weights"] = weights_path.filename().string();
  j["config"] = {{"learning_rate", config.learning_rate},
                 {"epochs", config.epochs},
                 {"weight_decay", config.weight_decay},
                 {"beta1", config.beta1},
                 {"beta2", config.beta2},
                 {"epsilon", config.epsilon},
                 {"seed", config.seed}};
  std::ofstream out(json_path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + json_path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + json_path.string());
}

SgcModel load_model(const std::filesystem::path& json_path, TrainConfig* config,
                    double* self_weight) {
  std::ifstream in(json_path);
  if (!in) throw IoError("cannot open: " + json_path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("model sidecar is not valid JSON: " + json_path.string() + " (" +
                      e.what() + ")");
  }
  SgcModel model;
  model.layers = j.value("layers", std::size_t{1});
  model.final_loss = j.value("final_loss", 0.0);
  const auto base =
      json_path.has_parent_path() ? json_path.parent_path() : std::filesystem::path(".");
  model.weights = load_matrix(base / j.at("weights").get<std::string>());
  if (config && j.contains("config")) {
    const auto& c = j.at("config");
    config->learning_rate = c.value("learning_rate", config->learning_rate);
    config->epochs = c.value("epochs", config->epochs);
    config->weight_decay = c.value("weight_decay", config->weight_decay);
    config->beta1 = c.value("beta1", config->beta1);
    config->beta2 = c.value("beta2", config->beta2);
    config->epsilon = c.value("epsilon", config->epsilon);
    config->seed = c.value("seed", config->seed);
  }
  if (self_weight) *self_weight = j.value("self_weight", 0.0);
  return model;
}

}  // namespace vsgraph

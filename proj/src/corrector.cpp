#include "vsgraph/corrector.hpp"

#include <cmath>

#include "vsgraph/parallel.hpp"

namespace vsgraph {

namespace {

// f32-quantized inputs accumulate rounding across a row sum; 1e-4 absolute
// covers wide rows without letting genuinely broken inputs through.
constexpr double kRowSumTolerance = 1e-4;

void check_stochastic(const DenseMatrix& m, const char* name) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double sum = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const double v = m(i, c);
      if (!(v >= 0.0) || !std::isfinite(v))
        throw ValidationError(std::string(name) + " row " + std::to_string(i) +
                              " has a negative or non-finite entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance)
      throw ValidationError(std::string(name) + " row " + std::to_string(i) +
                            " is not a probability distribution (sum=" +
                            std::to_string(sum) + ")");
  }
}

}  // namespace

BlendConfig::BlendConfig(double lambda_, double confidence_threshold_)
    : lambda(lambda_), confidence_threshold(confidence_threshold_) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw ArgumentError("lambda must lie in [0, 1], got " + std::to_string(lambda));
  if (!(confidence_threshold > 0.0 && confidence_threshold < 1.0))
    throw ArgumentError("confidence threshold must lie in (0, 1), got " +
                        std::to_string(confidence_threshold));
}

DenseMatrix combine(const DenseMatrix& gnn_labels, const DenseMatrix& cnn_labels,
                    const BlendConfig& config) {
  if (gnn_labels.rows() != cnn_labels.rows() || gnn_labels.cols() != cnn_labels.cols())
    throw ShapeError("GNN labels are " + std::to_string(gnn_labels.rows()) + "x" +
                     std::to_string(gnn_labels.cols()) + ", CNN labels are " +
                     std::to_string(cnn_labels.rows()) + "x" +
                     std::to_string(cnn_labels.cols()));
  check_stochastic(gnn_labels, "GNN label");
  check_stochastic(cnn_labels, "CNN label");

  const std::size_t cols = gnn_labels.cols();
  DenseMatrix out(gnn_labels.rows(), cols);
  parallel_for(0, gnn_labels.rows(), [&](std::size_t i) {
    const double* g = gnn_labels.data().data() + i * cols;
    const double* c = cnn_labels.data().data() + i * cols;
    double* o = out.data().data() + i * cols;
    double mx = g[0];
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, g[j]);
    if (mx >= config.confidence_threshold) {
      for (std::size_t j = 0; j < cols; ++j) o[j] = g[j];
    } else {
      for (std::size_t j = 0; j < cols; ++j)
        o[j] = config.lambda * g[j] + (1.0 - config.lambda) * c[j];
    }
  });
  return out;
}

double soft_cross_entropy(const DenseMatrix& targets, const DenseMatrix& predictions) {
  if (targets.rows() != predictions.rows() || targets.cols() != predictions.cols())
    throw ShapeError("targets are " + std::to_string(targets.rows()) + "x" +
                     std::to_string(targets.cols()) + ", predictions are " +
                     std::to_string(predictions.rows()) + "x" +
                     std::to_string(predictions.cols()));
  double loss = 0.0;
  for (std::size_t i = 0; i < targets.rows(); ++i) {
    for (std::size_t c = 0; c < targets.cols(); ++c) {
      const double t = targets(i, c);
      if (t == 0.0) continue;
      const double p = predictions(i, c);
      if (p <= 0.0)
        throw ValidationError("infinite loss: zero prediction with positive target at row " +
                              std::to_string(i) + ", class " + std::to_string(c));
      loss -= t * std::log(p);
    }
  }
  return loss;
}

AnchorSet progressive_anchors(const DenseMatrix& gnn_labels, double tau) {
  AnchorSet set;
  for (std::size_t i = 0; i < gnn_labels.rows(); ++i) {
    std::size_t arg = 0;
    double mx = gnn_labels(i, 0);
    for (std::size_t c = 1; c < gnn_labels.cols(); ++c)
      if (gnn_labels(i, c) > mx) {
        mx = gnn_labels(i, c);
        arg = c;
      }
    if (mx > tau) set.members.push_back({i, static_cast<std::int32_t>(arg), mx});
  }
  return set;
}

ProgressiveResult progressive_train(const DenseMatrix& smoothed,
                                    const AnchorSet& initial_anchors,
                                    std::size_t rounds, std::size_t class_count,
                                    const TrainConfig& config, double tau,
                                    const LabelVector* ground_truth) {
  if (rounds < 1) throw ArgumentError("progressive rounds must be >= 1");

  auto anchor_accuracy = [&](const AnchorSet& set) -> std::optional<double> {
    if (!ground_truth || set.members.empty()) return std::nullopt;
    std::size_t hits = 0;
    for (const auto& a : set.members)
      if (ground_truth->entries[a.sample] == a.label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(set.members.size());
  };

  ProgressiveResult result;
  AnchorSet current = initial_anchors;
  for (std::size_t round = 1; round <= rounds; ++round) {
    result.model = train(smoothed, current, class_count, config);
    result.labels = infer(result.model, smoothed);

    RoundRecord record;
    record.round = round;
    record.anchor_count = current.members.size();
    record.final_loss = result.model.final_loss;
    record.anchor_accuracy = anchor_accuracy(current);
    result.history.push_back(record);

    if (round == rounds) break;
    current = progressive_anchors(result.labels, tau);
    if (current.members.empty()) break;  // nothing left to supervise the next round
  }
  return result;
}

}  // namespace vsgraph

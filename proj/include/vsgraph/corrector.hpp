#pragma once

#include <optional>

#include "vsgraph/sgc.hpp"

namespace vsgraph {

// Blend parameters: lambda weights the GNN side of low-confidence rows,
// confidence_threshold gates the confident pass-through branch.
struct BlendConfig {
  BlendConfig(double lambda, double confidence_threshold);

  double lambda;
  double confidence_threshold;
};

// Row i of the result is gnn_i when max(gnn_i) >= threshold, otherwise
// lambda * gnn_i + (1 - lambda) * cnn_i. Confident rows pass through
// bit-equal.
DenseMatrix combine(const DenseMatrix& gnn_labels, const DenseMatrix& cnn_labels,
                    const BlendConfig& config);

// Sum over samples and classes of -target * log(prediction).
double soft_cross_entropy(const DenseMatrix& targets, const DenseMatrix& predictions);

// Threshold-selected anchors: every row whose max probability strictly
// exceeds tau anchors its argmax class. Class counts may be unequal.
AnchorSet progressive_anchors(const DenseMatrix& gnn_labels, double tau);

struct RoundRecord {
  std::size_t round = 0;
  std::size_t anchor_count = 0;
  double final_loss = 0.0;
  std::optional<double> anchor_accuracy;  // only when ground truth is supplied
};

struct ProgressiveResult {
  SgcModel model;        // model of the last completed round
  DenseMatrix labels;    // its predictions over all samples
  std::vector<RoundRecord> history;
};

// Repeated training on a fixed graph: round 1 uses the initial anchors,
// each later round retrains from scratch on the threshold-selected anchors of
// the previous round's predictions. An empty anchor set ends the run early.
ProgressiveResult progressive_train(const DenseMatrix& smoothed,
                                    const AnchorSet& initial_anchors,
                                    std::size_t rounds, std::size_t class_count,
                                    const TrainConfig& config, double tau,
                                    const LabelVector* ground_truth = nullptr);

}  // namespace vsgraph

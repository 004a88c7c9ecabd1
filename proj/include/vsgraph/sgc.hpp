#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>

#include "vsgraph/anchor.hpp"
#include "vsgraph/graph.hpp"
#include "vsgraph/matrix.hpp"

namespace vsgraph {

// Full-batch adaptive-moment training configuration.
struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 5000;
  double weight_decay = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

// Linear graph-convolution classifier. The per-layer weight chain collapses
// into one feature_dim x class_count matrix because every layer is linear;
// `layers` records how many propagation steps the features were given.
struct SgcModel {
  DenseMatrix weights;
  std::size_t layers = 1;
  double final_loss = 0.0;
};

// S^L * features: the propagation half of the network, precomputed once.
DenseMatrix smooth_features(const PropagationOperator& op, const DenseMatrix& features,
                            std::size_t layers);

// Cross-entropy over the anchor set at parameter `theta`, plus its gradient.
// The returned loss excludes the L2 term; weight decay enters the gradient
// only. Anchors are summed in (sample, label) order.
std::pair<double, DenseMatrix> anchor_loss_grad(const DenseMatrix& smoothed,
                                                const AnchorSet& anchors,
                                                std::size_t class_count,
                                                const DenseMatrix& theta,
                                                double weight_decay);

// Full-batch training from zero-initialized weights. Deterministic for fixed
// inputs and config. `loss_history`, when given, receives one entry per epoch.
SgcModel train(const DenseMatrix& smoothed, const AnchorSet& anchors,
               std::size_t class_count, const TrainConfig& config,
               std::vector<double>* loss_history = nullptr);

// Row-wise softmax of smoothed * weights; every row is a distribution.
DenseMatrix infer(const SgcModel& model, const DenseMatrix& smoothed);

// Weight matrix as VSGM plus JSON sidecar (layers, config, final loss, and
// the propagation self weight used at training time so inference can rebuild
// the same operator).
void save_model(const SgcModel& model, const TrainConfig& config, double self_weight,
                const std::filesystem::path& json_path);
SgcModel load_model(const std::filesystem::path& json_path, TrainConfig* config = nullptr,
                    double* self_weight = nullptr);

}  // namespace vsgraph

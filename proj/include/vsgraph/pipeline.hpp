#pragma once

#include <filesystem>
#include <optional>

#include "vsgraph/corrector.hpp"
#include "vsgraph/io.hpp"
#include "vsgraph/metrics.hpp"
#include "vsgraph/sgc.hpp"
#include "vsgraph/synth.hpp"

namespace vsgraph {

// One end-to-end run. Defaults follow the reference configuration:
// k=5, w=0, m=10, L=1, lambda=0.5, tau_f=0.7, lr=0.1, 5000 epochs,
// weight decay 1e-6.
struct RunConfig {
  std::filesystem::path manifest;
  std::size_t k = 5;
  double self_weight = 0.0;
  std::size_t anchors_per_class = 10;
  std::size_t layers = 1;
  double lambda = 0.5;
  double confidence_threshold = 0.7;
  TrainConfig train;
  std::size_t progressive_rounds = 1;
  std::filesystem::path output_dir;

  void validate() const;
};

RunConfig run_config_from_json(const std::filesystem::path& source);

// File-to-file stage runners. The pipeline command is exactly this sequence,
// so staged and one-shot executions produce identical artifacts.
namespace stages {

void build_graph(const std::filesystem::path& features, std::size_t k,
                 const std::filesystem::path& out_graph);

void enhance_text(const std::filesystem::path& graph, const std::filesystem::path& metadata,
                  double self_weight, const std::filesystem::path& out_matrix);

// Class count comes from the description matrix; multi-label files route to
// the per-label selector automatically.
void select_anchors(const std::filesystem::path& enhanced,
                    const std::filesystem::path& descriptions,
                    const std::filesystem::path& labels, std::size_t m,
                    const std::filesystem::path& out_csv);

void train_gnn(const std::filesystem::path& graph, const std::filesystem::path& features,
               const std::filesystem::path& anchors_csv, std::size_t class_count,
               double self_weight, std::size_t layers, const TrainConfig& config,
               const std::filesystem::path& out_model_json,
               std::vector<double>* loss_history = nullptr);

void label(const std::filesystem::path& model_json, const std::filesystem::path& graph,
           const std::filesystem::path& features, const std::filesystem::path& out_labels);

void combine(const std::filesystem::path& gnn_labels, const std::filesystem::path& cnn_labels,
             double lambda, double confidence_threshold,
             const std::filesystem::path& out_labels,
             const std::optional<std::filesystem::path>& top5_csv = std::nullopt);

// Writes model.json/model.vsgm, gnn_labels.vsgm and history.jsonl into
// out_dir. Ground truth, when given, adds per-round anchor accuracy.
std::vector<RoundRecord> progressive(
    const std::filesystem::path& graph, const std::filesystem::path& features,
    const std::filesystem::path& anchors_csv, std::size_t class_count, double self_weight,
    std::size_t layers, const TrainConfig& config, std::size_t rounds, double tau,
    const std::filesystem::path& out_dir,
    const std::optional<std::filesystem::path>& ground_truth = std::nullopt);

}  // namespace stages

struct PipelineOutcome {
  std::filesystem::path graph;
  std::filesystem::path enhanced_metadata;
  std::filesystem::path anchors;
  std::filesystem::path model;
  std::filesystem::path gnn_labels;
  std::filesystem::path final_labels;
  std::filesystem::path report;
  std::size_t anchor_count = 0;
  double final_loss = 0.0;
};

// Runs the full correction sequence — graph, enhanced text, anchors, GNN
// training, inference, blending — writing every intermediate artifact plus
// a JSON run report into the output directory.
PipelineOutcome run_pipeline(const RunConfig& config);

// Prediction matrix vs. a truth CSV. Single-label truth may carry the
// open-set sentinel (class id == prediction columns); sentinel rows are
// excluded from top-k and scored by the open-set metrics instead.
EvalReport evaluate_predictions(const std::filesystem::path& predictions,
                                const std::filesystem::path& truth, std::size_t top_k,
                                double open_threshold);

}  // namespace vsgraph

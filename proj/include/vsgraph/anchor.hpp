#pragma once

#include <filesystem>
#include <string>

#include "vsgraph/graph.hpp"
#include "vsgraph/matrix.hpp"

namespace vsgraph {

struct Anchor {
  std::size_t sample = 0;
  std::int32_t label = 0;
  double score = 0.0;
};

// Per-class anchor selection result. `per_class_threshold[c]` is the score
// of the weakest selected member of class c (NaN when the class is empty).
// Members are ordered by (class asc, rank asc). Threshold-selected sets
// (progressive rounds) leave anchors_per_class at 0 and thresholds empty.
struct AnchorSet {
  std::vector<Anchor> members;
  std::vector<double> per_class_threshold;
  std::size_t anchors_per_class = 0;
  std::vector<std::string> warnings;
};

// One score per sample: cos(enhanced_i, description of its web label).
using AnchorScoreTable = std::vector<double>;

// t_hat = S * t. Thin alias over propagate; the self weight of the operator
// decides how much of the original embedding survives.
DenseMatrix enhance_metadata(const PropagationOperator& op, const DenseMatrix& metadata);

// Cosine between each enhanced embedding and its web label's description.
// Zero-norm vectors score -1 so samples with empty metadata never anchor.
AnchorScoreTable score_anchors(const DenseMatrix& enhanced,
                               const DenseMatrix& label_descriptions,
                               const LabelVector& web_labels);

// All-pairs score table, one column per class; feeds the multi-label path.
DenseMatrix score_anchor_matrix(const DenseMatrix& enhanced,
                                const DenseMatrix& label_descriptions);

// Top-m per class by (score desc, sample asc). Classes smaller than m
// contribute everything they have plus a warning.
AnchorSet select_anchors(const AnchorScoreTable& scores, const LabelVector& web_labels,
                         std::size_t m);

// Multi-label variant: per label, top-m among the samples carrying that web
// label. A sample may anchor several labels.
AnchorSet multi_label_anchor_sets(const DenseMatrix& pair_scores,
                                  const MultiLabelMatrix& web_labels, std::size_t m);

// CSV `sample_id,class_id,score` plus a JSON sidecar {m, per_class_threshold}
// at the same path with extension `.json`.
void save_anchors(const AnchorSet& anchors, const std::filesystem::path& csv_path);
AnchorSet load_anchors(const std::filesystem::path& csv_path);

}  // namespace vsgraph

#pragma once

#include <optional>
#include <string>

#include "vsgraph/matrix.hpp"

namespace vsgraph {

// Two readings of a macro F1 score. HarmonicOfMacros is the harmonic mean
// of macro precision and macro recall; MeanOfClassF1 averages the per-class
// F1 values directly.
enum class MacroF1Mode { HarmonicOfMacros, MeanOfClassF1 };

// Fraction of samples whose true class appears among the k highest scores.
// Ties rank the lower class index first.
double topk_accuracy(const DenseMatrix& predictions, const LabelVector& truth, std::size_t k);

// Binarizes predictions as the top-K classes per sample, then returns
// (C-F1, O-F1). C-F1 defaults to the mean of per-class F1 values, counting
// classes with no truth and no predicted positives as zero. O-F1 is the
// micro F1 over all (sample, class) decisions.
std::pair<double, double> multilabel_f1(const DenseMatrix& predictions,
                                        const MultiLabelMatrix& truth, std::size_t top_k,
                                        MacroF1Mode mode = MacroF1Mode::MeanOfClassF1);

// Mean over classes of average precision (precision at each positive's
// rank, no interpolation). Classes without positives are skipped with a
// warning.
double mean_average_precision(const DenseMatrix& predictions, const MultiLabelMatrix& truth,
                              std::vector<std::string>* warnings = nullptr);

struct OpensetResult {
  double precision = 0.0;  // macro over closed classes
  double recall = 0.0;
  double f1 = 0.0;
};

// Open-set evaluation: a sample is assigned its argmax class iff the max
// score strictly exceeds `threshold`, otherwise rejected. `truth` marks
// open-set samples with the sentinel class id == predictions.cols().
// Accepted open-set samples count as false positives of their predicted
// class. Classes without any closed-truth samples are excluded from the
// macro averages.
OpensetResult openset_prf(const DenseMatrix& predictions, const LabelVector& truth,
                          double threshold,
                          MacroF1Mode mode = MacroF1Mode::HarmonicOfMacros);

// Aggregated report; optional sections stay empty when not computed.
struct EvalReport {
  std::optional<double> top1, top5;
  std::optional<double> c_f1, o_f1, map;
  std::optional<double> openset_precision, openset_recall, openset_f1;
  std::size_t sample_count = 0;
  std::size_t class_count = 0;
  std::vector<std::string> warnings;

  std::string to_json() const;
  std::string to_table() const;
};

}  // namespace vsgraph

#include "vsgraph/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace vsgraph {

namespace {

// Class indices of the k best scores in one row, ties by lower index.
std::vector<std::size_t> top_k_classes(std::span<const double> row, std::size_t k) {
  std::vector<std::size_t> order(row.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                    order.end(), [&](std::size_t a, std::size_t b) {
                      if (row[a] != row[b]) return row[a] > row[b];
                      return a < b;
                    });
  order.resize(k);
  return order;
}

double f1_of(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

}  // namespace

double topk_accuracy(const DenseMatrix& predictions, const LabelVector& truth,
                     std::size_t k) {
  if (truth.entries.size() != predictions.rows())
    throw ShapeError("truth has " + std::to_string(truth.entries.size()) + " entries for " +
                     std::to_string(predictions.rows()) + " prediction rows");
  if (k < 1 || k > predictions.cols())
    throw ArgumentError("k must lie in [1, class_count], got " + std::to_string(k));
  if (predictions.rows() == 0) throw ArgumentError("no samples to evaluate");

  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.rows(); ++i) {
    const auto best = top_k_classes(predictions.row(i), k);
    const auto t = static_cast<std::size_t>(truth.entries[i]);
    if (std::find(best.begin(), best.end(), t) != best.end()) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.rows());
}

std::pair<double, double> multilabel_f1(const DenseMatrix& predictions,
                                        const MultiLabelMatrix& truth, std::size_t top_k,
                                        MacroF1Mode mode) {
  if (predictions.rows() != truth.rows || predictions.cols() != truth.cols)
    throw ShapeError("predictions are " + std::to_string(predictions.rows()) + "x" +
                     std::to_string(predictions.cols()) + ", truth is " +
                     std::to_string(truth.rows) + "x" + std::to_string(truth.cols));
  if (top_k < 1 || top_k > predictions.cols())
    throw ArgumentError("top_k must lie in [1, class_count], got " + std::to_string(top_k));

  const std::size_t classes = predictions.cols();
  std::vector<std::size_t> tp(classes, 0), fp(classes, 0), fn(classes, 0);
  for (std::size_t i = 0; i < predictions.rows(); ++i) {
    std::vector<std::uint8_t> predicted(classes, 0);
    for (std::size_t c : top_k_classes(predictions.row(i), top_k)) predicted[c] = 1;
    for (std::size_t c = 0; c < classes; ++c) {
      if (predicted[c] && truth(i, c)) ++tp[c];
      else if (predicted[c]) ++fp[c];
      else if (truth(i, c)) ++fn[c];
    }
  }

  double macro_p = 0.0, macro_r = 0.0, macro_f1 = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    const double p = tp[c] + fp[c] > 0 ? static_cast<double>(tp[c]) / (tp[c] + fp[c]) : 0.0;
    const double r = tp[c] + fn[c] > 0 ? static_cast<double>(tp[c]) / (tp[c] + fn[c]) : 0.0;
    macro_p += p;
    macro_r += r;
    macro_f1 += f1_of(p, r);
  }
  macro_p /= static_cast<double>(classes);
  macro_r /= static_cast<double>(classes);
  macro_f1 /= static_cast<double>(classes);

  const double c_f1 =
      mode == MacroF1Mode::MeanOfClassF1 ? macro_f1 : f1_of(macro_p, macro_r);

  const auto total_tp = std::accumulate(tp.begin(), tp.end(), std::size_t{0});
  const auto total_fp = std::accumulate(fp.begin(), fp.end(), std::size_t{0});
  const auto total_fn = std::accumulate(fn.begin(), fn.end(), std::size_t{0});
  const double micro_p =
      total_tp + total_fp > 0 ? static_cast<double>(total_tp) / (total_tp + total_fp) : 0.0;
  const double micro_r =
      total_tp + total_fn > 0 ? static_cast<double>(total_tp) / (total_tp + total_fn) : 0.0;
  return {c_f1, f1_of(micro_p, micro_r)};
}

double mean_average_precision(const DenseMatrix& predictions, const MultiLabelMatrix& truth,
                              std::vector<std::string>* warnings) {
  if (predictions.rows() != truth.rows || predictions.cols() != truth.cols)
    throw ShapeError("predictions are " + std::to_string(predictions.rows()) + "x" +
                     std::to_string(predictions.cols()) + ", truth is " +
                     std::to_string(truth.rows) + "x" + std::to_string(truth.cols));

  double ap_sum = 0.0;
  std::size_t scored_classes = 0;
  std::vector<std::size_t> order(predictions.rows());
  for (std::size_t c = 0; c < predictions.cols(); ++c) {
    std::size_t positives = 0;
    for (std::size_t i = 0; i < truth.rows; ++i) positives += truth(i, c);
    if (positives == 0) {
      if (warnings)
        warnings->push_back("class " + std::to_string(c) + " has no positives, skipped");
      continue;
    }
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (predictions(a, c) != predictions(b, c)) return predictions(a, c) > predictions(b, c);
      return a < b;
    });
    double ap = 0.0;
    std::size_t hits = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      if (truth(order[rank], c)) {
        ++hits;
        ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
      }
    }
    ap_sum += ap / static_cast<double>(positives);
    ++scored_classes;
  }
  if (scored_classes == 0) throw ValidationError("no class has positive truth samples");
  return ap_sum / static_cast<double>(scored_classes);
}

OpensetResult openset_prf(const DenseMatrix& predictions, const LabelVector& truth,
                          double threshold, MacroF1Mode mode) {
  if (truth.entries.size() != predictions.rows())
    throw ShapeError("truth has " + std::to_string(truth.entries.size()) + " entries for " +
                     std::to_string(predictions.rows()) + " prediction rows");
  if (!(threshold > 0.0 && threshold < 1.0))
    throw ArgumentError("threshold must lie in (0, 1), got " + std::to_string(threshold));

  const std::size_t classes = predictions.cols();
  const auto sentinel = static_cast<std::int32_t>(classes);
  std::vector<std::size_t> tp(classes, 0), fp(classes, 0), truth_count(classes, 0);
  for (std::size_t i = 0; i < predictions.rows(); ++i) {
    const std::int32_t t = truth.entries[i];
    if (t < 0 || t > sentinel)
      throw ValidationError("truth label " + std::to_string(t) + " at row " +
                            std::to_string(i) + " outside closed classes and sentinel");
    if (t < sentinel) ++truth_count[static_cast<std::size_t>(t)];

    std::size_t arg = 0;
    double mx = predictions(i, 0);
    for (std::size_t c = 1; c < classes; ++c)
      if (predictions(i, c) > mx) {
        mx = predictions(i, c);
        arg = c;
      }
    if (mx > threshold) {  // accepted; rejected samples predict nothing
      if (t == static_cast<std::int32_t>(arg)) ++tp[arg];
      else ++fp[arg];
    }
  }

  double macro_p = 0.0, macro_r = 0.0, macro_f1 = 0.0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (truth_count[c] == 0) continue;
    const double p = tp[c] + fp[c] > 0 ? static_cast<double>(tp[c]) / (tp[c] + fp[c]) : 0.0;
    const double r = static_cast<double>(tp[c]) / static_cast<double>(truth_count[c]);
    macro_p += p;
    macro_r += r;
    macro_f1 += f1_of(p, r);
    ++counted;
  }
  if (counted == 0) throw ValidationError("no closed-class truth samples");

  OpensetResult result;
  result.precision = macro_p / static_cast<double>(counted);
  result.recall = macro_r / static_cast<double>(counted);
  result.f1 = mode == MacroF1Mode::HarmonicOfMacros
                  ? f1_of(result.precision, result.recall)
                  : macro_f1 / static_cast<double>(counted);
  return result;
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
  };
  put("top1", top1);
  put("top5", top5);
  put("c_f1", c_f1);
  put("o_f1", o_f1);
  put("map", map);
  put("openset_c_p", openset_precision);
  put("openset_c_r", openset_recall);
  put("openset_c_f1", openset_f1);
  j["samples"] = sample_count;
  j["classes"] = class_count;
  if (!warnings.empty()) j["warnings"] = warnings;
  return j.dump(2);
}

std::string EvalReport::to_table() const {
  std::ostringstream out;
  out.precision(4);
  out << std::fixed;
  auto row = [&](const char* name, const std::optional<double>& v) {
    if (v) out << "  " << name << std::string(14 - std::string(name).size(), ' ')
               << 100.0 * *v << '\n';
  };
  out << "samples: " << sample_count << "  classes: " << class_count << '\n';
  row("Top-1", top1);
  row("Top-5", top5);
  row("C-F1", c_f1);
  row("O-F1", o_f1);
  row("mAP", map);
  row("C-P", openset_precision);
  row("C-R", openset_recall);
  row("C-F1 (open)", openset_f1);
  for (const auto& w : warnings) out << "  warning: " << w << '\n';
  return out.str();
}

}  // namespace vsgraph

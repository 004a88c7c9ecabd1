#include "vsgraph/anchor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "vsgraph/parallel.hpp"

namespace vsgraph {

namespace {

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    dot += a[j] * b[j];
    na += a[j] * a[j];
    nb += b[j] * b[j];
  }
  if (na == 0.0 || nb == 0.0) return -1.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// (score desc, sample asc) ranking shared by both selection paths.
void take_top_m(std::vector<std::pair<double, std::size_t>>& pool, std::size_t m,
                std::int32_t cls, AnchorSet& out) {
  std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  const std::size_t take = std::min(m, pool.size());
  for (std::size_t r = 0; r < take; ++r)
    out.members.push_back({pool[r].second, cls, pool[r].first});
  if (pool.empty()) {
    out.per_class_threshold.push_back(std::numeric_limits<double>::quiet_NaN());
    out.warnings.push_back("class " + std::to_string(cls) + " has no samples");
  } else {
    out.per_class_threshold.push_back(pool[take - 1].first);
    if (pool.size() < m)
      out.warnings.push_back("class " + std::to_string(cls) + " has only " +
                             std::to_string(pool.size()) + " samples (< m=" +
                             std::to_string(m) + ")");
  }
}

}  // namespace

DenseMatrix enhance_metadata(const PropagationOperator& op, const DenseMatrix& metadata) {
  return propagate(op, metadata);
}

AnchorScoreTable score_anchors(const DenseMatrix& enhanced,
                               const DenseMatrix& label_descriptions,
                               const LabelVector& web_labels) {
  if (enhanced.cols() != label_descriptions.cols())
    throw ShapeError("embedding dims differ: enhanced has " + std::to_string(enhanced.cols()) +
                     ", descriptions have " + std::to_string(label_descriptions.cols()));
  if (web_labels.entries.size() != enhanced.rows())
    throw ShapeError("label count " + std::to_string(web_labels.entries.size()) +
                     " does not match " + std::to_string(enhanced.rows()) + " samples");
  if (static_cast<std::size_t>(web_labels.class_count) != label_descriptions.rows())
    throw ShapeError("description matrix has " + std::to_string(label_descriptions.rows()) +
                     " rows for " + std::to_string(web_labels.class_count) + " classes");

  AnchorScoreTable scores(enhanced.rows());
  parallel_for(0, enhanced.rows(), [&](std::size_t i) {
    const auto cls = static_cast<std::size_t>(web_labels.entries[i]);
    scores[i] = cosine(enhanced.row(i), label_descriptions.row(cls));
  });
  return scores;
}

DenseMatrix score_anchor_matrix(const DenseMatrix& enhanced,
                                const DenseMatrix& label_descriptions) {
  if (enhanced.cols() != label_descriptions.cols())
    throw ShapeError("embedding dims differ: enhanced has " + std::to_string(enhanced.cols()) +
                     ", descriptions have " + std::to_string(label_descriptions.cols()));
  DenseMatrix scores(enhanced.rows(), label_descriptions.rows());
  parallel_for(0, enhanced.rows(), [&](std::size_t i) {
    for (std::size_t c = 0; c < label_descriptions.rows(); ++c)
      scores(i, c) = cosine(enhanced.row(i), label_descriptions.row(c));
  });
  return scores;
}

AnchorSet select_anchors(const AnchorScoreTable& scores, const LabelVector& web_labels,
                         std::size_t m) {
  if (m < 1) throw ArgumentError("anchors per class m must be >= 1");
  if (scores.size() != web_labels.entries.size())
    throw ShapeError("score table has " + std::to_string(scores.size()) + " entries for " +
                     std::to_string(web_labels.entries.size()) + " labels");

  const auto class_count = static_cast<std::size_t>(web_labels.class_count);
  std::vector<std::vector<std::pair<double, std::size_t>>> by_class(class_count);
  for (std::size_t i = 0; i < scores.size(); ++i)
    by_class[static_cast<std::size_t>(web_labels.entries[i])].emplace_back(scores[i], i);

  AnchorSet out;
  out.anchors_per_class = m;
  for (std::size_t c = 0; c < class_count; ++c)
    take_top_m(by_class[c], m, static_cast<std::int32_t>(c), out);
  return out;
}

AnchorSet multi_label_anchor_sets(const DenseMatrix& pair_scores,
                                  const MultiLabelMatrix& web_labels, std::size_t m) {
  if (m < 1) throw ArgumentError("anchors per label m must be >= 1");
  if (pair_scores.rows() != web_labels.rows || pair_scores.cols() != web_labels.cols)
    throw ShapeError("score table is " + std::to_string(pair_scores.rows()) + "x" +
                     std::to_string(pair_scores.cols()) + " but web labels are " +
                     std::to_string(web_labels.rows) + "x" + std::to_string(web_labels.cols));

  AnchorSet out;
  out.anchors_per_class = m;
  for (std::size_t c = 0; c < web_labels.cols; ++c) {
    std::vector<std::pair<double, std::size_t>> pool;
    for (std::size_t i = 0; i < web_labels.rows; ++i)
      if (web_labels(i, c)) pool.emplace_back(pair_scores(i, c), i);
    take_top_m(pool, m, static_cast<std::int32_t>(c), out);
  }
  return out;
}

void save_anchors(const AnchorSet& anchors, const std::filesystem::path& csv_path) {
  std::ofstream out(csv_path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + csv_path.string());
  out << "sample_id,class_id,score\n";
  out.precision(17);
  for (const auto& a : anchors.members)
    out << a.sample << ',' << a.label << ',' << a.score << '\n';
  if (!out) throw IoError("write failed: " + csv_path.string());

  nlohmann::json j;
  j["m"] = anchors.anchors_per_class;
  auto& t = j["per_class_threshold"] = nlohmann::json::array();
  for (double v : anchors.per_class_threshold)
    t.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
  if (!anchors.warnings.empty()) j["warnings"] = anchors.warnings;
  std::filesystem::path sidecar = csv_path;
  sidecar.replace_extension(".json");
  std::ofstream js(sidecar, std::ios::trunc);
  if (!js) throw IoError("cannot open for writing: " + sidecar.string());
  js << j.dump(2) << '\n';
}

AnchorSet load_anchors(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot open: " + csv_path.string());
  std::string line;
  if (!std::getline(in, line) || (line != "sample_id,class_id,score" &&
                                  line != "sample_id,class_id,score\r"))
    throw FormatError("unrecognized anchor header: " + csv_path.string());
  AnchorSet set;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw FormatError("malformed anchor row '" + line + "': " + csv_path.string());
    Anchor a;
    a.sample = std::stoull(line.substr(0, c1));
    a.label = std::stoi(line.substr(c1 + 1, c2 - c1 - 1));
    a.score = std::stod(line.substr(c2 + 1));
    set.members.push_back(a);
  }

  std::filesystem::path sidecar = csv_path;
  sidecar.replace_extension(".json");
  std::ifstream js(sidecar);
  if (js) {
    nlohmann::json j;
    js >> j;
    set.anchors_per_class = j.value("m", std::size_t{0});
    if (j.contains("per_class_threshold"))
      for (const auto& v : j.at("per_class_threshold"))
        set.per_class_threshold.push_back(
            v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>());
  }
  return set;
}

}  // namespace vsgraph

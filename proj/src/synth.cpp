#include "vsgraph/synth.hpp"

#include <cmath>

#include <json.hpp>

#include "vsgraph/rng.hpp"

namespace vsgraph {

void SynthConfig::validate() const {
  if (classes < 1) throw ConfigError("need at least one closed class");
  if (samples < classes) throw ConfigError("need at least one sample per class");
  if (visual_dim < 2 || text_dim < 2) throw ConfigError("embedding dims must be >= 2");
  for (double rate : {noise_rate, base_noise_rate, noisy_class_fraction, metadata_corruption})
    if (!(rate >= 0.0 && rate <= 1.0))
      throw ConfigError("rates and fractions must lie in [0, 1]");
  if (!(visual_spread >= 0.0) || !(text_spread >= 0.0))
    throw ConfigError("spreads must be nonnegative");
  if (!(cnn_sharpness > 0.0)) throw ConfigError("cnn sharpness must be positive");
}

namespace {

constexpr double kMaxCentroidCosine = 0.3;
constexpr int kMaxRejectionAttempts = 1000;

std::vector<double> unit_gaussian(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double sq = 0.0;
  for (auto& x : v) {
    x = rng.normal();
    sq += x * x;
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (auto& x : v) x *= inv;
  return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Unit centroids with pairwise cosine below the separation cap.
std::vector<std::vector<double>> separated_centroids(Rng& rng, std::size_t count,
                                                     std::size_t dim, const char* what) {
  std::vector<std::vector<double>> centroids;
  centroids.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxRejectionAttempts && !placed; ++attempt) {
      auto candidate = unit_gaussian(rng, dim);
      placed = true;
      for (const auto& other : centroids)
        if (dot(candidate, other) > kMaxCentroidCosine) {
          placed = false;
          break;
        }
      if (placed) centroids.push_back(std::move(candidate));
    }
    if (!placed)
      throw ConfigError(std::string("cannot place ") + std::to_string(count) + " separated " +
                        what + " centroids in dimension " + std::to_string(dim));
  }
  return centroids;
}

// Perturbation sd is spread/sqrt(dim) per coordinate, so the expected noise
// norm equals `spread` regardless of dimension and cluster tightness does
// not silently change with the embedding size.
void write_unit_perturbed(DenseMatrix& out, std::size_t row, const std::vector<double>& center,
                          double spread, Rng& rng) {
  const std::size_t dim = center.size();
  const double sd = spread / std::sqrt(static_cast<double>(dim));
  double sq = 0.0;
  std::vector<double> v(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    v[j] = center[j] + sd * rng.normal();
    sq += v[j] * v[j];
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (std::size_t j = 0; j < dim; ++j) out(row, j) = v[j] * inv;
}

}  // namespace

SynthBundle generate(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);

  const std::size_t closed = config.classes;
  const std::size_t concepts = closed + config.ood_concepts;
  const auto visual_centroids = separated_centroids(rng, concepts, config.visual_dim, "visual");
  const auto text_centroids = separated_centroids(rng, concepts, config.text_dim, "text");

  // Majority-noise classes are the first round(fraction * C) class ids; each
  // class gets a planted confuser. Even-ranked noisy classes confuse into an
  // OOD concept when one exists, everything else into the next closed class.
  const auto noisy_count = static_cast<std::size_t>(
      std::llround(config.noisy_class_fraction * static_cast<double>(closed)));
  std::vector<double> rho(closed, config.base_noise_rate);
  std::vector<std::int32_t> confuser(closed);
  for (std::size_t c = 0; c < closed; ++c) {
    confuser[c] = static_cast<std::int32_t>((c + 1) % closed);
    if (c < noisy_count) {
      rho[c] = config.noise_rate;
      if (config.ood_concepts > 0 && c % 2 == 0)
        confuser[c] = static_cast<std::int32_t>(closed + (c / 2) % config.ood_concepts);
    }
  }

  SynthBundle bundle;
  bundle.planted_confuser = confuser;
  bundle.features = DenseMatrix(config.samples, config.visual_dim);
  bundle.metadata = DenseMatrix(config.samples, config.text_dim);
  bundle.web_labels.class_count = static_cast<std::int32_t>(closed);
  bundle.web_labels.entries.resize(config.samples);
  bundle.ground_truth.class_count = static_cast<std::int32_t>(closed) + 1;  // + sentinel
  bundle.ground_truth.entries.resize(config.samples);
  bundle.true_concepts.resize(config.samples);

  // Per-sample draw order is fixed: noise coin, feature, corruption coin,
  // metadata. Round-robin web labels keep class populations even.
  for (std::size_t i = 0; i < config.samples; ++i) {
    const auto web = static_cast<std::int32_t>(i % closed);
    const bool confused = rng.uniform() < rho[static_cast<std::size_t>(web)];
    const std::int32_t concept_id = confused ? confuser[static_cast<std::size_t>(web)] : web;

    bundle.web_labels.entries[i] = web;
    bundle.true_concepts[i] = concept_id;
    bundle.ground_truth.entries[i] = concept_id < static_cast<std::int32_t>(closed)
                                         ? concept_id
                                         : static_cast<std::int32_t>(closed);

    write_unit_perturbed(bundle.features, i, visual_centroids[concept_id],
                         config.visual_spread, rng);
    const bool corrupted = rng.uniform() < config.metadata_corruption;
    const auto& text_center = corrupted ? text_centroids[web] : text_centroids[concept_id];
    write_unit_perturbed(bundle.metadata, i, text_center, config.text_spread, rng);
  }

  bundle.label_descriptions = DenseMatrix(closed, config.text_dim);
  for (std::size_t c = 0; c < closed; ++c)
    for (std::size_t j = 0; j < config.text_dim; ++j)
      bundle.label_descriptions(c, j) = text_centroids[c][j];

  // Fabricated CNN labels: the pretrained model saw each class as the
  // rho-weighted mixture of its own and its confuser's visual cluster, so
  // its logit for class c is the similarity to that mixed centroid.
  std::vector<std::vector<double>> class_centroid(closed);
  for (std::size_t c = 0; c < closed; ++c) {
    std::vector<double> mix(config.visual_dim);
    double sq = 0.0;
    for (std::size_t j = 0; j < config.visual_dim; ++j) {
      mix[j] = (1.0 - rho[c]) * visual_centroids[c][j] +
               rho[c] * visual_centroids[static_cast<std::size_t>(confuser[c])][j];
      sq += mix[j] * mix[j];
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& x : mix) x *= inv;
    class_centroid[c] = std::move(mix);
  }
  bundle.cnn_labels = DenseMatrix(config.samples, closed);
  std::vector<double> logits(closed);
  for (std::size_t i = 0; i < config.samples; ++i) {
    double mx = -1e300;
    for (std::size_t c = 0; c < closed; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < config.visual_dim; ++j)
        s += bundle.features(i, j) * class_centroid[c][j];
      logits[c] = config.cnn_sharpness * s;
      mx = std::max(mx, logits[c]);
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < closed; ++c) {
      logits[c] = std::exp(logits[c] - mx);
      sum += logits[c];
    }
    for (std::size_t c = 0; c < closed; ++c) bundle.cnn_labels(i, c) = logits[c] / sum;
  }
  return bundle;
}

void write_bundle(const SynthBundle& bundle, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  save_matrix(bundle.features, directory / "features.vsgm");
  save_matrix(bundle.metadata, directory / "metadata.vsgm");
  save_matrix(bundle.label_descriptions, directory / "label_descriptions.vsgm");
  save_matrix(bundle.cnn_labels, directory / "cnn_labels.vsgm");
  save_labels(bundle.web_labels, directory / "labels.csv");
  save_labels(bundle.ground_truth, directory / "ground_truth.csv");

  DatasetManifest manifest;
  manifest.features = "features.vsgm";
  manifest.metadata_embeddings = "metadata.vsgm";
  manifest.label_descriptions = "label_descriptions.vsgm";
  manifest.labels = "labels.csv";
  manifest.cnn_labels = "cnn_labels.vsgm";
  manifest.ground_truth = "ground_truth.csv";
  manifest.sample_count = bundle.features.rows();
  manifest.class_count = bundle.label_descriptions.rows();
  manifest.visual_dim = bundle.features.cols();
  manifest.text_dim = bundle.metadata.cols();
  save_manifest(manifest, directory / "manifest.json");
}

OracleReport oracle_report(const SynthBundle& bundle, const DenseMatrix& corrected,
                           double tau, const AnchorSet* anchors) {
  const std::size_t n = bundle.features.rows();
  if (corrected.rows() != n)
    throw ShapeError("corrected labels have " + std::to_string(corrected.rows()) +
                     " rows for " + std::to_string(n) + " samples");
  const auto sentinel = bundle.web_labels.class_count;

  OracleReport report;
  std::size_t web_hits = 0, web_hits_in = 0, top1_in = 0, top1_all = 0, rejected = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool in_dist = bundle.ground_truth.entries[i] < sentinel;
    std::size_t arg = 0;
    double mx = corrected(i, 0);
    for (std::size_t c = 1; c < corrected.cols(); ++c)
      if (corrected(i, c) > mx) {
        mx = corrected(i, c);
        arg = c;
      }
    const bool hit =
        bundle.ground_truth.entries[i] == static_cast<std::int32_t>(arg);
    const bool web_hit = bundle.ground_truth.entries[i] == bundle.web_labels.entries[i];
    if (web_hit) ++web_hits;
    if (hit) ++top1_all;
    if (in_dist) {
      ++report.in_dist_count;
      if (hit) ++top1_in;
      if (web_hit) ++web_hits_in;
    } else {
      ++report.ood_count;
      if (mx < tau) ++rejected;
    }
  }
  report.web_accuracy = static_cast<double>(web_hits) / static_cast<double>(n);
  report.corrected_top1_all = static_cast<double>(top1_all) / static_cast<double>(n);
  if (report.in_dist_count > 0) {
    report.web_accuracy_in_dist =
        static_cast<double>(web_hits_in) / static_cast<double>(report.in_dist_count);
    report.corrected_top1_in_dist =
        static_cast<double>(top1_in) / static_cast<double>(report.in_dist_count);
  }
  if (report.ood_count > 0)
    report.ood_rejection_rate =
        static_cast<double>(rejected) / static_cast<double>(report.ood_count);

  if (anchors && !anchors->members.empty()) {
    std::size_t correct = 0;
    for (const auto& a : anchors->members)
      if (bundle.ground_truth.entries[a.sample] == a.label) ++correct;
    report.anchor_precision =
        static_cast<double>(correct) / static_cast<double>(anchors->members.size());
  }
  return report;
}

std::string OracleReport::to_json() const {
  nlohmann::json j;
  j["web_accuracy"] = web_accuracy;
  j["web_accuracy_in_dist"] = web_accuracy_in_dist;
  j["corrected_top1_in_dist"] = corrected_top1_in_dist;
  j["corrected_top1_all"] = corrected_top1_all;
  j["ood_rejection_rate"] = ood_rejection_rate;
  j["in_dist_count"] = in_dist_count;
  j["ood_count"] = ood_count;
  if (anchor_precision) j["anchor_precision"] = *anchor_precision;
  return j.dump(2);
}

}  // namespace vsgraph

#pragma once

#include <filesystem>
#include <optional>

#include "vsgraph/anchor.hpp"
#include "vsgraph/io.hpp"
#include "vsgraph/matrix.hpp"

namespace vsgraph {

// Generator knobs. Every concept (closed class or out-of-distribution) gets
// a visual and a text centroid on the unit sphere with pairwise cosine
// <= 0.3; samples are Gaussian perturbations of their true concept's
// centroids. Web labels follow the crawl model: class c keeps a sample with
// probability 1 - rho(c), otherwise the sample actually belongs to the
// class's planted confusing concept.
struct SynthConfig {
  std::size_t samples = 1000;
  std::size_t classes = 10;
  std::size_t ood_concepts = 0;
  std::size_t visual_dim = 64;
  std::size_t text_dim = 32;
  double noise_rate = 0.6;           // rho for majority-noise classes
  double base_noise_rate = 0.0;      // rho for the remaining classes
  double noisy_class_fraction = 0.0; // fraction of classes with majority noise
  double visual_spread = 0.3;        // sigma_v: expected noise norm per sample
  double text_spread = 0.3;          // sigma_t, same convention
  double metadata_corruption = 0.0;  // metadata follows the web label, not the concept
  double cnn_sharpness = 8.0;        // logit scale of the fabricated CNN labels
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthBundle {
  DenseMatrix features;            // N x visual_dim, unit rows
  DenseMatrix metadata;            // N x text_dim, unit rows
  DenseMatrix label_descriptions;  // C x text_dim (closed-class text centroids)
  DenseMatrix cnn_labels;          // N x C row-stochastic
  LabelVector web_labels;          // class ids in [0, C)
  LabelVector ground_truth;        // class id, or sentinel C for OOD samples
  std::vector<std::int32_t> true_concepts;     // concept id in [0, C + C_ood)
  std::vector<std::int32_t> planted_confuser;  // per class: confusing concept id
};

SynthBundle generate(const SynthConfig& config);

// Writes the bundle as a manifest directory (features.vsgm, metadata.vsgm,
// label_descriptions.vsgm, cnn_labels.vsgm, labels.csv, ground_truth.csv,
// manifest.json with relative paths).
void write_bundle(const SynthBundle& bundle, const std::filesystem::path& directory);

struct OracleReport {
  double web_accuracy = 0.0;          // all samples
  double web_accuracy_in_dist = 0.0;  // samples whose concept is a closed class
  double corrected_top1_in_dist = 0.0;
  double corrected_top1_all = 0.0;
  double ood_rejection_rate = 0.0;  // fraction of OOD samples with max conf < tau
  std::size_t in_dist_count = 0;
  std::size_t ood_count = 0;
  std::optional<double> anchor_precision;

  std::string to_json() const;
};

// Linear-scan scoring of corrected labels against the bundle's ground truth.
OracleReport oracle_report(const SynthBundle& bundle, const DenseMatrix& corrected,
                           double tau, const AnchorSet* anchors = nullptr);

}  // namespace vsgraph

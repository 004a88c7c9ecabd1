#pragma once

#include <filesystem>
#include <optional>
#include <variant>

#include "vsgraph/matrix.hpp"

namespace vsgraph {

// Binary matrix container:
//   magic "VSGM" (4 bytes) | version u32 | rows u64 | cols u64 |
//   payload f32[rows*cols] row-major, all little-endian.
inline constexpr std::uint32_t kMatrixFormatVersion = 1;

void save_matrix(const DenseMatrix& matrix, const std::filesystem::path& destination);
DenseMatrix load_matrix(const std::filesystem::path& source);

// (rows, cols) from the header alone, without touching the payload.
std::pair<std::size_t, std::size_t> matrix_dims(const std::filesystem::path& source);

// Label CSV. Header `sample_id,label` for single-label files or
// `sample_id,labels` with `;`-separated class indices for multi-label
// files. Sample ids must run 0..N-1 in order.
using Labels = std::variant<LabelVector, MultiLabelMatrix>;

Labels load_labels(const std::filesystem::path& source, std::int32_t class_count);
void save_labels(const LabelVector& labels, const std::filesystem::path& destination);
void save_labels(const MultiLabelMatrix& labels, const std::filesystem::path& destination);

// Binds one dataset together. Relative paths resolve against the manifest's
// own directory. `cnn_labels` carries the pretrained classifier's soft
// predictions; the pipeline requires it, standalone stages do not.
struct DatasetManifest {
  std::filesystem::path features;
  std::filesystem::path metadata_embeddings;
  std::filesystem::path label_descriptions;
  std::filesystem::path labels;
  std::optional<std::filesystem::path> cnn_labels;
  std::optional<std::filesystem::path> ground_truth;
  std::size_t sample_count = 0;
  std::size_t class_count = 0;
  std::optional<std::size_t> visual_dim;
  std::optional<std::size_t> text_dim;
};

DatasetManifest load_manifest(const std::filesystem::path& source);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& destination);

}  // namespace vsgraph

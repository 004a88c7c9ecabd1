#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vsgraph/error.hpp"

namespace vsgraph {

// Row-major real matrix. Values are held as doubles in memory; the
// on-disk container quantizes to 32-bit floats (see io.hpp), so anything
// that must survive a save/load round trip has to be f32-representable.
class DenseMatrix {
 public:
  DenseMatrix() = default;

  DenseMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ShapeError("DenseMatrix: data length " + std::to_string(data_.size()) +
                       " does not match " + std::to_string(rows_) + "x" +
                       std::to_string(cols_));
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const;

  // Exact elementwise comparison; used by round-trip and pass-through tests.
  friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Per-sample class indices in [0, class_count).
struct LabelVector {
  std::vector<std::int32_t> entries;
  std::int32_t class_count = 0;
};

// Binary indicator matrix, one row per sample, one column per class.
struct MultiLabelMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> data;  // 0/1, row-major

  std::uint8_t operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  void set(std::size_t i, std::size_t j, bool v) { data[i * cols + j] = v ? 1 : 0; }
};

}  // namespace vsgraph

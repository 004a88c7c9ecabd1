#pragma once

#include <filesystem>

#include "vsgraph/matrix.hpp"

namespace vsgraph {

// Symmetric weighted adjacency in CSR form. No self edges; weights are
// cosine similarities clamped to [0, 1] and stored as f32 so the on-disk
// container round-trips exactly.
struct SparseGraph {
  std::size_t node_count = 0;
  std::vector<std::size_t> offsets;  // node_count + 1
  std::vector<std::size_t> indices;  // column per edge, ascending within a row
  std::vector<float> weights;

  std::size_t nnz() const { return indices.size(); }
};

// S = D^{-1/2} (A + wI) D^{-1/2} with D_ii = sum_j A_ij. Values kept in
// double: downstream propagation feeds a 64-bit pipeline.
struct PropagationOperator {
  std::size_t node_count = 0;
  double self_weight = 0.0;
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> indices;
  std::vector<double> values;
  std::vector<double> degrees;  // row sums of A, before the zero-degree guard

  std::size_t nnz() const { return indices.size(); }
};

// Exact cosine kNN graph: edge (i,j) exists iff j is among the k nearest
// neighbors of i or vice versa. Ranking uses raw cosine with ties broken
// by lower node index; stored weights clamp negatives to zero.
SparseGraph knn_graph(const DenseMatrix& features, std::size_t k);

PropagationOperator normalize(const SparseGraph& graph, double self_weight);

// Returns S * signal. Accumulation follows CSR order, so results are
// bit-identical regardless of thread count.
DenseMatrix propagate(const PropagationOperator& op, const DenseMatrix& signal);

// CSR binary container, magic "VSGG". Operators append the self weight and
// the degree vector; their values quantize to f32 like every other payload.
void save_graph(const SparseGraph& graph, const std::filesystem::path& destination);
SparseGraph load_graph(const std::filesystem::path& source);
void save_operator(const PropagationOperator& op, const std::filesystem::path& destination);
PropagationOperator load_operator(const std::filesystem::path& source);

}  // namespace vsgraph

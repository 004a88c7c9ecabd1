#include "vsgraph/graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "vsgraph/parallel.hpp"

namespace vsgraph {

namespace {

// Row-normalized copy of the features; throws on zero-norm rows.
std::vector<double> unit_rows(const DenseMatrix& features) {
  const std::size_t n = features.rows(), d = features.cols();
  std::vector<double> unit(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double v = features(i, j);
      sq += v * v;
    }
    if (sq == 0.0)
      throw ValidationError("zero-norm feature row " + std::to_string(i));
    const double inv = 1.0 / std::sqrt(sq);
    for (std::size_t j = 0; j < d; ++j) unit[i * d + j] = features(i, j) * inv;
  }
  return unit;
}

double dot(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t j = 0; j < d; ++j) s += a[j] * b[j];
  return s;
}

}  // namespace

SparseGraph knn_graph(const DenseMatrix& features, std::size_t k) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (k < 1 || k >= n)
    throw ArgumentError("k must satisfy 1 <= k < node_count, got k=" + std::to_string(k) +
                        " with " + std::to_string(n) + " nodes");
  const std::vector<double> unit = unit_rows(features);

  // Top-k neighbor lists per query row. Ranking is (cosine desc, index asc)
  // on the raw cosine, before any clamping.
  std::vector<std::size_t> topk(n * k);
  parallel_for(0, n, [&](std::size_t i) {
    std::vector<std::pair<double, std::size_t>> cand;
    cand.reserve(n - 1);
    const double* fi = unit.data() + i * d;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      cand.emplace_back(dot(fi, unit.data() + j * d, d), j);
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(),
                      [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first > b.first;
                        return a.second < b.second;
                      });
    for (std::size_t r = 0; r < k; ++r) topk[i * k + r] = cand[r].second;
  });

  // OR-symmetrization: collect undirected pairs, deduplicate.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n * k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < k; ++r) {
      const std::size_t j = topk[i * k + r];
      pairs.emplace_back(std::min(i, j), std::max(i, j));
    }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  // One weight per undirected pair, shared by both directions, so stored
  // symmetry is bit-exact.
  std::vector<float> pair_weight(pairs.size());
  parallel_for(0, pairs.size(), [&](std::size_t p) {
    const auto [a, b] = pairs[p];
    const double c = dot(unit.data() + a * d, unit.data() + b * d, d);
    pair_weight[p] = static_cast<float>(std::max(c, 0.0));
  });

  SparseGraph g;
  g.node_count = n;
  std::vector<std::size_t> degree(n, 0);
  for (const auto& [a, b] : pairs) {
    ++degree[a];
    ++degree[b];
  }
  g.offsets.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) g.offsets[i + 1] = g.offsets[i] + degree[i];
  g.indices.resize(g.offsets[n]);
  g.weights.resize(g.offsets[n]);
  std::vector<std::size_t> cursor(g.offsets.begin(), g.offsets.end() - 1);
  // pairs are sorted by (min, max), which fills every row's columns in
  // ascending order
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [a, b] = pairs[p];
    const float w = pair_weight[p];
    g.indices[cursor[a]] = b;
    g.weights[cursor[a]++] = w;
    g.indices[cursor[b]] = a;
    g.weights[cursor[b]++] = w;
  }
  return g;
}

PropagationOperator normalize(const SparseGraph& graph, double self_weight) {
  if (self_weight < 0.0 || !std::isfinite(self_weight))
    throw ArgumentError("self weight must be a nonnegative real, got " +
                        std::to_string(self_weight));
  const std::size_t n = graph.node_count;

  PropagationOperator op;
  op.node_count = n;
  op.self_weight = self_weight;
  op.degrees.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t e = graph.offsets[i]; e < graph.offsets[i + 1]; ++e)
      sum += static_cast<double>(graph.weights[e]);
    op.degrees[i] = sum;
  }

  const bool with_diag = self_weight > 0.0;
  op.offsets.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t row = graph.offsets[i + 1] - graph.offsets[i];
    op.offsets[i + 1] = op.offsets[i] + row + (with_diag ? 1 : 0);
  }
  op.indices.resize(op.offsets[n]);
  op.values.resize(op.offsets[n]);

  // isolated nodes keep their own signal through w: guard D_ii = 0 -> 1
  auto guarded = [&](std::size_t i) { return op.degrees[i] == 0.0 ? 1.0 : op.degrees[i]; };

  parallel_for(0, n, [&](std::size_t i) {
    std::size_t out = op.offsets[i];
    const double di = guarded(i);
    bool diag_done = !with_diag;
    for (std::size_t e = graph.offsets[i]; e < graph.offsets[i + 1]; ++e) {
      const std::size_t j = graph.indices[e];
      if (!diag_done && j > i) {
        op.indices[out] = i;
        op.values[out++] = self_weight / di;
        diag_done = true;
      }
      op.indices[out] = j;
      op.values[out++] = static_cast<double>(graph.weights[e]) / std::sqrt(di * guarded(j));
    }
    if (!diag_done) {
      op.indices[out] = i;
      op.values[out++] = self_weight / di;
    }
  });
  return op;
}

DenseMatrix propagate(const PropagationOperator& op, const DenseMatrix& signal) {
  if (signal.rows() != op.node_count)
    throw ShapeError("signal has " + std::to_string(signal.rows()) + " rows, operator has " +
                     std::to_string(op.node_count) + " nodes");
  const std::size_t cols = signal.cols();
  DenseMatrix out(op.node_count, cols);
  parallel_for(0, op.node_count, [&](std::size_t i) {
    double* dst = out.data().data() + i * cols;
    for (std::size_t e = op.offsets[i]; e < op.offsets[i + 1]; ++e) {
      const double v = op.values[e];
      const double* src = signal.data().data() + op.indices[e] * cols;
      for (std::size_t c = 0; c < cols; ++c) dst[c] += v * src[c];
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// CSR container
// ---------------------------------------------------------------------------

namespace {

constexpr char kGraphMagic[4] = {'V', 'S', 'G', 'G'};
constexpr std::uint32_t kGraphFormatVersion = 1;
constexpr std::uint32_t kKindGraph = 0;
constexpr std::uint32_t kKindOperator = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f32(std::ostream& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) throw FormatError("truncated graph file: " + path);
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

std::uint64_t get_u64(std::istream& in, const std::string& path) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (in.gcount() != 8) throw FormatError("truncated graph file: " + path);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

float get_f32(std::istream& in, const std::string& path) {
  std::uint32_t bits = get_u32(in, path);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

std::uint32_t open_container(std::istream& in, const std::string& path) {
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4) throw FormatError("truncated graph file: " + path);
  if (std::memcmp(magic, kGraphMagic, 4) != 0)
    throw FormatError("bad magic, not a VSGG graph file: " + path);
  const std::uint32_t version = get_u32(in, path);
  if (version != kGraphFormatVersion)
    throw FormatError("unsupported graph format version " + std::to_string(version) + ": " +
                      path);
  return get_u32(in, path);  // kind
}

void write_csr(std::ostream& out, std::size_t n, const std::vector<std::size_t>& offsets,
               const std::vector<std::size_t>& indices) {
  put_u64(out, n);
  put_u64(out, indices.size());
  for (std::size_t v : offsets) put_u64(out, v);
  for (std::size_t v : indices) put_u64(out, v);
}

void read_csr(std::istream& in, const std::string& path, std::size_t& n,
              std::vector<std::size_t>& offsets, std::vector<std::size_t>& indices) {
  n = get_u64(in, path);
  const std::uint64_t nnz = get_u64(in, path);
  offsets.resize(n + 1);
  for (auto& v : offsets) v = get_u64(in, path);
  indices.resize(nnz);
  for (auto& v : indices) v = get_u64(in, path);
  if (offsets.back() != nnz)
    throw ValidationError("CSR offsets do not match nnz: " + path);
}

}  // namespace

void save_graph(const SparseGraph& graph, const std::filesystem::path& destination) {
  std::ofstream out(destination, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + destination.string());
  out.write(kGraphMagic, 4);
  put_u32(out, kGraphFormatVersion);
  put_u32(out, kKindGraph);
  write_csr(out, graph.node_count, graph.offsets, graph.indices);
  for (float w : graph.weights) put_f32(out, w);
  out.flush();
  if (!out) throw IoError("write failed: " + destination.string());
}

SparseGraph load_graph(const std::filesystem::path& source) {
  std::ifstream in(source, std::ios::binary);
  if (!in) throw IoError("cannot open: " + source.string());
  if (open_container(in, source.string()) != kKindGraph)
    throw FormatError("expected a graph container, found an operator: " + source.string());
  SparseGraph g;
  read_csr(in, source.string(), g.node_count, g.offsets, g.indices);
  g.weights.resize(g.indices.size());
  for (auto& w : g.weights) w = get_f32(in, source.string());
  return g;
}

void save_operator(const PropagationOperator& op, const std::filesystem::path& destination) {
  std::ofstream out(destination, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + destination.string());
  out.write(kGraphMagic, 4);
  put_u32(out, kGraphFormatVersion);
  put_u32(out, kKindOperator);
  write_csr(out, op.node_count, op.offsets, op.indices);
  for (double v : op.values) put_f32(out, static_cast<float>(v));
  put_u64(out, std::bit_cast<std::uint64_t>(op.self_weight));
  for (double dv : op.degrees) put_u64(out, std::bit_cast<std::uint64_t>(dv));
  out.flush();
  if (!out) throw IoError("write failed: " + destination.string());
}

PropagationOperator load_operator(const std::filesystem::path& source) {
  std::ifstream in(source, std::ios::binary);
  if (!in) throw IoError("cannot open: " + source.string());
  if (open_container(in, source.string()) != kKindOperator)
    throw FormatError("expected an operator container, found a graph: " + source.string());
  PropagationOperator op;
  read_csr(in, source.string(), op.node_count, op.offsets, op.indices);
  op.values.resize(op.indices.size());
  for (auto& v : op.values) v = static_cast<double>(get_f32(in, source.string()));
  op.self_weight = std::bit_cast<double>(get_u64(in, source.string()));
  op.degrees.resize(op.node_count);
  for (auto& d : op.degrees) d = std::bit_cast<double>(get_u64(in, source.string()));
  return op;
}

}  // namespace vsgraph

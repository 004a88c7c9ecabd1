#include "vsgraph/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace vsgraph {

namespace {

constexpr char kMatrixMagic[4] = {'V', 'S', 'G', 'M'};

void write_bytes(std::ostream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  write_bytes(out, b, 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  write_bytes(out, b, 8);
}

void write_f32(std::ostream& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32(out, bits);
}

bool read_exact(std::istream& in, void* p, std::size_t n) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount()) == n;
}

std::uint32_t read_u32(std::istream& in, const std::string& what, const std::string& path) {
  unsigned char b[4];
  if (!read_exact(in, b, 4))
    throw FormatError("truncated file while reading " + what + ": " + path);
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

std::uint64_t read_u64(std::istream& in, const std::string& what, const std::string& path) {
  unsigned char b[8];
  if (!read_exact(in, b, 8))
    throw FormatError("truncated file while reading " + what + ": " + path);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_matrix(const DenseMatrix& matrix, const std::filesystem::path& destination) {
  std::ofstream out(destination, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + destination.string());
  write_bytes(out, kMatrixMagic, 4);
  write_u32(out, kMatrixFormatVersion);
  write_u64(out, matrix.rows());
  write_u64(out, matrix.cols());
  for (double v : matrix.data()) write_f32(out, static_cast<float>(v));
  out.flush();
  if (!out) throw IoError("write failed: " + destination.string());
}

DenseMatrix load_matrix(const std::filesystem::path& source) {
  std::ifstream in(source, std::ios::binary);
  if (!in) throw IoError("cannot open: " + source.string());
  char magic[4];
  if (!read_exact(in, magic, 4))
    throw FormatError("truncated file while reading magic: " + source.string());
  if (std::memcmp(magic, kMatrixMagic, 4) != 0)
    throw FormatError("bad magic, not a VSGM matrix file: " + source.string());
  const std::uint32_t version = read_u32(in, "version", source.string());
  if (version != kMatrixFormatVersion)
    throw FormatError("unsupported matrix format version " + std::to_string(version) +
                      ": " + source.string());
  const std::uint64_t rows = read_u64(in, "rows", source.string());
  const std::uint64_t cols = read_u64(in, "cols", source.string());
  const std::uint64_t count = rows * cols;

  std::vector<double> data(count);
  std::vector<unsigned char> raw(static_cast<std::size_t>(count) * 4);
  if (!read_exact(in, raw.data(), raw.size()))
    throw FormatError("file declares " + std::to_string(rows) + "x" + std::to_string(cols) +
                      " values but payload is shorter: " + source.string());
  // reject trailing garbage as well
  char extra;
  if (in.read(&extra, 1); in.gcount() != 0)
    throw FormatError("payload longer than declared dimensions: " + source.string());

  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint32_t bits = static_cast<std::uint32_t>(raw[4 * i]) |
                         static_cast<std::uint32_t>(raw[4 * i + 1]) << 8 |
                         static_cast<std::uint32_t>(raw[4 * i + 2]) << 16 |
                         static_cast<std::uint32_t>(raw[4 * i + 3]) << 24;
    float f;
    std::memcpy(&f, &bits, 4);
    if (!std::isfinite(f))
      throw ValidationError("non-finite value at index " + std::to_string(i) + ": " +
                            source.string());
    data[i] = static_cast<double>(f);
  }
  return DenseMatrix(rows, cols, std::move(data));
}

std::pair<std::size_t, std::size_t> matrix_dims(const std::filesystem::path& source) {
  std::ifstream in(source, std::ios::binary);
  if (!in) throw IoError("cannot open: " + source.string());
  char magic[4];
  if (!read_exact(in, magic, 4) || std::memcmp(magic, kMatrixMagic, 4) != 0)
    throw FormatError("bad magic, not a VSGM matrix file: " + source.string());
  const std::uint32_t version = read_u32(in, "version", source.string());
  if (version != kMatrixFormatVersion)
    throw FormatError("unsupported matrix format version " + std::to_string(version) +
                      ": " + source.string());
  const std::uint64_t rows = read_u64(in, "rows", source.string());
  const std::uint64_t cols = read_u64(in, "cols", source.string());
  return {rows, cols};
}

bool DenseMatrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

namespace {

// Splits a CSV line at the first comma only; label fields never contain commas.
std::pair<std::string, std::string> split2(const std::string& line, std::size_t row,
                                           const std::string& path) {
  auto pos = line.find(',');
  if (pos == std::string::npos)
    throw FormatError("row " + std::to_string(row) + " has no comma: " + path);
  return {line.substr(0, pos), line.substr(pos + 1)};
}

std::int64_t parse_int(const std::string& s, std::size_t row, const std::string& path) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("row " + std::to_string(row) + ": not an integer '" + s + "': " + path);
  }
}

}  // namespace

Labels load_labels(const std::filesystem::path& source, std::int32_t class_count) {
  std::ifstream in(source);
  if (!in) throw IoError("cannot open: " + source.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty label file: " + source.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();

  bool multi;
  if (line == "sample_id,label") {
    multi = false;
  } else if (line == "sample_id,labels") {
    multi = true;
  } else {
    throw FormatError("unrecognized label header '" + line + "': " + source.string());
  }

  std::vector<std::int32_t> single;
  std::vector<std::vector<std::int32_t>> rows;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto [id_s, value_s] = split2(line, row, source.string());
    const std::int64_t id = parse_int(id_s, row, source.string());
    if (id != static_cast<std::int64_t>(row))
      throw ValidationError("sample ids must be contiguous 0..N-1; row " +
                            std::to_string(row) + " has id " + std::to_string(id) + ": " +
                            source.string());
    if (!multi) {
      const std::int64_t label = parse_int(value_s, row, source.string());
      if (label < 0 || label >= class_count)
        throw ValidationError("label " + std::to_string(label) + " out of range [0," +
                              std::to_string(class_count) + ") at row " +
                              std::to_string(row) + ": " + source.string());
      single.push_back(static_cast<std::int32_t>(label));
    } else {
      std::vector<std::int32_t> indices;
      std::stringstream ss(value_s);
      std::string tok;
      while (std::getline(ss, tok, ';')) {
        if (tok.empty()) continue;
        const std::int64_t label = parse_int(tok, row, source.string());
        if (label < 0 || label >= class_count)
          throw ValidationError("label " + std::to_string(label) + " out of range [0," +
                                std::to_string(class_count) + ") at row " +
                                std::to_string(row) + ": " + source.string());
        indices.push_back(static_cast<std::int32_t>(label));
      }
      rows.push_back(std::move(indices));
    }
    ++row;
  }

  if (!multi) {
    LabelVector lv;
    lv.entries = std::move(single);
    lv.class_count = class_count;
    return lv;
  }
  MultiLabelMatrix mm;
  mm.rows = rows.size();
  mm.cols = static_cast<std::size_t>(class_count);
  mm.data.assign(mm.rows * mm.cols, 0);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::int32_t c : rows[i]) mm.set(i, static_cast<std::size_t>(c), true);
  return mm;
}

void save_labels(const LabelVector& labels, const std::filesystem::path& destination) {
  std::ofstream out(destination, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + destination.string());
  out << "sample_id,label\n";
  for (std::size_t i = 0; i < labels.entries.size(); ++i)
    out << i << ',' << labels.entries[i] << '\n';
  if (!out) throw IoError("write failed: " + destination.string());
}

void save_labels(const MultiLabelMatrix& labels, const std::filesystem::path& destination) {
  std::ofstream out(destination, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + destination.string());
  out << "sample_id,labels\n";
  for (std::size_t i = 0; i < labels.rows; ++i) {
    out << i << ',';
    bool first = true;
    for (std::size_t c = 0; c < labels.cols; ++c) {
      if (!labels(i, c)) continue;
      if (!first) out << ';';
      out << c;
      first = false;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + destination.string());
}

DatasetManifest load_manifest(const std::filesystem::path& source) {
  std::ifstream in(source);
  if (!in) throw IoError("cannot open: " + source.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("manifest is not valid JSON: " + source.string() + " (" + e.what() + ")");
  }

  const auto base = source.has_parent_path() ? source.parent_path()
                                             : std::filesystem::path(".");
  auto resolve = [&](const std::string& key) -> std::filesystem::path {
    if (!j.contains(key))
      throw ConfigError("manifest missing key '" + key + "': " + source.string());
    std::filesystem::path p = j.at(key).get<std::string>();
    return p.is_absolute() ? p : base / p;
  };

  DatasetManifest m;
  m.features = resolve("features");
  m.metadata_embeddings = resolve("metadata_embeddings");
  m.label_descriptions = resolve("label_descriptions");
  m.labels = resolve("labels");
  if (j.contains("cnn_labels")) m.cnn_labels = resolve("cnn_labels");
  if (j.contains("ground_truth")) m.ground_truth = resolve("ground_truth");
  if (!j.contains("sample_count") || !j.contains("class_count"))
    throw ConfigError("manifest missing sample_count/class_count: " + source.string());
  m.sample_count = j.at("sample_count").get<std::size_t>();
  m.class_count = j.at("class_count").get<std::size_t>();
  if (j.contains("embedding_dims")) {
    const auto& d = j.at("embedding_dims");
    if (d.contains("visual")) m.visual_dim = d.at("visual").get<std::size_t>();
    if (d.contains("text")) m.text_dim = d.at("text").get<std::size_t>();
  }
  return m;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& destination) {
  nlohmann::json j;
  j["features"] = manifest.features.string();
  j["metadata_embeddings"] = manifest.metadata_embeddings.string();
  j["label_descriptions"] = manifest.label_descriptions.string();
  j["labels"] = manifest.labels.string();
  if (manifest.cnn_labels) j["cnn_labels"] = manifest.cnn_labels->string();
  if (manifest.ground_truth) j["ground_truth"] = manifest.ground_truth->string();
  j["sample_count"] = manifest.sample_count;
  j["class_count"] = manifest.class_count;
  if (manifest.visual_dim || manifest.text_dim) {
    nlohmann::json d;
    if (manifest.visual_dim) d["visual"] = *manifest.visual_dim;
    if (manifest.text_dim) d["text"] = *manifest.text_dim;
    j["embedding_dims"] = d;
  }
  std::ofstream out(destination, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + destination.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + destination.string());
}

}  // namespace vsgraph

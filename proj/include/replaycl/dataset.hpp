#ifndef REPLAYCL_DATASET_HPP
#define REPLAYCL_DATASET_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "replaycl/rng.hpp"

namespace replaycl {

struct IngestionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Labeled real-valued feature vectors with a dense class catalog.
// Features are stored row-major, count x feature_dim.
struct Dataset {
  std::size_t feature_dim = 0;
  std::size_t class_count = 0;
  std::vector<float> features;
  std::vector<std::uint32_t> labels;
  std::vector<std::string> class_names;  // optional; original label tokens

  std::size_t size() const { return labels.size(); }

  const float* row(std::size_t i) const { return &features[i * feature_dim]; }

  void push_row(const std::vector<float>& f, std::uint32_t label) {
    features.insert(features.end(), f.begin(), f.end());
    labels.push_back(label);
  }

  std::vector<std::size_t> class_sizes() const {
    std::vector<std::size_t> sizes(class_count, 0);
    for (auto l : labels) ++sizes[l];
    return sizes;
  }

  void validate() const {
    if (features.size() != labels.size() * feature_dim)
      throw IngestionError("dataset: feature buffer size mismatch");
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] >= class_count)
        throw IngestionError("dataset: label out of range at row " +
                             std::to_string(i));
  }
};

namespace detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace detail

enum class DatasetFormat { binary, csv };

// Binary layout: "RCL1", u32 m, u32 n, u64 count, then count records of
// (m x f32 features, u32 label), all little-endian.
inline void save_dataset(const Dataset& ds, const std::string& path,
                         DatasetFormat format) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IngestionError("dataset: cannot open for write: " + path);
  if (format == DatasetFormat::binary) {
    os.write("RCL1", 4);
    detail::write_u32(os, static_cast<std::uint32_t>(ds.feature_dim));
    detail::write_u32(os, static_cast<std::uint32_t>(ds.class_count));
    detail::write_u64(os, ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
      for (std::size_t j = 0; j < ds.feature_dim; ++j) {
        float f = ds.features[i * ds.feature_dim + j];
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        detail::write_u32(os, bits);
      }
      detail::write_u32(os, ds.labels[i]);
    }
  } else {
    for (std::size_t j = 0; j < ds.feature_dim; ++j) os << "f" << j << ",";
    os << "label\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
      for (std::size_t j = 0; j < ds.feature_dim; ++j)
        os << ds.features[i * ds.feature_dim + j] << ",";
      if (!ds.class_names.empty())
        os << ds.class_names[ds.labels[i]] << "\n";
      else
        os << ds.labels[i] << "\n";
    }
  }
  if (!os) throw IngestionError("dataset: write failure: " + path);
}

inline Dataset load_binary_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IngestionError("dataset: cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "RCL1", 4) != 0)
    throw IngestionError("dataset: bad magic in " + path);
  Dataset ds;
  ds.feature_dim = detail::read_u32(is);
  ds.class_count = detail::read_u32(is);
  std::uint64_t count = detail::read_u64(is);
  if (!is) throw IngestionError("dataset: truncated header in " + path);
  if (ds.feature_dim == 0 || ds.class_count == 0)
    throw IngestionError("dataset: malformed header (zero m or n) in " + path);
  ds.features.resize(count * ds.feature_dim);
  ds.labels.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < ds.feature_dim; ++j) {
      std::uint32_t bits = detail::read_u32(is);
      std::memcpy(&ds.features[i * ds.feature_dim + j], &bits, 4);
    }
    ds.labels[i] = detail::read_u32(is);
    if (!is)
      throw IngestionError("dataset: truncated at byte offset " +
                           std::to_string(16 + i * (ds.feature_dim * 4 + 4)) +
                           " (record " + std::to_string(i) + ") in " + path);
  }
  ds.validate();
  return ds;
}

// CSV with header f0,...,f{m-1},label. Label tokens are remapped to a dense
// 0..n-1 range (sorted token order); originals kept in class_names.
inline Dataset load_csv_dataset(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IngestionError("dataset: cannot open: " + path);
  std::string line;
  if (!std::getline(is, line))
    throw IngestionError("dataset: empty file: " + path);
  std::size_t m = 0;
  {
    std::stringstream ss(line);
    std::string tok;
    std::vector<std::string> header;
    while (std::getline(ss, tok, ',')) header.push_back(tok);
    if (header.empty() || header.back() != "label")
      throw IngestionError("dataset: malformed header (expected trailing "
                           "'label' column) in " + path);
    m = header.size() - 1;
    for (std::size_t j = 0; j < m; ++j)
      if (header[j] != "f" + std::to_string(j))
        throw IngestionError("dataset: malformed header column " +
                             std::to_string(j) + " in " + path);
  }
  std::vector<std::vector<float>> rows;
  std::vector<std::string> tokens;
  std::size_t row_index = 0;
  while (std::getline(is, line)) {
    ++row_index;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<std::string> cells;
    while (std::getline(ss, tok, ',')) cells.push_back(tok);
    if (cells.size() != m + 1)
      throw IngestionError("dataset: row " + std::to_string(row_index) +
                           " has " + std::to_string(cells.size()) +
                           " columns, expected " + std::to_string(m + 1));
    std::vector<float> f(m);
    for (std::size_t j = 0; j < m; ++j) {
      try {
        std::size_t pos = 0;
        f[j] = std::stof(cells[j], &pos);
        if (pos != cells[j].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw IngestionError("dataset: non-numeric value in row " +
                             std::to_string(row_index) + " column " +
                             std::to_string(j));
      }
    }
    rows.push_back(std::move(f));
    tokens.push_back(cells[m]);
  }
  // Dense remap in sorted token order.
  std::map<std::string, std::uint32_t> remap;
  for (const auto& t : tokens) remap.emplace(t, 0);
  std::uint32_t next = 0;
  for (auto& [k, v] : remap) v = next++;
  Dataset ds;
  ds.feature_dim = m;
  ds.class_count = remap.size();
  ds.class_names.resize(remap.size());
  for (const auto& [k, v] : remap) ds.class_names[v] = k;
  for (std::size_t i = 0; i < rows.size(); ++i)
    ds.push_row(rows[i], remap[tokens[i]]);
  ds.validate();
  return ds;
}

inline Dataset load_dataset(const std::string& path, DatasetFormat format) {
  return format == DatasetFormat::binary ? load_binary_dataset(path)
                                         : load_csv_dataset(path);
}

// Desk-scale Gaussian mixture stand-in for the malware feature corpora.
struct SyntheticSpec {
  std::size_t class_count = 10;
  std::size_t feature_dim = 64;
  std::vector<std::size_t> samples_per_class;  // broadcast if size 1
  double cluster_std = 1.0;
  double cluster_separation = 8.0;
  std::uint64_t seed = 0;

  std::size_t samples_for(std::size_t c) const {
    if (samples_per_class.empty()) return 100;
    if (samples_per_class.size() == 1) return samples_per_class[0];
    return samples_per_class.at(c);
  }

  void validate() const {
    if (feature_dim < 2)
      throw std::invalid_argument("synthetic: feature_dim must be >= 2");
    if (class_count < 1)
      throw std::invalid_argument("synthetic: class_count must be >= 1");
    if (samples_per_class.size() > 1 &&
        samples_per_class.size() != class_count)
      throw std::invalid_argument(
          "synthetic: samples_per_class must have 1 or class_count entries");
    for (std::size_t c = 0; c < class_count; ++c)
      if (samples_for(c) < 2)
        throw std::invalid_argument(
            "synthetic: every class needs >= 2 samples");
  }
};

// One Gaussian cluster per class. Centers are uniform on [0,a]^m with a
// chosen so that the expected inter-center distance, which for uniform
// corners is a*sqrt(m/6), equals cluster_separation * cluster_std.
inline Dataset make_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  RngEngine rng(spec.seed);
  double m = static_cast<double>(spec.feature_dim);
  double a = spec.cluster_separation * spec.cluster_std / std::sqrt(m / 6.0);
  Dataset ds;
  ds.feature_dim = spec.feature_dim;
  ds.class_count = spec.class_count;
  std::vector<std::vector<double>> centers(spec.class_count);
  for (auto& c : centers) {
    c.resize(spec.feature_dim);
    for (auto& v : c) v = rng.uniform(0.0, a);
  }
  for (std::size_t c = 0; c < spec.class_count; ++c) {
    std::size_t count = spec.samples_for(c);
    for (std::size_t i = 0; i < count; ++i) {
      std::vector<float> f(spec.feature_dim);
      for (std::size_t j = 0; j < spec.feature_dim; ++j)
        f[j] = static_cast<float>(centers[c][j] +
                                  spec.cluster_std * rng.gaussian());
      ds.push_row(f, static_cast<std::uint32_t>(c));
    }
  }
  return ds;
}

}  // namespace replaycl

#endif  // REPLAYCL_DATASET_HPP

//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "xnornet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>

namespace xnornet {

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open '" + path + "'");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

void require_bytes(const std::string& path, std::size_t expected, std::size_t actual) {
  if (actual < expected) {
    throw DatasetError("'" + path + "' is truncated: expected " + std::to_string(expected) + " bytes, got " +
                       std::to_string(actual));
  }
}

// Returns the dims of an IDX file after checking magic and payload size.
std::vector<std::size_t> idx_dims(const std::string& path, const std::vector<std::uint8_t>& b,
                                  std::uint32_t magic, std::size_t& offset) {
  require_bytes(path, 4, b.size());
  const std::uint32_t found = be32(b, 0);
  if (found != magic) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "bad magic 0x%08x (expected 0x%08x)", found, magic);
    throw DatasetError("'" + path + "': " + buf);
  }
  const std::size_t rank = magic & 0xffu;
  require_bytes(path, 4 + 4 * rank, b.size());
  std::vector<std::size_t> dims;
  std::size_t count = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    dims.push_back(be32(b, 4 + 4 * i));
    count *= dims.back();
  }
  offset = 4 + 4 * rank;
  require_bytes(path, offset + count, b.size());
  if (b.size() != offset + count) {
    throw DatasetError("'" + path + "': expected " + std::to_string(offset + count) + " bytes, got " +
                       std::to_string(b.size()));
  }
  return dims;
}

int checked_label(const std::string& path, std::uint8_t v, std::size_t index, std::size_t classes) {
  if (v >= classes) {
    throw DatasetError("'" + path + "': label " + std::to_string(v) + " of sample " + std::to_string(index) +
                       " outside [0, " + std::to_string(classes) + ")");
  }
  return v;
}

}  // namespace

Shape Dataset::item_shape() const {
  const auto& s = images.shape();
  return Shape{s[1], s[2], s[3]};
}

Tensor Dataset::gather_images(const std::vector<std::size_t>& indices) const {
  const Shape item = item_shape();
  const std::size_t n = item.element_count();
  Tensor out(Shape{indices.size(), item[0], item[1], item[2]});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= size()) throw std::out_of_range("dataset: index out of range");
    std::copy_n(images.ptr() + indices[i] * n, n, out.ptr() + i * n);
  }
  return out;
}

std::vector<int> Dataset::gather_labels(const std::vector<std::size_t>& indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(labels.at(i));
  return out;
}

Dataset Dataset::head(std::size_t count) const {
  if (count >= size()) return *this;
  std::vector<std::size_t> idx(count);
  for (std::size_t i = 0; i < count; ++i) idx[i] = i;
  return Dataset{gather_images(idx), gather_labels(idx), classes};
}

Dataset read_idx(const std::string& images_path, const std::string& labels_path, std::size_t classes) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);
  std::size_t img_off = 0, lab_off = 0;
  const auto idims = idx_dims(images_path, img, 0x00000803u, img_off);
  const auto ldims = idx_dims(labels_path, lab, 0x00000801u, lab_off);
  if (idims[0] != ldims[0]) {
    throw DatasetError("'" + images_path + "' holds " + std::to_string(idims[0]) + " images but '" + labels_path +
                       "' holds " + std::to_string(ldims[0]) + " labels");
  }
  if (idims[0] == 0 || idims[1] == 0 || idims[2] == 0) throw DatasetError("'" + images_path + "': empty dataset");
  Dataset d;
  d.classes = classes;
  d.images = Tensor(Shape{idims[0], 1, idims[1], idims[2]});
  for (std::size_t i = 0; i < d.images.size(); ++i) d.images[i] = static_cast<Real>(img[img_off + i]) / Real{255};
  d.labels.reserve(idims[0]);
  for (std::size_t i = 0; i < ldims[0]; ++i) d.labels.push_back(checked_label(labels_path, lab[lab_off + i], i, classes));
  return d;
}

Dataset read_cifar(const std::vector<std::string>& paths, std::size_t classes) {
  constexpr std::size_t kPixels = 3 * 32 * 32;
  constexpr std::size_t kRecord = 1 + kPixels;
  std::vector<std::vector<std::uint8_t>> files;
  std::size_t total = 0;
  for (const auto& p : paths) {
    files.push_back(read_file(p));
    const std::size_t bytes = files.back().size();
    if (bytes == 0 || bytes % kRecord != 0) {
      const std::size_t expected = (bytes / kRecord + 1) * kRecord;
      throw DatasetError("'" + p + "' is truncated: expected " + std::to_string(expected) + " bytes (a multiple of " +
                         std::to_string(kRecord) + "), got " + std::to_string(bytes));
    }
    total += bytes / kRecord;
  }
  if (total == 0) throw DatasetError("no CIFAR records");
  Dataset d;
  d.classes = classes;
  d.images = Tensor(Shape{total, 3, 32, 32});
  std::size_t n = 0;
  for (std::size_t f = 0; f < files.size(); ++f) {
    const auto& b = files[f];
    for (std::size_t r = 0; r * kRecord < b.size(); ++r, ++n) {
      d.labels.push_back(checked_label(paths[f], b[r * kRecord], n, classes));
      for (std::size_t i = 0; i < kPixels; ++i) {
        d.images[n * kPixels + i] = static_cast<Real>(b[r * kRecord + 1 + i]) / Real{255};
      }
    }
  }
  return d;
}

Normalization compute_normalization(const Dataset& data) {
  const auto& s = data.images.shape();
  const std::size_t channels = s[1];
  const std::size_t plane = s[2] * s[3];
  Normalization norm;
  for (std::size_t c = 0; c < channels; ++c) {
    double sum = 0, sq = 0;
    for (std::size_t b = 0; b < s[0]; ++b) {
      const Real* p = data.images.ptr() + (b * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) sum += p[i];
    }
    const double count = static_cast<double>(s[0] * plane);
    const double mean = sum / count;
    for (std::size_t b = 0; b < s[0]; ++b) {
      const Real* p = data.images.ptr() + (b * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) sq += (p[i] - mean) * (p[i] - mean);
    }
    const double sd = std::sqrt(sq / count);
    norm.mean.push_back(static_cast<Real>(mean));
    norm.stddev.push_back(static_cast<Real>(sd > 0 ? sd : 1.0));
  }
  return norm;
}

void normalize(Dataset& data, const Normalization& norm) {
  const auto& s = data.images.shape();
  const std::size_t channels = s[1];
  if (norm.mean.size() != channels || norm.stddev.size() != channels) {
    throw ShapeError("normalize: statistics for " + std::to_string(norm.mean.size()) + " channels, data has " +
                     std::to_string(channels));
  }
  const std::size_t plane = s[2] * s[3];
  for (std::size_t b = 0; b < s[0]; ++b) {
    for (std::size_t c = 0; c < channels; ++c) {
      Real* p = data.images.ptr() + (b * channels + c) * plane;
      const Real inv = Real{1} / norm.stddev[c];
      for (std::size_t i = 0; i < plane; ++i) p[i] = (p[i] - norm.mean[c]) * inv;
    }
  }
}

DataSplits load_splits(const std::string& directory) {
  namespace fs = std::filesystem;
  const fs::path dir(directory);
  if (!fs::is_directory(dir)) throw DatasetError("data directory '" + directory + "' does not exist");
  DataSplits s;
  if (fs::exists(dir / "train-images-idx3-ubyte")) {
    s.format = DataFormat::idx;
    s.train = read_idx((dir / "train-images-idx3-ubyte").string(), (dir / "train-labels-idx1-ubyte").string());
    s.val = read_idx((dir / "t10k-images-idx3-ubyte").string(), (dir / "t10k-labels-idx1-ubyte").string());
  } else if (fs::exists(dir / "data_batch_1.bin")) {
    s.format = DataFormat::cifar;
    std::vector<std::string> train;
    for (int i = 1; i <= 5; ++i) {
      const fs::path p = dir / ("data_batch_" + std::to_string(i) + ".bin");
      if (fs::exists(p)) train.push_back(p.string());
    }
    s.train = read_cifar(train);
    s.val = read_cifar({(dir / "test_batch.bin").string()});
  } else {
    throw DatasetError("'" + directory + "' holds neither IDX (train-images-idx3-ubyte) nor CIFAR (data_batch_1.bin) files");
  }
  const Normalization norm = compute_normalization(s.train);
  normalize(s.train, norm);
  normalize(s.val, norm);
  return s;
}

}  // namespace xnornet

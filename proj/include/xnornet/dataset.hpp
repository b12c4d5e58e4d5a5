//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "xnornet/tensor.hpp"

namespace xnornet {

enum class DataFormat { idx, cifar };

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-channel normalization statistics.
struct Normalization {
  std::vector<Real> mean;
  std::vector<Real> stddev;
};

struct Dataset {
  Tensor images;  // (N, c, h, w)
  std::vector<int> labels;
  std::size_t classes = 10;

  std::size_t size() const noexcept { return labels.size(); }
  Shape item_shape() const;

  /// Images and labels at `indices`, in that order.
  Tensor gather_images(const std::vector<std::size_t>& indices) const;
  std::vector<int> gather_labels(const std::vector<std::size_t>& indices) const;

  /// First `count` samples (all when count >= size()).
  Dataset head(std::size_t count) const;
};

/// Reads an IDX image file (magic 0x00000803) and its label file
/// (0x00000801). Pixels are scaled to [0, 1].
Dataset read_idx(const std::string& images_path, const std::string& labels_path, std::size_t classes = 10);

/// Reads CIFAR-10 binary batches: records of 1 label byte + 3072 pixel
/// bytes (3x32x32, channel-major). Pixels are scaled to [0, 1].
Dataset read_cifar(const std::vector<std::string>& paths, std::size_t classes = 10);

/// Training and validation splits found in a directory.
struct DataSplits {
  Dataset train;
  Dataset val;
  DataFormat format = DataFormat::idx;
};

/// Looks for train-images-idx3-ubyte / t10k-images-idx3-ubyte (and labels),
/// or data_batch_*.bin / test_batch.bin. The splits come back normalized by
/// the training split's statistics.
DataSplits load_splits(const std::string& directory);

Normalization compute_normalization(const Dataset& data);
void normalize(Dataset& data, const Normalization& norm);

}  // namespace xnornet

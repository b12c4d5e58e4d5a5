//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "xnornet/network.hpp"

namespace xnornet {

inline constexpr std::uint16_t kModelVersion = 1;

class ModelFormatError : public std::runtime_error {
 public:
  enum class Kind { bad_magic, unsupported_version, size_mismatch, truncated, invalid_record };

  ModelFormatError(Kind kind, const std::string& message);
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// File layout, little-endian:
///   "XBN1" | u16 version | u16 layer count | u32 c, h, w of the input
///   per layer: u8 kind | u8 flags | u8 input bits | u8 0 |
///              u32 out, in, kh, kw, stride, pad | u64 payload bytes | payload
/// flags: 1 binarize_input, 2 binarize_weights, 4 learned_scale, 8 real weights.
/// Payloads: conv = f32 weights; binconv = u64 sign words per filter, f32
/// alpha per filter, then f32 real weights if flagged; batchnorm = f32
/// running mean, running var, gamma, beta (per channel) and f32 epsilon.
std::vector<std::uint8_t> serialize_model(const Network& net, bool include_real_weights);
Network deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const Network& net, const std::string& path, bool include_real_weights);
Network load_model(const std::string& path);

/// Re-binarizes and drops real weights of every binarized layer.
void strip_real_weights(Network& net);

/// Text table of the layers, their shapes and stored sizes.
std::string describe(const Network& net);

enum class FootprintMode { float32, binary };

/// A layer of `filters` weight filters of `filter_size` parameters each.
struct FootprintLayer {
  std::string name;
  std::size_t filters = 0;
  std::size_t filter_size = 0;
  /// Counted at full precision in binary mode when false.
  bool binarizable = true;
};

/// float32: 4 bytes per parameter. binary: ceil(n / 64) * 8 + 4 bytes per
/// binarizable filter, 4 bytes per parameter elsewhere.
std::uint64_t memory_footprint(const std::vector<FootprintLayer>& arch, FootprintMode mode);
std::uint64_t layer_footprint(const FootprintLayer& layer, FootprintMode mode);

/// Weight layers of a network (batchnorm counted as 4 values per channel).
std::vector<FootprintLayer> footprint_layers(const Network& net);

/// Reference architectures; first and last layers are not binarizable.
/// AlexNet is the two-group variant without biases (60.95M weights).
std::vector<FootprintLayer> alexnet_layers();
std::vector<FootprintLayer> resnet18_layers();
std::vector<FootprintLayer> vgg19_layers();

}  // namespace xnornet

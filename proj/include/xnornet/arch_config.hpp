//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "xnornet/layers.hpp"
#include "xnornet/network.hpp"

namespace xnornet {

enum class NetMode { full, bwn, xnor };

/// Layer order inside a binary-input block: Conv-BN-Act-Pool or
/// BN-Act-Conv-Pool.
enum class BlockOrder { cbap, bacp };

std::string to_string(NetMode mode);
std::string to_string(BlockOrder order);
NetMode parse_net_mode(const std::string& text);
BlockOrder parse_block_order(const std::string& text);

struct ArchOptions {
  NetMode mode = NetMode::full;
  BlockOrder order = BlockOrder::bacp;
  /// Learn the per-filter scale instead of using mean |W|.
  bool learned_scale = false;
  /// Input quantization bits for XNOR blocks.
  int input_bits = 1;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line), message_(message) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::size_t line_;
  std::string message_;
};

struct Architecture {
  Shape input;
  std::vector<LayerSpec> layers;
};

/// Parses the line-oriented architecture format and expands `block` lines
/// for the requested mode and order.
Architecture parse_architecture(const std::string& text, const ArchOptions& options);
Architecture load_architecture(const std::string& path, const ArchOptions& options);

Network build_network(const Architecture& arch);

}  // namespace xnornet

//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "xnornet/layers.hpp"

namespace xnornet {

/// Saved state of one training-mode forward pass. backward() consumes it.
struct GradientTape {
  std::vector<TapeEntry> entries;
  bool recorded = false;
  bool consumed = false;
};

/// Points of a training step observed through Network::set_observer.
enum class NetEvent { binarize, forward, backward, update };

/// Straight chain of layers over (N, c, h, w) batches.
class Network {
 public:
  /// Validates the shape chain and that the first and last trainable layers
  /// are full precision. `input` is the per-sample shape (c, h, w).
  Network(Shape input, const std::vector<LayerSpec>& specs);

  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  const Shape& input_shape() const noexcept { return input_; }
  /// Per-sample shape of the logits.
  const Shape& output_shape() const noexcept { return shapes_.back(); }
  /// Per-sample input shape of layer i.
  const Shape& layer_input_shape(std::size_t i) const { return shapes_.at(i); }

  std::size_t layer_count() const noexcept { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }
  std::vector<LayerSpec> specs() const;

  /// Logits for a batch. In training mode `tape` must be non-null.
  Tensor forward(const Tensor& batch, Mode mode, GradientTape* tape = nullptr);
  /// Accumulates parameter gradients and returns dC/d(batch).
  Tensor backward(GradientTape& tape, const Tensor& loss_grad, const GradientOptions& options = {});

  /// Re-derives (B, alpha) for every binarized layer from its real weights.
  void binarize();

  std::vector<Parameter*> parameters();
  void zero_grad();

  /// Centered uniform init with bound sqrt(3 / fan_in) for every conv and
  /// binconv layer, followed by binarize().
  void initialize(std::uint64_t seed);

  void set_observer(std::function<void(NetEvent)> observer) { observer_ = std::move(observer); }
  void notify(NetEvent event) const {
    if (observer_) observer_(event);
  }

 private:
  Shape input_;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<Shape> shapes_;  // shapes_[i] = input of layer i; back() = output
  std::function<void(NetEvent)> observer_;
};

}  // namespace xnornet

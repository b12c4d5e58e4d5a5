//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "xnornet/network.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace xnornet {

namespace {

bool trainable(LayerKind kind) { return kind == LayerKind::conv || kind == LayerKind::binconv; }

std::string where(std::size_t i, const LayerSpec& spec) {
  return "layer " + std::to_string(i) + " (" + to_string(spec.kind) + ")";
}

}  // namespace

Network::Network(Shape input, const std::vector<LayerSpec>& specs) : input_(std::move(input)) {
  if (input_.rank() != 3) throw ShapeError("network: input shape must be (c, h, w), got " + input_.str());
  if (specs.empty()) throw std::invalid_argument("network: no layers");

  std::size_t first = specs.size(), last = specs.size();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (!trainable(specs[i].kind)) continue;
    if (first == specs.size()) first = i;
    last = i;
  }
  if (first == specs.size()) throw std::invalid_argument("network: no trainable layer");
  for (std::size_t i : {first, last}) {
    const LayerSpec& s = specs[i];
    if (s.kind != LayerKind::conv || s.binarize_input || s.binarize_weights) {
      throw std::invalid_argument("network: " + where(i, s) +
                                  " is the first or last trainable layer and must not be binarized");
    }
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const LayerSpec& s = specs[i];
    if (s.kind == LayerKind::conv && (s.binarize_input || s.binarize_weights)) {
      throw std::invalid_argument("network: " + where(i, s) + " is full precision; use binconv");
    }
    if (s.kind == LayerKind::softmax_nll && i + 1 != specs.size()) {
      throw std::invalid_argument("network: softmax must be the final layer");
    }
  }

  shapes_.push_back(input_);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    LayerSpec s = specs[i];
    const Shape& in = shapes_.back();
    if (s.kind == LayerKind::batchnorm || s.kind == LayerKind::binactiv || s.kind == LayerKind::relu ||
        s.kind == LayerKind::maxpool || s.kind == LayerKind::avgpool) {
      if (s.in_channels == 0) s.in_channels = in[0];
      if (s.out_channels == 0) s.out_channels = in[0];
    }
    if (s.in_channels != in[0]) {
      throw ShapeError("network: " + where(i, s) + " expects " + std::to_string(s.in_channels) +
                       " channels but receives " + in.str());
    }
    auto layer = make_layer(s);
    try {
      shapes_.push_back(layer->output_shape(in));
    } catch (const std::exception& e) {
      throw ShapeError("network: " + where(i, s) + " cannot take input " + in.str() + ": " + e.what());
    }
    layers_.push_back(std::move(layer));
  }
}

std::vector<LayerSpec> Network::specs() const {
  std::vector<LayerSpec> out;
  out.reserve(layers_.size());
  for (const auto& l : layers_) out.push_back(l->spec());
  return out;
}

Tensor Network::forward(const Tensor& batch, Mode mode, GradientTape* tape) {
  if (batch.shape().rank() != 4 || Shape{batch.shape()[1], batch.shape()[2], batch.shape()[3]} != input_) {
    throw ShapeError("network: batch " + batch.shape().str() + " does not match input " + input_.str());
  }
  if (mode == Mode::train) {
    if (!tape) throw std::invalid_argument("network: training-mode forward needs a gradient tape");
    tape->entries.assign(layers_.size(), TapeEntry{});
    tape->recorded = true;
    tape->consumed = false;
  }
  notify(NetEvent::forward);
  Activation act{batch, {}};
  TapeEntry scratch;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    TapeEntry& entry = mode == Mode::train ? tape->entries[i] : scratch;
    act = layers_[i]->forward(act, mode, entry);
  }
  return std::move(act.values);
}

Tensor Network::backward(GradientTape& tape, const Tensor& loss_grad, const GradientOptions& options) {
  if (!tape.recorded) throw std::logic_error("network: backward without a training-mode forward");
  if (tape.consumed) throw std::logic_error("network: gradient tape already consumed");
  if (tape.entries.size() != layers_.size()) throw std::logic_error("network: tape does not match network");
  notify(NetEvent::backward);
  Tensor grad = loss_grad;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    grad = layers_[i]->backward(tape.entries[i], grad, options);
  }
  tape.consumed = true;
  tape.entries.clear();
  return grad;
}

void Network::binarize() {
  notify(NetEvent::binarize);
  for (auto& l : layers_) {
    if (auto* b = dynamic_cast<BinConvLayer*>(l.get())) b->binarize();
  }
}

std::vector<Parameter*> Network::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_) {
    for (Parameter* p : l->parameters()) out.push_back(p);
  }
  return out;
}

void Network::zero_grad() {
  for (Parameter* p : parameters()) p->grad = Tensor(p->value.shape());
}

void Network::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& l : layers_) {
    Parameter* w = nullptr;
    if (auto* c = dynamic_cast<ConvLayer*>(l.get())) w = &c->weights();
    if (auto* b = dynamic_cast<BinConvLayer*>(l.get()); b && b->has_real_weights()) w = &b->real_weights();
    if (!w) continue;
    const std::size_t fan_in = w->value.size() / w->value.shape()[0];
    const auto bound = static_cast<Real>(std::sqrt(3.0 / static_cast<double>(fan_in)));
    std::uniform_real_distribution<Real> dist(-bound, bound);
    for (std::size_t i = 0; i < w->value.size(); ++i) w->value[i] = dist(rng);
  }
  binarize();
}

}  // namespace xnornet

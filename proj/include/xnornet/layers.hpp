//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "xnornet/binarize.hpp"
#include "xnornet/tensor.hpp"

namespace xnornet {

enum class LayerKind : std::uint8_t {
  conv = 1,
  binconv = 2,
  binactiv = 3,
  batchnorm = 4,
  relu = 5,
  maxpool = 6,
  avgpool = 7,
  softmax_nll = 8,
};

std::string to_string(LayerKind kind);

/// One layer of a straight-chain network.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  /// Kernel extent, stride and pad for conv, binconv and pooling layers.
  ConvGeometry geom;
  bool binarize_input = false;
  bool binarize_weights = false;
  /// Per-filter scale learned as a parameter instead of mean |W|.
  bool learned_scale = false;
  /// Input quantization level for binactiv / XNOR binconv (1 = sign).
  int input_bits = 1;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

enum class Mode { train, eval };

/// d sign / dr surrogate: the indicator 1{|r| <= 1}, or r * 1{|r| <= 1}.
enum class SignGradient { indicator, scaled_indicator };

/// dC/dW from dC/dW~: the per-element form g~ (1/n + sign'(W) alpha), or the
/// full Jacobian of alpha(W) sign(W) with the surrogate sign derivative.
enum class WeightGradientForm { paper_diagonal, full_jacobian };

struct GradientOptions {
  SignGradient sign = SignGradient::indicator;
  WeightGradientForm weight = WeightGradientForm::paper_diagonal;
  /// Replace the upstream gradient by max|g| sign(g) before the
  /// input-gradient convolution of binarized layers.
  bool binary_gradient = false;
};

/// Values flowing between layers. A binary activation also forwards the
/// channel abs-mean of its real input, (N, h, w), so the next binary
/// convolution can form its beta map.
struct Activation {
  Tensor values;
  std::optional<Tensor> abs_mean;
};

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  /// Real weights of binarized layers are kept inside [-1, 1].
  bool clamp_unit = false;
};

/// What a layer saved during a training-mode forward pass.
struct TapeEntry {
  std::vector<Tensor> saved;
};

class Layer {
 public:
  explicit Layer(LayerSpec spec) : spec_(std::move(spec)) {}
  virtual ~Layer() = default;

  const LayerSpec& spec() const noexcept { return spec_; }

  /// Per-sample output shape (c, h, w) for a per-sample input shape.
  virtual Shape output_shape(const Shape& input) const = 0;

  /// `tape` is written only in training mode.
  virtual Activation forward(const Activation& input, Mode mode, TapeEntry& tape) = 0;

  /// Accumulates parameter gradients and returns dC/d(input values).
  virtual Tensor backward(const TapeEntry& tape, const Tensor& grad_out,
                          const GradientOptions& options) = 0;

  virtual std::vector<Parameter*> parameters() { return {}; }

 protected:
  LayerSpec spec_;
};

/// Full-precision convolution (also used for fully connected layers).
class ConvLayer final : public Layer {
 public:
  explicit ConvLayer(LayerSpec spec);
  Shape output_shape(const Shape& input) const override;
  Activation forward(const Activation& input, Mode mode, TapeEntry& tape) override;
  Tensor backward(const TapeEntry& tape, const Tensor& grad_out, const GradientOptions& options) override;
  std::vector<Parameter*> parameters() override { return {&weights_}; }

  Parameter& weights() noexcept { return weights_; }
  const Parameter& weights() const noexcept { return weights_; }

 private:
  Parameter weights_;
};

/// Convolution with binarized weights; with binarize_input it is the XNOR
/// convolution, otherwise the binary-weight (add/subtract) convolution.
class BinConvLayer final : public Layer {
 public:
  explicit BinConvLayer(LayerSpec spec);
  Shape output_shape(const Shape& input) const override;
  Activation forward(const Activation& input, Mode mode, TapeEntry& tape) override;
  Tensor backward(const TapeEntry& tape, const Tensor& grad_out, const GradientOptions& options) override;
  std::vector<Parameter*> parameters() override;

  /// B = sign(W), alpha = mean |W| for every filter from the real weights.
  void binarize();

  bool has_real_weights() const noexcept { return real_weights_.has_value(); }
  /// Drops the real weights; the layer then only runs inference.
  void drop_real_weights() noexcept { real_weights_.reset(); }

  Parameter& real_weights();
  const Parameter& real_weights() const;
  Parameter& scale();
  const Parameter& scale() const;
  const BinaryFilterBank& bank() const noexcept { return bank_; }
  void set_bank(BinaryFilterBank bank);
  void set_real_weights(Tensor weights);

  /// Incremented by every binarize() call.
  std::uint64_t binarize_count() const noexcept { return binarize_count_; }

 private:
  BinaryFilterBank effective_bank() const;

  std::optional<Parameter> real_weights_;
  std::optional<Parameter> scale_;
  BinaryFilterBank bank_;
  std::uint64_t binarize_count_ = 0;
};

/// sign(x) (or the k-bit quantizer) with a straight-through gradient.
class BinActivLayer final : public Layer {
 public:
  explicit BinActivLayer(LayerSpec spec) : Layer(std::move(spec)) {}
  Shape output_shape(const Shape& input) const override { return input; }
  Activation forward(const Activation& input, Mode mode, TapeEntry& tape) override;
  Tensor backward(const TapeEntry& tape, const Tensor& grad_out, const GradientOptions& options) override;
};

struct BatchNormState {
  std::vector<Real> running_mean;
  std::vector<Real> running_var;
  Real epsilon = Real{1e-5};
  Real momentum = Real{0.1};
};

class BatchNormLayer final : public Layer {
 public:
  explicit BatchNormLayer(LayerSpec spec);
  Shape output_shape(const Shape& input) const override { return input; }
  Activation forward(const Activation& input, Mode mode, TapeEntry& tape) override;
  Tensor backward(const TapeEntry& tape, const Tensor& grad_out, const GradientOptions& options) override;
  std::vector<Parameter*> parameters() override { return {&gamma_, &beta_}; }

  Parameter& gamma() noexcept { return gamma_; }
  Parameter& beta() noexcept { return beta_; }
  const Parameter& gamma() const noexcept { return gamma_; }
  const Parameter& beta() const noexcept { return beta_; }
  BatchNormState& state() noexcept { return state_; }
  const BatchNormState& state() const noexcept { return state_; }

 private:
  Parameter gamma_;
  Parameter beta_;
  BatchNormState state_;
};

class ReluLayer final : public Layer {
 public:
  explicit ReluLayer(LayerSpec spec) : Layer(std::move(spec)) {}
  Shape output_shape(const Shape& input) const override { return input; }
  Activation forward(const Activation& input, Mode mode, TapeEntry& tape) override;
  Tensor backward(const TapeEntry& tape, const Tensor& grad_out, const GradientOptions& options) override;
};

/// Max or average pooling, depending on the spec kind.
class PoolLayer final : public Layer {
 public:
  explicit PoolLayer(LayerSpec spec) : Layer(std::move(spec)) {}
  Shape output_shape(const Shape& input) const override;
  Activation forward(const Activation& input, Mode mode, TapeEntry& tape) override;
  Tensor backward(const TapeEntry& tape, const Tensor& grad_out, const GradientOptions& options) override;
};

/// Marks the logits; the loss itself is loss_softmax_nll.
class SoftmaxNllLayer final : public Layer {
 public:
  explicit SoftmaxNllLayer(LayerSpec spec) : Layer(std::move(spec)) {}
  Shape output_shape(const Shape& input) const override { return input; }
  Activation forward(const Activation& input, Mode, TapeEntry&) override { return {input.values, {}}; }
  Tensor backward(const TapeEntry&, const Tensor& grad_out, const GradientOptions&) override { return grad_out; }
};

std::unique_ptr<Layer> make_layer(const LayerSpec& spec);

/// upstream * sign'(pre_activation): passes where |r| <= 1 (inclusive).
Tensor ste_backward_sign(const Tensor& upstream, const Tensor& pre_activation,
                         SignGradient variant = SignGradient::indicator);

/// g~_i (1/n + 1{|W_i| <= 1} alpha) for one filter, n = W.size().
Tensor weight_gradient(const Tensor& upstream_wrt_wtilde, const Tensor& weights, Real alpha,
                       SignGradient variant = SignGradient::indicator);

/// Full Jacobian of alpha(W) sign(W) for one filter:
/// g~_j alpha sign'(W_j) + sign(W_j)/n sum_i g~_i sign(W_i).
Tensor weight_gradient_full(const Tensor& upstream_wrt_wtilde, const Tensor& weights, Real alpha,
                            SignGradient variant = SignGradient::indicator);

struct LossResult {
  double loss = 0;
  /// d loss / d logits, already divided by the batch size.
  Tensor grad;
};

/// Mean softmax cross-entropy. `logits` is (N, C) or (N, C, 1, 1).
LossResult loss_softmax_nll(const Tensor& logits, const std::vector<int>& labels);

}  // namespace xnornet

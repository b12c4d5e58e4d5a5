//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "xnornet/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "xnornet/conv_kernels.hpp"
#include "xnornet/gemm_conv.hpp"

namespace xnornet {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::binconv: return "binconv";
    case LayerKind::binactiv: return "binactiv";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::avgpool: return "avgpool";
    case LayerKind::softmax_nll: return "softmax";
  }
  return "unknown";
}

namespace {

void require_batch(const Tensor& t, const char* who) {
  if (t.shape().rank() != 4) {
    throw ShapeError(std::string(who) + ": expected an (N, c, h, w) batch, got " + t.shape().str());
  }
}

Shape conv_output(const LayerSpec& spec, const Shape& in) {
  if (in.rank() != 3 || in[0] != spec.in_channels) {
    throw ShapeError(to_string(spec.kind) + ": expected " + std::to_string(spec.in_channels) +
                     " input channels, got " + in.str());
  }
  return Shape{spec.out_channels, spec.geom.output_h(in[1]), spec.geom.output_w(in[2])};
}

Tensor weight_tensor(const LayerSpec& spec) {
  return Tensor(Shape{spec.out_channels, spec.in_channels, spec.geom.kernel_h, spec.geom.kernel_w});
}

Real sign_derivative(Real r, SignGradient variant) {
  if (std::fabs(r) > Real{1}) return Real{0};
  return variant == SignGradient::indicator ? Real{1} : r;
}

Tensor quantize_tensor(const Tensor& x, int bits) {
  Tensor q(x.shape());
  if (bits == 1) {
    for (std::size_t i = 0; i < x.size(); ++i) q[i] = sign_of(x[i]);
  } else {
    for (std::size_t i = 0; i < x.size(); ++i) q[i] = quantize_kbit(x[i], bits);
  }
  return q;
}

}  // namespace

// ---------------------------------------------------------------------------

ConvLayer::ConvLayer(LayerSpec spec) : Layer(std::move(spec)) {
  weights_.name = "conv.weight";
  weights_.value = weight_tensor(spec_);
  weights_.grad = Tensor(weights_.value.shape());
}

Shape ConvLayer::output_shape(const Shape& input) const { return conv_output(spec_, input); }

Activation ConvLayer::forward(const Activation& input, Mode mode, TapeEntry& tape) {
  require_batch(input.values, "conv");
  Activation out{gemm::conv_forward(input.values, weights_.value, spec_.geom), {}};
  if (mode == Mode::train) tape.saved = {input.values};
  return out;
}

Tensor ConvLayer::backward(const TapeEntry& tape, const Tensor& grad_out, const GradientOptions&) {
  Tensor grad_in;
  gemm::conv_backward(tape.saved.at(0), weights_.value, spec_.geom, grad_out, &grad_in, &weights_.grad);
  return grad_in;
}

// ---------------------------------------------------------------------------

BinConvLayer::BinConvLayer(LayerSpec spec) : Layer(std::move(spec)) {
  spec_.binarize_weights = true;
  Parameter w;
  w.name = "binconv.weight";
  w.value = weight_tensor(spec_);
  w.grad = Tensor(w.value.shape());
  w.clamp_unit = true;
  real_weights_ = std::move(w);
  if (spec_.learned_scale) {
    Parameter s;
    s.name = "binconv.scale";
    s.value = Tensor(Shape{spec_.out_channels}, Real{1});
    s.grad = Tensor(s.value.shape());
    scale_ = std::move(s);
  }
  binarize();
}

Shape BinConvLayer::output_shape(const Shape& input) const { return conv_output(spec_, input); }

std::vector<Parameter*> BinConvLayer::parameters() {
  std::vector<Parameter*> out;
  if (real_weights_) out.push_back(&*real_weights_);
  if (scale_) out.push_back(&*scale_);
  return out;
}

Parameter& BinConvLayer::real_weights() {
  if (!real_weights_) throw std::logic_error("binconv: layer holds no real-valued weights");
  return *real_weights_;
}

const Parameter& BinConvLayer::real_weights() const {
  if (!real_weights_) throw std::logic_error("binconv: layer holds no real-valued weights");
  return *real_weights_;
}

Parameter& BinConvLayer::scale() {
  if (!scale_) throw std::logic_error("binconv: layer has no learned scale");
  return *scale_;
}

const Parameter& BinConvLayer::scale() const {
  if (!scale_) throw std::logic_error("binconv: layer has no learned scale");
  return *scale_;
}

void BinConvLayer::binarize() {
  if (real_weights_) bank_ = BinaryFilterBank::from_weights(real_weights_->value);
  ++binarize_count_;
}

void BinConvLayer::set_bank(BinaryFilterBank bank) {
  if (bank.filter_count() != spec_.out_channels ||
      bank.filter_shape() != Shape{spec_.in_channels, spec_.geom.kernel_h, spec_.geom.kernel_w}) {
    throw ShapeError("binconv: filter bank does not match layer shape");
  }
  if (scale_) {
    scale_->value = Tensor(Shape{bank.filter_count()},
                           std::vector<Real>(bank.alphas().begin(), bank.alphas().end()));
  }
  bank_ = std::move(bank);
}

void BinConvLayer::set_real_weights(Tensor weights) {
  if (weights.shape() != weight_tensor(spec_).shape()) {
    throw ShapeError("binconv: real weights " + weights.shape().str() + " do not match layer");
  }
  Parameter w;
  w.name = "binconv.weight";
  w.grad = Tensor(weights.shape());
  w.value = std::move(weights);
  w.clamp_unit = true;
  real_weights_ = std::move(w);
}

BinaryFilterBank BinConvLayer::effective_bank() const {
  if (!scale_) return bank_;
  BinaryFilterBank bank = bank_;
  bank.set_alphas(std::vector<Real>(scale_->value.data().begin(), scale_->value.data().end()));
  return bank;
}

Activation BinConvLayer::forward(const Activation& input, Mode mode, TapeEntry& tape) {
  const Tensor& x = input.values;
  require_batch(x, "binconv");
  const Shape out_item = output_shape(x.item(0).shape());
  const std::size_t batch = x.shape()[0];
  const std::size_t channels = x.shape()[1];
  const std::size_t in_h = x.shape()[2];
  const std::size_t in_w = x.shape()[3];
  const std::size_t image = channels * in_h * in_w;
  const std::size_t plane = out_item[1] * out_item[2];
  const std::size_t out_stride = out_item.element_count();

  const BinaryFilterBank bank = effective_bank();
  Activation out{Tensor(Shape{batch, out_item[0], out_item[1], out_item[2]}), {}};

  if (!spec_.binarize_input) {
    conv_binary_weight_batch(x.ptr(), batch, channels, in_h, in_w, bank, spec_.geom, out.values.ptr());
    if (mode == Mode::train) tape.saved = {x};
    return out;
  }

  // XNOR path: per-sample beta map from the channel abs-mean of the real
  // input (forwarded by a preceding binactiv, or computed here).
  Tensor beta(Shape{batch, out_item[1], out_item[2]});
  const std::size_t in_plane = in_h * in_w;
  for (std::size_t b = 0; b < batch; ++b) {
    Tensor abs_mean(Shape{in_h, in_w});
    if (input.abs_mean) {
      std::copy_n(input.abs_mean->ptr() + b * in_plane, in_plane, abs_mean.ptr());
    } else {
      abs_mean = channel_abs_mean(x.item(b));
    }
    const BetaMap k = beta_map_from_abs_mean(abs_mean, spec_.geom);
    std::copy_n(k.values.ptr(), plane, beta.ptr() + b * plane);
  }

  if (spec_.input_bits == 1) {
    for (std::size_t b = 0; b < batch; ++b) {
      const PackedPatchMatrix patches =
          PackedPatchMatrix::build(x.ptr() + b * image, channels, in_h, in_w, spec_.geom);
      conv_xnor_packed(patches, beta.ptr() + b * plane, bank, out.values.ptr() + b * out_stride);
    }
  } else {
    const Tensor q = quantize_tensor(x, spec_.input_bits);
    const Tensor dots = gemm::conv_forward(q, bank.dense_signs(), spec_.geom);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t k = 0; k < bank.filter_count(); ++k) {
        const Real alpha = bank.alpha(k);
        for (std::size_t r = 0; r < plane; ++r) {
          const std::size_t i = b * out_stride + k * plane + r;
          out.values[i] = alpha == Real{0} ? Real{0} : dots[i] * beta[b * plane + r] * alpha;
        }
      }
    }
  }
  if (mode == Mode::train) {
    tape.saved = {x, beta, Tensor(Shape{1}, input.abs_mean ? Real{0} : Real{1})};
  }
  return out;
}

Tensor BinConvLayer::backward(const TapeEntry& tape, const Tensor& grad_out,
                              const GradientOptions& options) {
  if (!real_weights_) throw std::logic_error("binconv: cannot train a layer without real weights");
  const Tensor& x = tape.saved.at(0);
  const BinaryFilterBank bank = effective_bank();
  const Tensor effective = bank.dense_weights();
  const std::size_t batch = x.shape()[0];
  const std::size_t filters = bank.filter_count();
  const std::size_t n = bank.filter_size();

  Tensor operand = x;
  Tensor g_eff = grad_out;
  bool fused_sign = false;
  if (spec_.binarize_input) {
    const Tensor& beta = tape.saved.at(1);
    fused_sign = tape.saved.at(2)[0] != Real{0};
    operand = quantize_tensor(x, spec_.input_bits);
    const std::size_t plane = beta.size() / batch;
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t k = 0; k < filters; ++k) {
        Real* g = g_eff.ptr() + (b * filters + k) * plane;
        const Real* kb = beta.ptr() + b * plane;
        for (std::size_t r = 0; r < plane; ++r) g[r] *= kb[r];
      }
    }
  }

  // Gradient with respect to the effective (binarized) weights W~.
  Tensor grad_wtilde(effective.shape());
  gemm::conv_backward(operand, effective, spec_.geom, g_eff, nullptr, &grad_wtilde);

  Tensor grad_in;
  if (options.binary_gradient) {
    Tensor g_bin(g_eff.shape());
    const std::size_t item = g_eff.size() / batch;
    for (std::size_t b = 0; b < batch; ++b) {
      const BinaryGradient bg = binarize_gradient(g_eff.data().subspan(b * item, item));
      for (std::size_t i = 0; i < item; ++i) g_bin[b * item + i] = bg.scale * bg.pattern[i];
    }
    gemm::conv_backward(operand, effective, spec_.geom, g_bin, &grad_in, nullptr);
  } else {
    gemm::conv_backward(operand, effective, spec_.geom, g_eff, &grad_in, nullptr);
  }
  if (fused_sign) grad_in = ste_backward_sign(grad_in, x, options.sign);

  Parameter& w = *real_weights_;
  const Shape filter_shape{spec_.in_channels, spec_.geom.kernel_h, spec_.geom.kernel_w};
  for (std::size_t k = 0; k < filters; ++k) {
    const Tensor gk(filter_shape, std::vector<Real>(grad_wtilde.ptr() + k * n, grad_wtilde.ptr() + (k + 1) * n));
    const Tensor wk(filter_shape, std::vector<Real>(w.value.ptr() + k * n, w.value.ptr() + (k + 1) * n));
    Real* dst = w.grad.ptr() + k * n;
    if (scale_) {
      // W~ = s B: ds = sum g~ B, dW = s g~ sign'(W).
      const Real s = scale_->value[k];
      double ds = 0;
      for (std::size_t i = 0; i < n; ++i) {
        ds += static_cast<double>(gk[i]) * sign_of(wk[i]);
        dst[i] += s * gk[i] * sign_derivative(wk[i], options.sign);
      }
      scale_->grad[k] += static_cast<Real>(ds);
      continue;
    }
    const Real alpha = bank_.alpha(k);
    const Tensor gw = options.weight == WeightGradientForm::paper_diagonal
                          ? weight_gradient(gk, wk, alpha, options.sign)
                          : weight_gradient_full(gk, wk, alpha, options.sign);
    for (std::size_t i = 0; i < n; ++i) dst[i] += gw[i];
  }
  return grad_in;
}

// ---------------------------------------------------------------------------

Activation BinActivLayer::forward(const Activation& input, Mode mode, TapeEntry& tape) {
  const Tensor& x = input.values;
  require_batch(x, "binactiv");
  const std::size_t batch = x.shape()[0];
  const std::size_t channels = x.shape()[1];
  const std::size_t plane = x.shape()[2] * x.shape()[3];

  Activation out{quantize_tensor(x, spec_.input_bits), Tensor(Shape{batch, x.shape()[2], x.shape()[3]})};
  const Real inv = Real{1} / static_cast<Real>(channels);
  for (std::size_t b = 0; b < batch; ++b) {
    Real* a = out.abs_mean->ptr() + b * plane;
    for (std::size_t c = 0; c < channels; ++c) {
      const Real* src = x.ptr() + (b * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) a[i] += std::fabs(src[i]);
    }
    for (std::size_t i = 0; i < plane; ++i) a[i] *= inv;
  }
  if (mode == Mode::train) tape.saved = {x};
  return out;
}

Tensor BinActivLayer::backward(const TapeEntry& tape, const Tensor& grad_out,
                               const GradientOptions& options) {
  return ste_backward_sign(grad_out, tape.saved.at(0), options.sign);
}

// ---------------------------------------------------------------------------

BatchNormLayer::BatchNormLayer(LayerSpec spec) : Layer(std::move(spec)) {
  const std::size_t c = spec_.in_channels;
  spec_.out_channels = c;
  gamma_ = Parameter{"batchnorm.gamma", Tensor(Shape{c}, Real{1}), Tensor(Shape{c}), false};
  beta_ = Parameter{"batchnorm.beta", Tensor(Shape{c}, Real{0}), Tensor(Shape{c}), false};
  state_.running_mean.assign(c, Real{0});
  state_.running_var.assign(c, Real{1});
}

Activation BatchNormLayer::forward(const Activation& input, Mode mode, TapeEntry& tape) {
  const Tensor& x = input.values;
  require_batch(x, "batchnorm");
  const std::size_t batch = x.shape()[0];
  const std::size_t channels = x.shape()[1];
  if (channels != spec_.in_channels) {
    throw ShapeError("batchnorm: expected " + std::to_string(spec_.in_channels) + " channels, got " +
                     x.shape().str());
  }
  const std::size_t plane = x.shape()[2] * x.shape()[3];
  const double count = static_cast<double>(batch * plane);

  Tensor y(x.shape());
  if (mode == Mode::eval) {
    for (std::size_t c = 0; c < channels; ++c) {
      const Real inv_std = Real{1} / std::sqrt(state_.running_var[c] + state_.epsilon);
      const Real scale = gamma_.value[c] * inv_std;
      const Real shift = beta_.value[c] - state_.running_mean[c] * scale;
      for (std::size_t b = 0; b < batch; ++b) {
        const Real* src = x.ptr() + (b * channels + c) * plane;
        Real* dst = y.ptr() + (b * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) dst[i] = src[i] * scale + shift;
      }
    }
    return {std::move(y), {}};
  }

  Tensor xhat(x.shape());
  Tensor inv_std(Shape{channels});
  for (std::size_t c = 0; c < channels; ++c) {
    double sum = 0, sq = 0;
    for (std::size_t b = 0; b < batch; ++b) {
      const Real* src = x.ptr() + (b * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) sum += src[i];
    }
    const double mean = sum / count;
    for (std::size_t b = 0; b < batch; ++b) {
      const Real* src = x.ptr() + (b * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double d = src[i] - mean;
        sq += d * d;
      }
    }
    const double var = sq / count;
    const double istd = 1.0 / std::sqrt(var + state_.epsilon);
    inv_std[c] = static_cast<Real>(istd);
    for (std::size_t b = 0; b < batch; ++b) {
      const Real* src = x.ptr() + (b * channels + c) * plane;
      Real* xh = xhat.ptr() + (b * channels + c) * plane;
      Real* dst = y.ptr() + (b * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        xh[i] = static_cast<Real>((src[i] - mean) * istd);
        dst[i] = gamma_.value[c] * xh[i] + beta_.value[c];
      }
    }
    const double unbiased = count > 1 ? sq / (count - 1) : var;
    state_.running_mean[c] = static_cast<Real>((1 - state_.momentum) * state_.running_mean[c] + state_.momentum * mean);
    state_.running_var[c] = static_cast<Real>((1 - state_.momentum) * state_.running_var[c] + state_.momentum * unbiased);
  }
  tape.saved = {std::move(xhat), std::move(inv_std)};
  return {std::move(y), {}};
}

Tensor BatchNormLayer::backward(const TapeEntry& tape, const Tensor& grad_out, const GradientOptions&) {
  const Tensor& xhat = tape.saved.at(0);
  const Tensor& inv_std = tape.saved.at(1);
  const std::size_t batch = xhat.shape()[0];
  const std::size_t channels = xhat.shape()[1];
  const std::size_t plane = xhat.shape()[2] * xhat.shape()[3];
  const double count = static_cast<double>(batch * plane);
  Tensor grad_in(xhat.shape());
  for (std::size_t c = 0; c < channels; ++c) {
    double sum_g = 0, sum_gx = 0;
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t off = (b * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_g += grad_out[off + i];
        sum_gx += static_cast<double>(grad_out[off + i]) * xhat[off + i];
      }
    }
    gamma_.grad[c] += static_cast<Real>(sum_gx);
    beta_.grad[c] += static_cast<Real>(sum_g);
    const double k = gamma_.value[c] * inv_std[c] / count;
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t off = (b * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        grad_in[off + i] = static_cast<Real>(k * (count * grad_out[off + i] - sum_g - xhat[off + i] * sum_gx));
      }
    }
  }
  return grad_in;
}

// ---------------------------------------------------------------------------

Activation ReluLayer::forward(const Activation& input, Mode mode, TapeEntry& tape) {
  Tensor y(input.values.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::max(input.values[i], Real{0});
  if (mode == Mode::train) tape.saved = {input.values};
  return {std::move(y), {}};
}

Tensor ReluLayer::backward(const TapeEntry& tape, const Tensor& grad_out, const GradientOptions&) {
  const Tensor& x = tape.saved.at(0);
  Tensor g(grad_out.shape());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = x[i] > Real{0} ? grad_out[i] : Real{0};
  return g;
}

// ---------------------------------------------------------------------------

Shape PoolLayer::output_shape(const Shape& input) const {
  if (input.rank() != 3) throw ShapeError("pool: expected (c, h, w), got " + input.str());
  return Shape{input[0], spec_.geom.output_h(input[1]), spec_.geom.output_w(input[2])};
}

namespace {

template <typename Visit>
void for_each_window(const ConvGeometry& g, std::size_t in_h, std::size_t in_w, std::size_t oy,
                     std::size_t ox, Visit&& visit) {
  for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
    const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in_h)) continue;
    for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
      const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad);
      if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in_w)) continue;
      visit(static_cast<std::size_t>(iy) * in_w + static_cast<std::size_t>(ix));
    }
  }
}

}  // namespace

Activation PoolLayer::forward(const Activation& input, Mode mode, TapeEntry& tape) {
  const Tensor& x = input.values;
  require_batch(x, "pool");
  const Shape item = output_shape(x.item(0).shape());
  const std::size_t maps = x.shape()[0] * x.shape()[1];
  const std::size_t in_h = x.shape()[2], in_w = x.shape()[3];
  const std::size_t out_h = item[1], out_w = item[2];
  const bool is_max = spec_.kind == LayerKind::maxpool;
  const Real inv_window = Real{1} / static_cast<Real>(spec_.geom.window_size());

  Tensor y(Shape{x.shape()[0], x.shape()[1], out_h, out_w});
  for (std::size_t m = 0; m < maps; ++m) {
    const Real* src = x.ptr() + m * in_h * in_w;
    Real* dst = y.ptr() + m * out_h * out_w;
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        Real acc = is_max ? -std::numeric_limits<Real>::infinity() : Real{0};
        for_each_window(spec_.geom, in_h, in_w, oy, ox, [&](std::size_t i) {
          acc = is_max ? std::max(acc, src[i]) : acc + src[i];
        });
        dst[oy * out_w + ox] = is_max ? acc : acc * inv_window;
      }
    }
  }
  if (mode == Mode::train) tape.saved = {x};
  return {std::move(y), {}};
}

Tensor PoolLayer::backward(const TapeEntry& tape, const Tensor& grad_out, const GradientOptions&) {
  const Tensor& x = tape.saved.at(0);
  const std::size_t maps = x.shape()[0] * x.shape()[1];
  const std::size_t in_h = x.shape()[2], in_w = x.shape()[3];
  const std::size_t out_h = grad_out.shape()[2], out_w = grad_out.shape()[3];
  const bool is_max = spec_.kind == LayerKind::maxpool;
  const Real inv_window = Real{1} / static_cast<Real>(spec_.geom.window_size());

  Tensor g(x.shape());
  for (std::size_t m = 0; m < maps; ++m) {
    const Real* src = x.ptr() + m * in_h * in_w;
    const Real* go = grad_out.ptr() + m * out_h * out_w;
    Real* dst = g.ptr() + m * in_h * in_w;
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        const Real up = go[oy * out_w + ox];
        if (is_max) {
          // First maximum in scan order receives the gradient.
          std::size_t best = 0;
          Real best_value = -std::numeric_limits<Real>::infinity();
          for_each_window(spec_.geom, in_h, in_w, oy, ox, [&](std::size_t i) {
            if (src[i] > best_value) {
              best_value = src[i];
              best = i;
            }
          });
          dst[best] += up;
        } else {
          for_each_window(spec_.geom, in_h, in_w, oy, ox, [&](std::size_t i) { dst[i] += up * inv_window; });
        }
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Layer> make_layer(const LayerSpec& spec) {
  switch (spec.kind) {
    case LayerKind::conv: return std::make_unique<ConvLayer>(spec);
    case LayerKind::binconv: return std::make_unique<BinConvLayer>(spec);
    case LayerKind::binactiv: return std::make_unique<BinActivLayer>(spec);
    case LayerKind::batchnorm: return std::make_unique<BatchNormLayer>(spec);
    case LayerKind::relu: return std::make_unique<ReluLayer>(spec);
    case LayerKind::maxpool:
    case LayerKind::avgpool: return std::make_unique<PoolLayer>(spec);
    case LayerKind::softmax_nll: return std::make_unique<SoftmaxNllLayer>(spec);
  }
  throw std::invalid_argument("make_layer: unknown layer kind");
}

Tensor ste_backward_sign(const Tensor& upstream, const Tensor& pre_activation, SignGradient variant) {
  if (upstream.shape() != pre_activation.shape()) {
    throw ShapeError("ste_backward_sign: shape mismatch " + upstream.shape().str() + " vs " +
                     pre_activation.shape().str());
  }
  Tensor g(upstream.shape());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = upstream[i] * sign_derivative(pre_activation[i], variant);
  return g;
}

Tensor weight_gradient(const Tensor& upstream_wrt_wtilde, const Tensor& weights, Real alpha,
                       SignGradient variant) {
  if (upstream_wrt_wtilde.shape() != weights.shape()) {
    throw ShapeError("weight_gradient: shape mismatch");
  }
  const Real inv_n = Real{1} / static_cast<Real>(weights.size());
  Tensor g(weights.shape());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = upstream_wrt_wtilde[i] * (inv_n + sign_derivative(weights[i], variant) * alpha);
  }
  return g;
}

Tensor weight_gradient_full(const Tensor& upstream_wrt_wtilde, const Tensor& weights, Real alpha,
                            SignGradient variant) {
  if (upstream_wrt_wtilde.shape() != weights.shape()) {
    throw ShapeError("weight_gradient_full: shape mismatch");
  }
  double coupling = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) coupling += upstream_wrt_wtilde[i] * sign_of(weights[i]);
  const auto shared = static_cast<Real>(coupling / static_cast<double>(weights.size()));
  Tensor g(weights.shape());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = upstream_wrt_wtilde[i] * alpha * sign_derivative(weights[i], variant) + sign_of(weights[i]) * shared;
  }
  return g;
}

LossResult loss_softmax_nll(const Tensor& logits, const std::vector<int>& labels) {
  if (logits.shape().rank() < 2) throw ShapeError("loss: logits must be (N, C, ...)");
  const std::size_t batch = logits.shape()[0];
  if (labels.size() != batch) {
    throw ShapeError("loss: " + std::to_string(labels.size()) + " labels for a batch of " + std::to_string(batch));
  }
  const std::size_t classes = logits.size() / batch;
  LossResult result;
  result.grad = Tensor(logits.shape());
  double total = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    const int label = labels[b];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw std::out_of_range("loss: label " + std::to_string(label) + " outside [0, " +
                              std::to_string(classes) + ")");
    }
    const Real* z = logits.ptr() + b * classes;
    const double zmax = *std::max_element(z, z + classes);
    double denom = 0;
    for (std::size_t c = 0; c < classes; ++c) denom += std::exp(z[c] - zmax);
    const double log_denom = std::log(denom) + zmax;
    total += log_denom - z[label];
    Real* g = result.grad.ptr() + b * classes;
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = std::exp(z[c] - log_denom);
      g[c] = static_cast<Real>((p - (static_cast<int>(c) == label ? 1.0 : 0.0)) / static_cast<double>(batch));
    }
  }
  result.loss = total / static_cast<double>(batch);
  return result;
}

}  // namespace xnornet

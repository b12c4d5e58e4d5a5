//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "xnornet/binarize.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace xnornet {

BinarizedFilter binarize_weights(std::span<const Real> weights, Shape shape) {
  if (weights.empty()) throw std::invalid_argument("binarize_weights: empty filter");
  if (shape.element_count() != weights.size()) {
    throw ShapeError("binarize_weights: " + std::to_string(weights.size()) +
                     " weights do not match shape " + shape.str());
  }
  double l1 = 0;
  for (Real w : weights) l1 += std::fabs(w);
  BinarizedFilter f;
  f.signs = pack_signs_of(weights);
  f.alpha = static_cast<Real>(l1 / static_cast<double>(weights.size()));
  f.shape = std::move(shape);
  f.degenerate = (l1 == 0.0);
  return f;
}

BinarizedFilter binarize_weights(const Tensor& weights) {
  return binarize_weights(weights.data(), weights.shape());
}

BinaryFilterBank::BinaryFilterBank(const std::vector<BinarizedFilter>& filters) {
  if (filters.empty()) return;
  filter_shape_ = filters.front().shape;
  words_.reserve(filters.size() * words_per_filter());
  alphas_.reserve(filters.size());
  for (const auto& f : filters) {
    if (f.shape != filter_shape_) {
      throw ShapeError("filter bank: mixed filter shapes " + f.shape.str() + " and " +
                       filter_shape_.str());
    }
    words_.insert(words_.end(), f.signs.words().begin(), f.signs.words().end());
    alphas_.push_back(f.alpha);
  }
}

BinaryFilterBank BinaryFilterBank::from_weights(const Tensor& weights) {
  if (weights.shape().rank() != 4) {
    throw ShapeError("filter bank: weights must be (K, c, h, w), got " + weights.shape().str());
  }
  const auto& d = weights.shape().dims();
  Shape filter_shape{d[1], d[2], d[3]};
  const std::size_t n = filter_shape.element_count();
  std::vector<BinarizedFilter> filters;
  filters.reserve(d[0]);
  for (std::size_t k = 0; k < d[0]; ++k) {
    filters.push_back(binarize_weights(weights.data().subspan(k * n, n), filter_shape));
  }
  return BinaryFilterBank(filters);
}

BinaryFilterBank BinaryFilterBank::from_parts(Shape filter_shape, std::vector<Word> words,
                                              std::vector<Real> alphas) {
  BinaryFilterBank bank;
  bank.filter_shape_ = std::move(filter_shape);
  const std::size_t wpf = bank.words_per_filter();
  if (words.size() != alphas.size() * wpf) {
    throw std::invalid_argument("filter bank: " + std::to_string(words.size()) +
                                " words for " + std::to_string(alphas.size()) +
                                " filters of " + std::to_string(wpf) + " words");
  }
  const Word mask = tail_mask(bank.filter_size());
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    if ((words[k * wpf + wpf - 1] & ~mask) != 0) {
      throw std::invalid_argument("filter bank: filter " + std::to_string(k) +
                                  " has non-zero pad bits");
    }
  }
  bank.words_ = std::move(words);
  bank.alphas_ = std::move(alphas);
  return bank;
}

BinarizedFilter BinaryFilterBank::filter(std::size_t k) const {
  const std::size_t wpf = words_per_filter();
  BinarizedFilter f;
  f.signs = PackedBits::from_words(
      filter_size(), std::vector<Word>(words_.begin() + static_cast<std::ptrdiff_t>(k * wpf),
                                       words_.begin() + static_cast<std::ptrdiff_t>((k + 1) * wpf)));
  f.alpha = alphas_[k];
  f.shape = filter_shape_;
  f.degenerate = (alphas_[k] == Real{0});
  return f;
}

void BinaryFilterBank::set_alphas(std::vector<Real> alphas) {
  if (alphas.size() != alphas_.size()) throw std::invalid_argument("filter bank: alpha count");
  alphas_ = std::move(alphas);
}

Tensor BinaryFilterBank::dense_signs() const {
  std::vector<std::size_t> dims{filter_count()};
  dims.insert(dims.end(), filter_shape_.dims().begin(), filter_shape_.dims().end());
  Tensor out{Shape(dims)};
  const std::size_t n = filter_size();
  for (std::size_t k = 0; k < filter_count(); ++k) {
    const Word* w = filter_words(k);
    Real* dst = out.ptr() + k * n;
    for (std::size_t i = 0; i < n; ++i) {
      dst[i] = ((w[i / kWordBits] >> (i % kWordBits)) & 1u) ? Real{1} : Real{-1};
    }
  }
  return out;
}

Tensor BinaryFilterBank::dense_weights() const {
  Tensor out = dense_signs();
  const std::size_t n = filter_size();
  for (std::size_t k = 0; k < filter_count(); ++k) {
    for (std::size_t i = 0; i < n; ++i) out[k * n + i] *= alphas_[k];
  }
  return out;
}

BinaryDotFactors binary_dot_factors(std::span<const Real> x, std::span<const Real> w) {
  if (x.size() != w.size()) {
    throw std::invalid_argument("binary_dot_factors: length mismatch " + std::to_string(x.size()) +
                                " vs " + std::to_string(w.size()));
  }
  if (x.empty()) throw std::invalid_argument("binary_dot_factors: empty vectors");
  BinaryDotFactors f;
  f.input_signs.resize(x.size());
  f.weight_signs.resize(w.size());
  double sx = 0, sw = 0, sxw = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    f.input_signs[i] = sign_of(x[i]);
    f.weight_signs[i] = sign_of(w[i]);
    sx += std::fabs(x[i]);
    sw += std::fabs(w[i]);
    sxw += std::fabs(static_cast<double>(x[i]) * w[i]);
  }
  const double n = static_cast<double>(x.size());
  f.beta = static_cast<Real>(sx / n);
  f.alpha = static_cast<Real>(sw / n);
  f.gamma = f.beta * f.alpha;
  f.gamma_exact = static_cast<Real>(sxw / n);
  return f;
}

BetaMap beta_map_from_abs_mean(const Tensor& abs_mean, const ConvGeometry& geom) {
  if (abs_mean.shape().rank() != 2) {
    throw ShapeError("beta map: abs-mean map must be (h, w), got " + abs_mean.shape().str());
  }
  const std::size_t in_h = abs_mean.shape()[0];
  const std::size_t in_w = abs_mean.shape()[1];
  geom.validate(in_h, in_w);
  const std::size_t out_h = geom.output_h(in_h);
  const std::size_t out_w = geom.output_w(in_w);
  const Real inv_window = Real{1} / static_cast<Real>(geom.window_size());
  const auto pad = static_cast<std::ptrdiff_t>(geom.pad);

  BetaMap map{Tensor(Shape{out_h, out_w})};
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      Real acc = 0;
      for (std::size_t ky = 0; ky < geom.kernel_h; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * geom.stride + ky) - pad;
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in_h)) continue;
        for (std::size_t kx = 0; kx < geom.kernel_w; ++kx) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * geom.stride + kx) - pad;
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in_w)) continue;
          acc += abs_mean[static_cast<std::size_t>(iy) * in_w + static_cast<std::size_t>(ix)];
        }
      }
      map.values[oy * out_w + ox] = acc * inv_window;
    }
  }
  return map;
}

BetaMap compute_beta_map(const Tensor& input, const ConvGeometry& geom) {
  return beta_map_from_abs_mean(channel_abs_mean(input), geom);
}

Real quantize_kbit(Real x, int bits) {
  if (bits < 1 || bits > 24) {
    throw std::invalid_argument("quantize_kbit: bits must be in [1, 24], got " + std::to_string(bits));
  }
  x = std::clamp(x, Real{-1}, Real{1});
  const double levels = std::ldexp(1.0, bits) - 1.0;
  const double q = std::round(levels * (static_cast<double>(x) + 1.0) / 2.0);
  return static_cast<Real>(2.0 * (q / levels - 0.5));
}

BinaryGradient binarize_gradient(std::span<const Real> grad) {
  if (grad.empty()) throw std::invalid_argument("binarize_gradient: empty gradient");
  BinaryGradient g;
  g.pattern.resize(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    g.pattern[i] = sign_of(grad[i]);
    g.scale = std::max(g.scale, std::fabs(grad[i]));
  }
  return g;
}

}  // namespace xnornet

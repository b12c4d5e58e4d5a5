//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "xnornet/bitpack.hpp"
#include "xnornet/tensor.hpp"

namespace xnornet {

/// W ~= alpha * B for one filter. `shape` is the filter's (c, h, w).
struct BinarizedFilter {
  PackedBits signs;
  Real alpha = 0;
  Shape shape;
  /// Set when every source weight was zero (alpha = 0); kernels emit zeros.
  bool degenerate = false;

  friend bool operator==(const BinarizedFilter&, const BinarizedFilter&) = default;
};

/// B = sign(W), alpha = mean |W|. This pair minimizes ||W - alpha B||^2.
BinarizedFilter binarize_weights(std::span<const Real> weights, Shape shape);
BinarizedFilter binarize_weights(const Tensor& weights);

/// All K filters of a layer, packed back to back so a kernel can stream them.
class BinaryFilterBank {
 public:
  BinaryFilterBank() = default;
  explicit BinaryFilterBank(const std::vector<BinarizedFilter>& filters);

  /// Binarizes each (c, h, w) slice of a (K, c, h, w) weight tensor.
  static BinaryFilterBank from_weights(const Tensor& weights);

  /// Adopts raw payload words (K * words_per_filter) and per-filter scales.
  static BinaryFilterBank from_parts(Shape filter_shape, std::vector<Word> words,
                                     std::vector<Real> alphas);

  std::size_t filter_count() const noexcept { return alphas_.size(); }
  std::size_t filter_size() const noexcept { return filter_shape_.element_count(); }
  std::size_t words_per_filter() const noexcept { return words_for(filter_size()); }
  const Shape& filter_shape() const noexcept { return filter_shape_; }

  const Word* filter_words(std::size_t k) const noexcept {
    return words_.data() + k * words_per_filter();
  }
  std::span<const Word> words() const noexcept { return words_; }
  std::span<const Real> alphas() const noexcept { return alphas_; }
  Real alpha(std::size_t k) const noexcept { return alphas_[k]; }

  BinarizedFilter filter(std::size_t k) const;

  /// Per-filter scales replaced (used by the learned-scale variant).
  void set_alphas(std::vector<Real> alphas);

  /// Dense (K, c, h, w) tensor of alpha_k * B_k.
  Tensor dense_weights() const;
  /// Dense (K, c, h, w) tensor of B_k (+/-1).
  Tensor dense_signs() const;

  friend bool operator==(const BinaryFilterBank&, const BinaryFilterBank&) = default;

 private:
  Shape filter_shape_;
  std::vector<Word> words_;
  std::vector<Real> alphas_;
};

/// Factors of the binary dot-product approximation X.W ~= beta alpha H.B.
struct BinaryDotFactors {
  std::vector<Real> input_signs;   // H = sign(X)
  std::vector<Real> weight_signs;  // B = sign(W)
  Real beta = 0;                   // mean |X|
  Real alpha = 0;                  // mean |W|
  Real gamma = 0;                  // beta * alpha
  Real gamma_exact = 0;            // mean |X_i W_i|, the exact optimum
};

BinaryDotFactors binary_dot_factors(std::span<const Real> x, std::span<const Real> w);

/// Per-window input scale map K for a (c, h, w) input: the channel-wise
/// abs-mean A averaged over each window. Zero padding contributes zeros.
struct BetaMap {
  Tensor values;  // (h_out, w_out)
};

BetaMap compute_beta_map(const Tensor& input, const ConvGeometry& geom);

/// Box-averages an (h, w) abs-mean map over `geom` windows.
BetaMap beta_map_from_abs_mean(const Tensor& abs_mean, const ConvGeometry& geom);

/// k-bit uniform quantizer on [-1, 1]: 2 (round((2^k - 1)(x + 1)/2) / (2^k - 1) - 1/2).
/// Ties round away from zero. Inputs outside [-1, 1] are clamped first.
Real quantize_kbit(Real x, int bits);

/// Whether `x` needs clamping before quantize_kbit.
constexpr bool quantizer_clamps(Real x) noexcept { return x < Real{-1} || x > Real{1}; }

/// scale * pattern approximation of a gradient, scale = max |g|.
struct BinaryGradient {
  std::vector<Real> pattern;
  Real scale = 0;
};

BinaryGradient binarize_gradient(std::span<const Real> grad);

}  // namespace xnornet

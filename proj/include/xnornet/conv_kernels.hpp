//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "xnornet/binarize.hpp"
#include "xnornet/bitpack.hpp"
#include "xnornet/tensor.hpp"

namespace xnornet {

/// Operation tallies kept by the instrumented kernels. Counts are per call;
/// pass the same object to several calls to accumulate.
struct OpCounters {
  std::uint64_t real_mul = 0;
  std::uint64_t real_add = 0;
  std::uint64_t xnor_words = 0;
  std::uint64_t popcount_words = 0;
  /// Logical +/-1 products evaluated (c * N_W per output per filter).
  std::uint64_t binary_ops = 0;
  /// Outputs that received their gamma scaling, one per output per filter.
  std::uint64_t outputs_scaled = 0;

  OpCounters& operator+=(const OpCounters& o) noexcept;
};

/// sign(input) windows packed one row per output location (row-major over
/// (oy, ox)). Row bits follow the filter flattening (c, ky, kx). Zero-padded
/// positions binarize to +1.
class PackedPatchMatrix {
 public:
  static PackedPatchMatrix build(const Tensor& input, const ConvGeometry& geom);
  static PackedPatchMatrix build(const Real* input, std::size_t channels, std::size_t in_h,
                                 std::size_t in_w, const ConvGeometry& geom);

  std::size_t rows() const noexcept { return out_h_ * out_w_; }
  std::size_t row_length() const noexcept { return n_; }
  std::size_t words_per_row() const noexcept { return words_for(n_); }
  std::size_t out_h() const noexcept { return out_h_; }
  std::size_t out_w() const noexcept { return out_w_; }
  const ConvGeometry& geometry() const noexcept { return geom_; }

  const Word* row(std::size_t r) const noexcept { return words_.data() + r * words_per_row(); }
  PackedBits row_bits(std::size_t r) const;

 private:
  std::vector<Word> words_;
  std::size_t n_ = 0;
  std::size_t out_h_ = 0;
  std::size_t out_w_ = 0;
  ConvGeometry geom_;
};

/// (I (+) B) alpha: binary-weight convolution using only additions and
/// subtractions of input values, then one multiply by alpha per output.
/// `input` is (c, h, w); the result is (K, h_out, w_out).
Tensor conv_binary_weight(const Tensor& input, const BinaryFilterBank& bank,
                          const ConvGeometry& geom, OpCounters* counters = nullptr);
Tensor conv_binary_weight(const Tensor& input, const BinarizedFilter& filter,
                          const ConvGeometry& geom, OpCounters* counters = nullptr);

/// (sign(I) (*) sign(W)) . K alpha with an XNOR/popcount inner loop. The
/// beta map is computed once and shared by every filter of the bank.
Tensor conv_xnor(const Tensor& input, const BinaryFilterBank& bank, const ConvGeometry& geom,
                 OpCounters* counters = nullptr);
Tensor conv_xnor(const Tensor& input, const BinarizedFilter& filter, const ConvGeometry& geom,
                 OpCounters* counters = nullptr);

/// Core XNOR loop over prepared operands. `beta` has patches.rows() entries;
/// `out` receives K * rows() values, filter-major.
void conv_xnor_packed(const PackedPatchMatrix& patches, const Real* beta,
                      const BinaryFilterBank& bank, Real* out, OpCounters* counters = nullptr);

/// Binary-weight kernel over `batch` images, writing K * h_out * w_out
/// values per image.
void conv_binary_weight_batch(const Real* input, std::size_t batch, std::size_t channels, std::size_t in_h,
                              std::size_t in_w, const BinaryFilterBank& bank, const ConvGeometry& geom,
                              Real* out, OpCounters* counters = nullptr);

/// Binary-weight kernel writing into `out` (K * h_out * w_out values).
void conv_binary_weight_into(const Real* input, std::size_t channels, std::size_t in_h,
                             std::size_t in_w, const BinaryFilterBank& bank,
                             const ConvGeometry& geom, Real* out, OpCounters* counters = nullptr);

enum class ConvPath { full_precision, binary_weight, xnor };

struct OpCount {
  std::uint64_t binary_ops = 0;
  std::uint64_t real_ops = 0;
  friend bool operator==(const OpCount&, const OpCount&) = default;
};

/// Analytic operation count for one filter: XNOR does c N_W N_I binary ops
/// and N_I non-binary ops; full precision does c N_W N_I real ops.
OpCount count_ops(std::uint64_t channels, std::uint64_t filter_area, std::uint64_t output_area,
                  ConvPath path);

/// Serial direct-window kernels. They share no code with the im2col kernels
/// above and exist to check them.
namespace reference {

Tensor conv_xnor_direct(const Tensor& input, const BinaryFilterBank& bank, const ConvGeometry& geom);
Tensor conv_binary_weight_direct(const Tensor& input, const BinaryFilterBank& bank,
                                 const ConvGeometry& geom);

}  // namespace reference

}  // namespace xnornet

//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "xnornet/conv_kernels.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "xnornet/parallel.hpp"

namespace xnornet {

OpCounters& OpCounters::operator+=(const OpCounters& o) noexcept {
  real_mul += o.real_mul;
  real_add += o.real_add;
  xnor_words += o.xnor_words;
  popcount_words += o.popcount_words;
  binary_ops += o.binary_ops;
  outputs_scaled += o.outputs_scaled;
  return *this;
}

namespace {

void check_bank(std::size_t channels, const BinaryFilterBank& bank, ConvGeometry& geom) {
  const Shape& fs = bank.filter_shape();
  if (fs.rank() != 3) throw ShapeError("filter bank shape must be (c, h, w), got " + fs.str());
  if (fs[0] != channels) {
    throw ShapeError("input has " + std::to_string(channels) + " channels but filters expect " +
                     std::to_string(fs[0]));
  }
  geom.kernel_h = fs[1];
  geom.kernel_w = fs[2];
}

void check_input(const Tensor& input, const char* what) {
  if (input.shape().rank() != 3) {
    throw ShapeError(std::string(what) + ": input must be (c, h, w), got " + input.shape().str());
  }
}

}  // namespace

PackedPatchMatrix PackedPatchMatrix::build(const Tensor& input, const ConvGeometry& geom) {
  check_input(input, "packed patch matrix");
  return build(input.ptr(), input.shape()[0], input.shape()[1], input.shape()[2], geom);
}

PackedPatchMatrix PackedPatchMatrix::build(const Real* input, std::size_t channels,
                                           std::size_t in_h, std::size_t in_w,
                                           const ConvGeometry& geom) {
  geom.validate(in_h, in_w);
  PackedPatchMatrix m;
  m.geom_ = geom;
  m.out_h_ = geom.output_h(in_h);
  m.out_w_ = geom.output_w(in_w);
  m.n_ = channels * geom.window_size();

  // Sign bits of the zero-padded input; padding reads as sign(0) = +1.
  const std::size_t ph = in_h + 2 * geom.pad;
  const std::size_t pw = in_w + 2 * geom.pad;
  std::vector<std::uint8_t> bits(channels * ph * pw, 1);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t y = 0; y < in_h; ++y) {
      const Real* src = input + (c * in_h + y) * in_w;
      std::uint8_t* dst = bits.data() + (c * ph + y + geom.pad) * pw + geom.pad;
      for (std::size_t x = 0; x < in_w; ++x) dst[x] = src[x] >= Real{0};
    }
  }

  const std::size_t wpr = m.words_per_row();
  m.words_.assign(m.rows() * wpr, 0);
  const auto rows = static_cast<std::ptrdiff_t>(m.rows());
#pragma omp parallel for schedule(static) num_threads(kernel_threads())
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const std::size_t oy = static_cast<std::size_t>(r) / m.out_w_;
    const std::size_t ox = static_cast<std::size_t>(r) % m.out_w_;
    Word* dst = m.words_.data() + static_cast<std::size_t>(r) * wpr;
    Word acc = 0;
    std::size_t bit = 0;
    std::size_t word = 0;
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t ky = 0; ky < geom.kernel_h; ++ky) {
        const std::uint8_t* src = bits.data() + (c * ph + oy * geom.stride + ky) * pw + ox * geom.stride;
        for (std::size_t kx = 0; kx < geom.kernel_w; ++kx) {
          acc |= static_cast<Word>(src[kx]) << bit;
          if (++bit == kWordBits) {
            dst[word++] = acc;
            acc = 0;
            bit = 0;
          }
        }
      }
    }
    if (bit != 0) dst[word] = acc;
  }
  return m;
}

PackedBits PackedPatchMatrix::row_bits(std::size_t r) const {
  const Word* w = row(r);
  return PackedBits::from_words(n_, std::vector<Word>(w, w + words_per_row()));
}

void conv_xnor_packed(const PackedPatchMatrix& patches, const Real* beta,
                      const BinaryFilterBank& bank, Real* out, OpCounters* counters) {
  if (bank.filter_size() != patches.row_length()) {
    throw ShapeError("conv_xnor: filters of " + std::to_string(bank.filter_size()) +
                     " elements against windows of " + std::to_string(patches.row_length()));
  }
  const std::size_t n = patches.row_length();
  const std::size_t wpr = patches.words_per_row();
  const auto rows = static_cast<std::ptrdiff_t>(patches.rows());
  const auto filters = static_cast<std::ptrdiff_t>(bank.filter_count());

  std::uint64_t words_done = 0;
  std::uint64_t outputs = 0;
#pragma omp parallel for collapse(2) schedule(static) num_threads(kernel_threads()) \
    reduction(+ : words_done, outputs)
  for (std::ptrdiff_t k = 0; k < filters; ++k) {
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
      const Real alpha = bank.alpha(static_cast<std::size_t>(k));
      Real& dst = out[static_cast<std::size_t>(k * rows + r)];
      const std::int64_t dot =
          xnor_dot_words(patches.row(static_cast<std::size_t>(r)), bank.filter_words(static_cast<std::size_t>(k)), n);
      dst = alpha == Real{0} ? Real{0} : static_cast<Real>(dot) * beta[r] * alpha;
      words_done += wpr;
      outputs += 1;
    }
  }
  if (counters) {
    counters->xnor_words += words_done;
    counters->popcount_words += words_done;
    counters->binary_ops += outputs * n;
    counters->real_mul += 2 * outputs;
    counters->outputs_scaled += outputs;
  }
}

Tensor conv_xnor(const Tensor& input, const BinaryFilterBank& bank, const ConvGeometry& geom,
                 OpCounters* counters) {
  check_input(input, "conv_xnor");
  ConvGeometry g = geom;
  check_bank(input.shape()[0], bank, g);
  const PackedPatchMatrix patches = PackedPatchMatrix::build(input, g);
  const BetaMap beta = compute_beta_map(input, g);
  if (counters) {
    // Channel abs-mean: c*h*w adds and h*w scalings; box filter: window adds
    // and one scaling per output.
    const std::uint64_t plane = input.shape()[1] * input.shape()[2];
    counters->real_add += input.size() + patches.rows() * g.window_size();
    counters->real_mul += plane + patches.rows();
  }
  Tensor out(Shape{bank.filter_count(), patches.out_h(), patches.out_w()});
  conv_xnor_packed(patches, beta.values.ptr(), bank, out.ptr(), counters);
  return out;
}

Tensor conv_xnor(const Tensor& input, const BinarizedFilter& filter, const ConvGeometry& geom,
                 OpCounters* counters) {
  return conv_xnor(input, BinaryFilterBank({filter}), geom, counters);
}

void conv_binary_weight_batch(const Real* input, std::size_t batch, std::size_t channels, std::size_t in_h,
                              std::size_t in_w, const BinaryFilterBank& bank, const ConvGeometry& geom,
                              Real* out, OpCounters* counters) {
  ConvGeometry g = geom;
  check_bank(channels, bank, g);
  g.validate(in_h, in_w);
  const std::size_t out_h = g.output_h(in_h);
  const std::size_t out_w = g.output_w(in_w);
  const std::size_t rows = out_h * out_w;
  const std::size_t n = bank.filter_size();
  const auto pad = static_cast<std::ptrdiff_t>(g.pad);

  // Filter signs as sign-bit flips, so the inner loop is an xor and an add.
  std::vector<std::uint32_t> flips(bank.filter_count() * n);
  for (std::size_t k = 0; k < bank.filter_count(); ++k) {
    const Word* w = bank.filter_words(k);
    for (std::size_t i = 0; i < n; ++i) {
      flips[k * n + i] = ((w[i / kWordBits] >> (i % kWordBits)) & 1u) ? 0u : 0x80000000u;
    }
  }

  std::vector<Real> patches(rows * n);
  const auto filters = static_cast<std::ptrdiff_t>(bank.filter_count());
  const auto row_count = static_cast<std::ptrdiff_t>(rows);
  for (std::size_t b = 0; b < batch; ++b) {
    const Real* image = input + b * channels * in_h * in_w;
    Real* result = out + b * bank.filter_count() * rows;
    // Real-valued windows, one contiguous row per output location.
    std::fill(patches.begin(), patches.end(), Real{0});
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t oy = r / out_w;
      const std::size_t ox = r % out_w;
      Real* dst = patches.data() + r * n;
      for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - pad;
          for (std::size_t kx = 0; kx < g.kernel_w; ++kx, ++dst) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - pad;
            if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(in_h) ||
                ix >= static_cast<std::ptrdiff_t>(in_w)) {
              continue;
            }
            *dst = image[(c * in_h + static_cast<std::size_t>(iy)) * in_w + static_cast<std::size_t>(ix)];
          }
        }
      }
    }

#pragma omp parallel for collapse(2) schedule(static) num_threads(kernel_threads())
    for (std::ptrdiff_t k = 0; k < filters; ++k) {
      for (std::ptrdiff_t r = 0; r < row_count; ++r) {
        const auto* x = reinterpret_cast<const std::uint32_t*>(patches.data() + static_cast<std::size_t>(r) * n);
        const std::uint32_t* f = flips.data() + static_cast<std::size_t>(k) * n;
        Real acc = 0;
#pragma omp simd reduction(+ : acc)
        for (std::size_t i = 0; i < n; ++i) acc += std::bit_cast<Real>(x[i] ^ f[i]);
        const Real alpha = bank.alpha(static_cast<std::size_t>(k));
        result[static_cast<std::size_t>(k) * rows + static_cast<std::size_t>(r)] =
            alpha == Real{0} ? Real{0} : acc * alpha;
      }
    }
  }
  if (counters) {
    const std::uint64_t outputs = batch * bank.filter_count() * rows;
    counters->real_add += outputs * n;
    counters->real_mul += outputs;
    counters->outputs_scaled += outputs;
  }
}

void conv_binary_weight_into(const Real* input, std::size_t channels, std::size_t in_h,
                             std::size_t in_w, const BinaryFilterBank& bank,
                             const ConvGeometry& geom, Real* out, OpCounters* counters) {
  conv_binary_weight_batch(input, 1, channels, in_h, in_w, bank, geom, out, counters);
}

Tensor conv_binary_weight(const Tensor& input, const BinaryFilterBank& bank,
                          const ConvGeometry& geom, OpCounters* counters) {
  check_input(input, "conv_binary_weight");
  ConvGeometry g = geom;
  check_bank(input.shape()[0], bank, g);
  g.validate(input.shape()[1], input.shape()[2]);
  Tensor out(Shape{bank.filter_count(), g.output_h(input.shape()[1]), g.output_w(input.shape()[2])});
  conv_binary_weight_into(input.ptr(), input.shape()[0], input.shape()[1], input.shape()[2], bank, g,
                          out.ptr(), counters);
  return out;
}

Tensor conv_binary_weight(const Tensor& input, const BinarizedFilter& filter,
                          const ConvGeometry& geom, OpCounters* counters) {
  return conv_binary_weight(input, BinaryFilterBank({filter}), geom, counters);
}

OpCount count_ops(std::uint64_t channels, std::uint64_t filter_area, std::uint64_t output_area,
                  ConvPath path) {
  const std::uint64_t products = channels * filter_area * output_area;
  switch (path) {
    case ConvPath::xnor:
      return {products, output_area};
    case ConvPath::binary_weight:
    case ConvPath::full_precision:
      return {0, products};
  }
  return {};
}

}  // namespace xnornet

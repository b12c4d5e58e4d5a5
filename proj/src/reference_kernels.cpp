//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <cmath>
#include <string>

#include "xnornet/conv_kernels.hpp"

namespace xnornet::reference {

namespace {

struct Window {
  std::vector<Real> values;  // zero-padded, flattened (c, ky, kx)
};

// Gathers the receptive field of output (oy, ox), zeros outside the input.
void gather(const Tensor& input, const ConvGeometry& g, std::size_t oy, std::size_t ox, Window& w) {
  const std::size_t channels = input.shape()[0];
  const auto in_h = static_cast<std::ptrdiff_t>(input.shape()[1]);
  const auto in_w = static_cast<std::ptrdiff_t>(input.shape()[2]);
  w.values.assign(channels * g.window_size(), Real{0});
  std::size_t i = 0;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel_w; ++kx, ++i) {
        const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
        const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad);
        if (iy >= 0 && ix >= 0 && iy < in_h && ix < in_w) {
          w.values[i] = input.at(c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
        }
      }
    }
  }
}

ConvGeometry checked(const Tensor& input, const BinaryFilterBank& bank, ConvGeometry g) {
  if (input.shape().rank() != 3) throw ShapeError("reference kernel: input must be (c, h, w)");
  if (bank.filter_shape()[0] != input.shape()[0]) {
    throw ShapeError("reference kernel: channel mismatch");
  }
  g.kernel_h = bank.filter_shape()[1];
  g.kernel_w = bank.filter_shape()[2];
  g.validate(input.shape()[1], input.shape()[2]);
  return g;
}

}  // namespace

Tensor conv_xnor_direct(const Tensor& input, const BinaryFilterBank& bank, const ConvGeometry& geom) {
  const ConvGeometry g = checked(input, bank, geom);
  const std::size_t out_h = g.output_h(input.shape()[1]);
  const std::size_t out_w = g.output_w(input.shape()[2]);
  Tensor out(Shape{bank.filter_count(), out_h, out_w});
  Window w;
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      gather(input, g, oy, ox, w);
      double l1 = 0;
      for (Real v : w.values) l1 += std::fabs(v);
      const auto beta = static_cast<Real>(l1 / static_cast<double>(w.values.size()));
      const PackedBits h = pack_signs_of(w.values);
      for (std::size_t k = 0; k < bank.filter_count(); ++k) {
        const BinarizedFilter f = bank.filter(k);
        out.at(k, oy, ox) = f.degenerate ? Real{0}
                                         : static_cast<Real>(xnor_dot(h, f.signs)) * beta * f.alpha;
      }
    }
  }
  return out;
}

Tensor conv_binary_weight_direct(const Tensor& input, const BinaryFilterBank& bank,
                                 const ConvGeometry& geom) {
  const ConvGeometry g = checked(input, bank, geom);
  const std::size_t out_h = g.output_h(input.shape()[1]);
  const std::size_t out_w = g.output_w(input.shape()[2]);
  Tensor out(Shape{bank.filter_count(), out_h, out_w});
  Window w;
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      gather(input, g, oy, ox, w);
      for (std::size_t k = 0; k < bank.filter_count(); ++k) {
        const BinarizedFilter f = bank.filter(k);
        Real acc = 0;
        for (std::size_t i = 0; i < w.values.size(); ++i) {
          if (f.signs.bit(i)) {
            acc += w.values[i];
          } else {
            acc -= w.values[i];
          }
        }
        out.at(k, oy, ox) = f.degenerate ? Real{0} : acc * f.alpha;
      }
    }
  }
  return out;
}

}  // namespace xnornet::reference

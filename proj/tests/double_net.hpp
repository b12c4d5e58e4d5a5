//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

// Double-precision re-implementation of the full-precision layers, used as
// a finite-difference oracle. Batchnorm always uses batch statistics.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "xnornet/layers.hpp"

namespace xnornet::testing {

struct DTensor {
  std::size_t n = 0, c = 0, h = 0, w = 0;
  std::vector<double> v;
  double& at(std::size_t b, std::size_t ch, std::size_t y, std::size_t x) { return v[((b * c + ch) * h + y) * w + x]; }
  double at(std::size_t b, std::size_t ch, std::size_t y, std::size_t x) const { return v[((b * c + ch) * h + y) * w + x]; }
};

inline DTensor make_dtensor(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
  return DTensor{n, c, h, w, std::vector<double>(n * c * h * w, 0.0)};
}

struct DoubleNet {
  std::vector<LayerSpec> specs;
  // conv: weights (K, c, kh, kw); batchnorm: gamma then beta.
  std::vector<std::vector<double>> params;

  DTensor forward(DTensor x) const {
    for (std::size_t l = 0; l < specs.size(); ++l) x = apply(specs[l], params[l], x);
    return x;
  }

  double loss(const DTensor& input, const std::vector<int>& labels) const {
    const DTensor z = forward(input);
    const std::size_t classes = z.c * z.h * z.w;
    double total = 0;
    for (std::size_t b = 0; b < z.n; ++b) {
      const double* row = z.v.data() + b * classes;
      const double m = *std::max_element(row, row + classes);
      double s = 0;
      for (std::size_t k = 0; k < classes; ++k) s += std::exp(row[k] - m);
      total += std::log(s) + m - row[labels[b]];
    }
    return total / static_cast<double>(z.n);
  }

  static DTensor apply(const LayerSpec& s, const std::vector<double>& p, const DTensor& x) {
    const ConvGeometry& g = s.geom;
    switch (s.kind) {
      case LayerKind::conv: {
        const std::size_t oh = g.output_h(x.h), ow = g.output_w(x.w);
        DTensor y = make_dtensor(x.n, s.out_channels, oh, ow);
        for (std::size_t b = 0; b < x.n; ++b)
          for (std::size_t k = 0; k < s.out_channels; ++k)
            for (std::size_t oy = 0; oy < oh; ++oy)
              for (std::size_t ox = 0; ox < ow; ++ox) {
                double acc = 0;
                for (std::size_t c = 0; c < x.c; ++c)
                  for (std::size_t i = 0; i < g.kernel_h; ++i)
                    for (std::size_t j = 0; j < g.kernel_w; ++j) {
                      const long iy = static_cast<long>(oy * g.stride + i) - static_cast<long>(g.pad);
                      const long ix = static_cast<long>(ox * g.stride + j) - static_cast<long>(g.pad);
                      if (iy < 0 || ix < 0 || iy >= static_cast<long>(x.h) || ix >= static_cast<long>(x.w)) continue;
                      acc += x.at(b, c, iy, ix) * p[((k * x.c + c) * g.kernel_h + i) * g.kernel_w + j];
                    }
                y.at(b, k, oy, ox) = acc;
              }
        return y;
      }
      case LayerKind::batchnorm: {
        DTensor y = x;
        const double count = static_cast<double>(x.n * x.h * x.w);
        for (std::size_t c = 0; c < x.c; ++c) {
          double mean = 0, var = 0;
          for (std::size_t b = 0; b < x.n; ++b)
            for (std::size_t i = 0; i < x.h * x.w; ++i) mean += x.v[(b * x.c + c) * x.h * x.w + i];
          mean /= count;
          for (std::size_t b = 0; b < x.n; ++b)
            for (std::size_t i = 0; i < x.h * x.w; ++i) {
              const double d = x.v[(b * x.c + c) * x.h * x.w + i] - mean;
              var += d * d;
            }
          var /= count;
          const double istd = 1.0 / std::sqrt(var + 1e-5);
          for (std::size_t b = 0; b < x.n; ++b)
            for (std::size_t i = 0; i < x.h * x.w; ++i) {
              double& e = y.v[(b * x.c + c) * x.h * x.w + i];
              e = p[c] * (e - mean) * istd + p[x.c + c];
            }
        }
        return y;
      }
      case LayerKind::relu: {
        DTensor y = x;
        for (auto& e : y.v) e = std::max(e, 0.0);
        return y;
      }
      case LayerKind::maxpool:
      case LayerKind::avgpool: {
        const std::size_t oh = g.output_h(x.h), ow = g.output_w(x.w);
        DTensor y = make_dtensor(x.n, x.c, oh, ow);
        const bool is_max = s.kind == LayerKind::maxpool;
        for (std::size_t b = 0; b < x.n; ++b)
          for (std::size_t c = 0; c < x.c; ++c)
            for (std::size_t oy = 0; oy < oh; ++oy)
              for (std::size_t ox = 0; ox < ow; ++ox) {
                double acc = is_max ? -1e300 : 0.0;
                for (std::size_t i = 0; i < g.kernel_h; ++i)
                  for (std::size_t j = 0; j < g.kernel_w; ++j) {
                    const long iy = static_cast<long>(oy * g.stride + i) - static_cast<long>(g.pad);
                    const long ix = static_cast<long>(ox * g.stride + j) - static_cast<long>(g.pad);
                    const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<long>(x.h) && ix < static_cast<long>(x.w);
                    const double e = inside ? x.at(b, c, iy, ix) : (is_max ? -1e300 : 0.0);
                    acc = is_max ? std::max(acc, e) : acc + e;
                  }
                y.at(b, c, oy, ox) = is_max ? acc : acc / static_cast<double>(g.window_size());
              }
        return y;
      }
      case LayerKind::softmax_nll:
        return x;
      default:
        throw std::logic_error("double oracle: unsupported layer");
    }
  }
};

}  // namespace xnornet::testing

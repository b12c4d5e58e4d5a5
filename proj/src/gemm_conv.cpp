//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "xnornet/gemm_conv.hpp"

#include <Eigen/Core>
#include <string>
#include <vector>

namespace xnornet::gemm {

namespace {

using RowMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

struct Dims {
  std::size_t batch, channels, in_h, in_w, filters, out_h, out_w, window;
};

Dims check(const Tensor& input, const Tensor& weights, const ConvGeometry& geom) {
  if (input.shape().rank() != 4) throw ShapeError("gemm conv: input must be (N, c, h, w), got " + input.shape().str());
  if (weights.shape().rank() != 4) throw ShapeError("gemm conv: weights must be (K, c, kh, kw), got " + weights.shape().str());
  if (input.shape()[1] != weights.shape()[1]) {
    throw ShapeError("gemm conv: input " + input.shape().str() + " vs weights " + weights.shape().str());
  }
  geom.validate(input.shape()[2], input.shape()[3]);
  Dims d{};
  d.batch = input.shape()[0];
  d.channels = input.shape()[1];
  d.in_h = input.shape()[2];
  d.in_w = input.shape()[3];
  d.filters = weights.shape()[0];
  d.out_h = geom.output_h(d.in_h);
  d.out_w = geom.output_w(d.in_w);
  d.window = d.channels * geom.window_size();
  return d;
}

}  // namespace

ConvGeometry with_kernel(const ConvGeometry& geom, const Shape& weights) {
  ConvGeometry g = geom;
  g.kernel_h = weights[2];
  g.kernel_w = weights[3];
  return g;
}

void im2col(const Real* image, std::size_t channels, std::size_t in_h, std::size_t in_w,
            const ConvGeometry& g, Real* cols) {
  const std::size_t out_h = g.output_h(in_h);
  const std::size_t out_w = g.output_w(in_w);
  const auto pad = static_cast<std::ptrdiff_t>(g.pad);
  std::size_t row = 0;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel_w; ++kx, ++row) {
        Real* dst = cols + row * out_h * out_w;
        for (std::size_t oy = 0; oy < out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - pad;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in_h)) {
            for (std::size_t ox = 0; ox < out_w; ++ox) *dst++ = 0;
            continue;
          }
          const Real* src = image + (c * in_h + static_cast<std::size_t>(iy)) * in_w;
          for (std::size_t ox = 0; ox < out_w; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - pad;
            *dst++ = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in_w)) ? Real{0} : src[ix];
          }
        }
      }
    }
  }
}

void col2im(const Real* cols, std::size_t channels, std::size_t in_h, std::size_t in_w,
            const ConvGeometry& g, Real* image) {
  const std::size_t out_h = g.output_h(in_h);
  const std::size_t out_w = g.output_w(in_w);
  const auto pad = static_cast<std::ptrdiff_t>(g.pad);
  std::size_t row = 0;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel_w; ++kx, ++row) {
        const Real* src = cols + row * out_h * out_w;
        for (std::size_t oy = 0; oy < out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - pad;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in_h)) {
            src += out_w;
            continue;
          }
          Real* dst = image + (c * in_h + static_cast<std::size_t>(iy)) * in_w;
          for (std::size_t ox = 0; ox < out_w; ++ox, ++src) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - pad;
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(in_w)) dst[ix] += *src;
          }
        }
      }
    }
  }
}

Tensor conv_forward(const Tensor& input, const Tensor& weights, const ConvGeometry& geom) {
  const ConvGeometry g = with_kernel(geom, weights.shape());
  const Dims d = check(input, weights, g);
  const std::size_t plane = d.out_h * d.out_w;
  Tensor out(Shape{d.batch, d.filters, d.out_h, d.out_w});
  std::vector<Real> cols(d.window * plane);
  const ConstMatrixMap w(weights.ptr(), static_cast<Eigen::Index>(d.filters), static_cast<Eigen::Index>(d.window));
  for (std::size_t b = 0; b < d.batch; ++b) {
    im2col(input.ptr() + b * d.channels * d.in_h * d.in_w, d.channels, d.in_h, d.in_w, g, cols.data());
    const ConstMatrixMap c(cols.data(), static_cast<Eigen::Index>(d.window), static_cast<Eigen::Index>(plane));
    MatrixMap o(out.ptr() + b * d.filters * plane, static_cast<Eigen::Index>(d.filters), static_cast<Eigen::Index>(plane));
    o.noalias() = w * c;
  }
  return out;
}

void conv_backward(const Tensor& input, const Tensor& weights, const ConvGeometry& geom,
                   const Tensor& grad_out, Tensor* grad_input, Tensor* grad_weights) {
  const ConvGeometry g = with_kernel(geom, weights.shape());
  const Dims d = check(input, weights, g);
  if (grad_out.shape() != Shape{d.batch, d.filters, d.out_h, d.out_w}) {
    throw ShapeError("gemm conv backward: gradient shape " + grad_out.shape().str());
  }
  const std::size_t plane = d.out_h * d.out_w;
  const std::size_t image = d.channels * d.in_h * d.in_w;
  const auto window = static_cast<Eigen::Index>(d.window);
  const auto filters = static_cast<Eigen::Index>(d.filters);
  const auto cols_n = static_cast<Eigen::Index>(plane);

  std::vector<Real> cols(d.window * plane);
  const ConstMatrixMap w(weights.ptr(), filters, window);
  if (grad_input) *grad_input = Tensor(input.shape());
  if (grad_weights && grad_weights->shape() != weights.shape()) *grad_weights = Tensor(weights.shape());

  for (std::size_t b = 0; b < d.batch; ++b) {
    const ConstMatrixMap go(grad_out.ptr() + b * d.filters * plane, filters, cols_n);
    if (grad_weights) {
      im2col(input.ptr() + b * image, d.channels, d.in_h, d.in_w, g, cols.data());
      const ConstMatrixMap c(cols.data(), window, cols_n);
      MatrixMap gw(grad_weights->ptr(), filters, window);
      gw.noalias() += go * c.transpose();
    }
    if (grad_input) {
      MatrixMap c(cols.data(), window, cols_n);
      c.noalias() = w.transpose() * go;
      col2im(cols.data(), d.channels, d.in_h, d.in_w, g, grad_input->ptr() + b * image);
    }
  }
}

}  // namespace xnornet::gemm

//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>

#include "xnornet/tensor.hpp"

// im2col + GEMM building blocks for batched real-valued convolution and for
// every backward pass. Batches are (N, c, h, w); weights are (K, c, kh, kw).
namespace xnornet::gemm {

/// cols is (c*kh*kw) x (h_out*w_out), row-major; padding reads as 0.
void im2col(const Real* image, std::size_t channels, std::size_t in_h, std::size_t in_w,
            const ConvGeometry& geom, Real* cols);

/// Adjoint of im2col: accumulates cols back into image.
void col2im(const Real* cols, std::size_t channels, std::size_t in_h, std::size_t in_w,
            const ConvGeometry& geom, Real* image);

/// out = conv(input, weights), shape (N, K, h_out, w_out).
Tensor conv_forward(const Tensor& input, const Tensor& weights, const ConvGeometry& geom);

/// Gradients of conv_forward. Either output pointer may be null. The
/// weight gradient is accumulated into *grad_weights (which must already
/// have the weights' shape); the input gradient is overwritten.
void conv_backward(const Tensor& input, const Tensor& weights, const ConvGeometry& geom,
                   const Tensor& grad_out, Tensor* grad_input, Tensor* grad_weights);

/// Geometry with the kernel extent taken from a (K, c, kh, kw) weight tensor.
ConvGeometry with_kernel(const ConvGeometry& geom, const Shape& weights);

}  // namespace xnornet::gemm

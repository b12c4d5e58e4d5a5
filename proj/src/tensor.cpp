//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "xnornet/tensor.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace xnornet {

namespace {

void check_dims(const std::vector<std::size_t>& dims) {
  std::size_t count = 1;
  for (std::size_t d : dims) {
    if (d == 0) throw ShapeError("shape extents must be >= 1");
    if (count > std::numeric_limits<std::size_t>::max() / d) {
      throw ShapeError("shape element count overflows size_t");
    }
    count *= d;
  }
}

}  // namespace

Shape::Shape(std::initializer_list<std::size_t> dims) : dims_(dims) { check_dims(dims_); }

Shape::Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) { check_dims(dims_); }

std::size_t Shape::element_count() const noexcept {
  if (dims_.empty()) return 0;
  return std::accumulate(dims_.begin(), dims_.end(), std::size_t{1}, std::multiplies<>());
}

std::string Shape::str() const {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i) out << 'x';
    out << dims_[i];
  }
  out << ')';
  return out.str();
}

Tensor::Tensor(Shape shape, Real fill)
    : shape_(std::move(shape)), data_(shape_.element_count(), fill) {}

Tensor::Tensor(Shape shape, std::vector<Real> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (data_.size() != shape_.element_count()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_.str());
  }
}

Real& Tensor::at(std::size_t c, std::size_t y, std::size_t x) {
  return data_[(c * shape_[1] + y) * shape_[2] + x];
}

Real Tensor::at(std::size_t c, std::size_t y, std::size_t x) const {
  return data_[(c * shape_[1] + y) * shape_[2] + x];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape.element_count() != size()) {
    throw ShapeError("cannot reshape " + shape_.str() + " to " + shape.str());
  }
  return Tensor(std::move(shape), data_);
}

Tensor Tensor::item(std::size_t index) const {
  if (shape_.rank() < 2 || index >= shape_[0]) {
    throw ShapeError("item " + std::to_string(index) + " out of range for " + shape_.str());
  }
  std::vector<std::size_t> inner(shape_.dims().begin() + 1, shape_.dims().end());
  Shape s(std::move(inner));
  const std::size_t stride = s.element_count();
  auto first = data_.begin() + static_cast<std::ptrdiff_t>(index * stride);
  return Tensor(std::move(s), std::vector<Real>(first, first + static_cast<std::ptrdiff_t>(stride)));
}

bool Tensor::all_finite() const noexcept {
  for (Real v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::size_t ConvGeometry::output_h(std::size_t in_h) const {
  if (stride == 0) throw ShapeError("stride must be >= 1");
  if (in_h + 2 * pad < kernel_h) {
    throw ShapeError("kernel height " + std::to_string(kernel_h) + " exceeds padded input height " +
                     std::to_string(in_h + 2 * pad));
  }
  return (in_h + 2 * pad - kernel_h) / stride + 1;
}

std::size_t ConvGeometry::output_w(std::size_t in_w) const {
  if (stride == 0) throw ShapeError("stride must be >= 1");
  if (in_w + 2 * pad < kernel_w) {
    throw ShapeError("kernel width " + std::to_string(kernel_w) + " exceeds padded input width " +
                     std::to_string(in_w + 2 * pad));
  }
  return (in_w + 2 * pad - kernel_w) / stride + 1;
}

void ConvGeometry::validate(std::size_t in_h, std::size_t in_w) const {
  if (kernel_h == 0 || kernel_w == 0) throw ShapeError("kernel extents must be >= 1");
  (void)output_h(in_h);
  (void)output_w(in_w);
}

Tensor conv2d_reference(const Tensor& input, const Tensor& filters, ConvGeometry geom) {
  if (input.shape().rank() != 3) {
    throw ShapeError("conv2d_reference: input must be (c, h, w), got " + input.shape().str());
  }
  const Tensor bank = filters.shape().rank() == 3
                          ? filters.reshaped(Shape{1, filters.shape()[0], filters.shape()[1],
                                                   filters.shape()[2]})
                          : filters;
  if (bank.shape().rank() != 4) {
    throw ShapeError("conv2d_reference: filters must be (K, c, kh, kw), got " + filters.shape().str());
  }
  const std::size_t channels = input.shape()[0];
  const std::size_t in_h = input.shape()[1];
  const std::size_t in_w = input.shape()[2];
  const std::size_t count = bank.shape()[0];
  if (bank.shape()[1] != channels) {
    throw ShapeError("conv2d_reference: input has " + std::to_string(channels) +
                     " channels but filters expect " + std::to_string(bank.shape()[1]));
  }
  geom.kernel_h = bank.shape()[2];
  geom.kernel_w = bank.shape()[3];
  geom.validate(in_h, in_w);
  const std::size_t out_h = geom.output_h(in_h);
  const std::size_t out_w = geom.output_w(in_w);

  Tensor out(Shape{count, out_h, out_w});
  const auto pad = static_cast<std::ptrdiff_t>(geom.pad);
  for (std::size_t k = 0; k < count; ++k) {
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        Real acc = 0;
        for (std::size_t c = 0; c < channels; ++c) {
          for (std::size_t ky = 0; ky < geom.kernel_h; ++ky) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * geom.stride + ky) - pad;
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in_h)) continue;
            for (std::size_t kx = 0; kx < geom.kernel_w; ++kx) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * geom.stride + kx) - pad;
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in_w)) continue;
              const Real w = bank[((k * channels + c) * geom.kernel_h + ky) * geom.kernel_w + kx];
              acc += w * input.at(c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
            }
          }
        }
        out.at(k, oy, ox) = acc;
      }
    }
  }
  return out;
}

Tensor elementwise(ElementwiseOp op, const Tensor& a) {
  Tensor out(a.shape());
  switch (op) {
    case ElementwiseOp::abs:
      for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::fabs(a[i]);
      break;
    case ElementwiseOp::sign:
      for (std::size_t i = 0; i < a.size(); ++i) out[i] = sign_of(a[i]);
      break;
    default:
      throw std::invalid_argument("elementwise: operation needs a second operand");
  }
  return out;
}

Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("elementwise: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  }
  Tensor out(a.shape());
  switch (op) {
    case ElementwiseOp::add:
      for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
      break;
    case ElementwiseOp::sub:
      for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
      break;
    case ElementwiseOp::mul:
      for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
      break;
    default:
      throw std::invalid_argument("elementwise: operation does not take a tensor operand");
  }
  return out;
}

Tensor elementwise(ElementwiseOp op, const Tensor& a, Real b) {
  Tensor out(a.shape());
  switch (op) {
    case ElementwiseOp::add:
      for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b;
      break;
    case ElementwiseOp::sub:
      for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b;
      break;
    case ElementwiseOp::mul:
    case ElementwiseOp::scale:
      for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b;
      break;
    default:
      throw std::invalid_argument("elementwise: operation does not take a scalar operand");
  }
  return out;
}

Tensor channel_abs_mean(const Tensor& input) {
  if (input.shape().rank() != 3) {
    throw ShapeError("channel_abs_mean: input must be (c, h, w), got " + input.shape().str());
  }
  const std::size_t channels = input.shape()[0];
  const std::size_t plane = input.shape()[1] * input.shape()[2];
  Tensor out(Shape{input.shape()[1], input.shape()[2]});
  for (std::size_t c = 0; c < channels; ++c) {
    const Real* src = input.ptr() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) out[i] += std::fabs(src[i]);
  }
  const Real inv = Real{1} / static_cast<Real>(channels);
  for (std::size_t i = 0; i < plane; ++i) out[i] *= inv;
  return out;
}

}  // namespace xnornet

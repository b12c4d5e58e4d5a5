//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace xnornet {

using Real = float;

/// Thrown when operand shapes or geometry do not fit together.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Extents of a dense array, outermost first. Feature maps are (c, h, w),
/// filter banks (K, c, h, w), batches (N, c, h, w).
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims);
  explicit Shape(std::vector<std::size_t> dims);

  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t operator[](std::size_t axis) const { return dims_.at(axis); }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }

  /// Product of the extents; 0 for the empty shape.
  std::size_t element_count() const noexcept;

  std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;

 private:
  std::vector<std::size_t> dims_;
};

/// Contiguous row-major real array.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, Real fill = Real{0});
  Tensor(Shape shape, std::vector<Real> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<Real> data() noexcept { return data_; }
  std::span<const Real> data() const noexcept { return data_; }
  Real* ptr() noexcept { return data_.data(); }
  const Real* ptr() const noexcept { return data_.data(); }

  Real& operator[](std::size_t i) noexcept { return data_[i]; }
  Real operator[](std::size_t i) const noexcept { return data_[i]; }

  Real& at(std::size_t c, std::size_t y, std::size_t x);
  Real at(std::size_t c, std::size_t y, std::size_t x) const;

  /// Same values under a different shape with equal element count.
  Tensor reshaped(Shape shape) const;

  /// Copy of item `index` along the outermost axis.
  Tensor item(std::size_t index) const;

  bool all_finite() const noexcept;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<Real> data_;
};

/// Zero-padded, symmetric sliding-window geometry.
struct ConvGeometry {
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t stride = 1;
  std::size_t pad = 0;

  /// floor((in + 2 pad - kernel) / stride) + 1; throws if that is < 1.
  std::size_t output_h(std::size_t in_h) const;
  std::size_t output_w(std::size_t in_w) const;

  std::size_t window_size() const noexcept { return kernel_h * kernel_w; }

  void validate(std::size_t in_h, std::size_t in_w) const;

  friend bool operator==(const ConvGeometry&, const ConvGeometry&) = default;
};

/// sign(x) with sign(0) = +1.
constexpr Real sign_of(Real x) noexcept { return x >= Real{0} ? Real{1} : Real{-1}; }

/// Full-precision correlation (no kernel flip, no bias). `input` is
/// (c, h, w); `filters` is (K, c, kh, kw) or a single (c, kh, kw) filter.
/// The result is (K, h_out, w_out).
Tensor conv2d_reference(const Tensor& input, const Tensor& filters, ConvGeometry geom);

enum class ElementwiseOp { add, sub, mul, scale, abs, sign };

/// Unary forms: abs, sign.
Tensor elementwise(ElementwiseOp op, const Tensor& a);
/// Binary forms: add, sub, mul (shapes must be equal).
Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor& b);
/// Scalar forms: add, sub, mul, scale.
Tensor elementwise(ElementwiseOp op, const Tensor& a, Real b);

/// A(y, x) = (1/c) sum_ch |I(ch, y, x)| for a (c, h, w) input; result is (h, w).
Tensor channel_abs_mean(const Tensor& input);

}  // namespace xnornet

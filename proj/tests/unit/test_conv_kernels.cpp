//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include "support.hpp"
#include "xnornet/conv_kernels.hpp"
#include "xnornet/gemm_conv.hpp"
#include "xnornet/parallel.hpp"

using namespace xnornet;
using xnornet::testing::random_signs;
using xnornet::testing::random_tensor;
using xnornet::testing::relative_error;

TEST_CASE("binary-weight convolution examples") {
  const BinarizedFilter f{pack(std::vector<Real>{1, 1, -1, -1}), 2, Shape{1, 2, 2}, false};
  const Tensor out = conv_binary_weight(Tensor(Shape{1, 2, 2}, 1), f, {2, 2, 1, 0});
  CHECK(out == Tensor(Shape{1, 1, 1}, {0}));

  std::mt19937_64 rng(1);
  const Tensor in = random_tensor(Shape{2, 5, 5}, rng);
  const BinarizedFilter ones{pack(std::vector<Real>(18, 1)), 1, Shape{2, 3, 3}, false};
  const Tensor want = conv2d_reference(in, Tensor(Shape{1, 2, 3, 3}, 1), {3, 3, 1, 0});
  CHECK(relative_error(conv_binary_weight(in, ones, {3, 3, 1, 0}), want) < 1e-5);

  const BinarizedFilter zero = binarize_weights(Tensor(Shape{2, 3, 3}));
  CHECK(conv_binary_weight(in, zero, {3, 3, 1, 0}) == Tensor(Shape{1, 3, 3}));
  CHECK_THROWS_AS(conv_binary_weight(Tensor(Shape{3, 5, 5}), ones, {3, 3, 1, 0}), ShapeError);
}

TEST_CASE("binary-weight convolution equals the float convolution with alpha times sign") {
  std::mt19937_64 rng(2);
  for (auto geom : {ConvGeometry{3, 3, 1, 0}, ConvGeometry{3, 3, 2, 1}, ConvGeometry{5, 3, 1, 2}, ConvGeometry{1, 1, 1, 0}}) {
    const Tensor in = random_tensor(Shape{3, 9, 8}, rng);
    const Tensor w = random_tensor(Shape{5, 3, geom.kernel_h, geom.kernel_w}, rng);
    const BinaryFilterBank bank = BinaryFilterBank::from_weights(w);
    const Tensor want = conv2d_reference(in, bank.dense_weights(), geom);
    CHECK(relative_error(conv_binary_weight(in, bank, geom), want) < 1e-5);
    CHECK(relative_error(reference::conv_binary_weight_direct(in, bank, geom), want) < 1e-5);
  }
}

TEST_CASE("binary-weight convolution is invariant under negating both operands") {
  std::mt19937_64 rng(3);
  const Tensor in = random_tensor(Shape{2, 6, 6}, rng);
  const Tensor w = random_tensor(Shape{1, 2, 3, 3}, rng);
  const BinarizedFilter f = binarize_weights(w.item(0));
  const BinarizedFilter neg{f.signs.complement(), f.alpha, f.shape, false};
  const ConvGeometry g{3, 3, 1, 1};
  const Tensor a = conv_binary_weight(in, f, g);
  const Tensor b = conv_binary_weight(elementwise(ElementwiseOp::scale, in, -1), neg, g);
  CHECK(relative_error(b, a) < 1e-6);
}

TEST_CASE("xnor convolution on sign inputs is exact") {
  std::mt19937_64 rng(4);
  const Tensor in = random_signs(Shape{4, 7, 7}, rng);
  const Tensor w = random_signs(Shape{3, 4, 3, 3}, rng);
  const Tensor scaled = elementwise(ElementwiseOp::scale, w, 0.75f);
  const BinaryFilterBank bank = BinaryFilterBank::from_weights(scaled);
  for (std::size_t stride : {1u, 2u}) {
    const ConvGeometry g{3, 3, stride, 0};
    const Tensor want = conv2d_reference(in, scaled, g);
    CHECK(relative_error(conv_xnor(in, bank, g), want) < 1e-5);
    CHECK(relative_error(reference::conv_xnor_direct(in, bank, g), want) < 1e-5);
  }
}

TEST_CASE("xnor convolution single window reduces to the dot factors") {
  std::mt19937_64 rng(5);
  const Tensor in = random_tensor(Shape{3, 3, 3}, rng);
  const Tensor w = random_tensor(Shape{3, 3, 3}, rng);
  const BinarizedFilter f = binarize_weights(w);
  const Tensor out = conv_xnor(in, f, {3, 3, 1, 0});
  const auto factors = binary_dot_factors(in.data(), w.data());
  const std::int64_t dot = xnor_dot(pack(factors.input_signs), pack(factors.weight_signs));
  REQUIRE(out.shape() == Shape{1, 1, 1});
  CHECK(out[0] == doctest::Approx(dot * factors.beta * factors.alpha).epsilon(1e-5));
}

TEST_CASE("xnor convolution matches the packed-patch oracle") {
  // Oracle: (sign(I) conv sign(W)) * K * alpha computed with the float
  // reference; padded pixels binarize to +1.
  std::mt19937_64 rng(6);
  for (auto geom : {ConvGeometry{3, 3, 1, 1}, ConvGeometry{3, 3, 2, 0}, ConvGeometry{2, 3, 1, 1}}) {
    const Tensor in = random_tensor(Shape{5, 8, 7}, rng);
    const Tensor w = random_tensor(Shape{4, 5, geom.kernel_h, geom.kernel_w}, rng);
    const BinaryFilterBank bank = BinaryFilterBank::from_weights(w);
    const std::size_t ph = 8 + 2 * geom.pad, pw = 7 + 2 * geom.pad;
    Tensor padded(Shape{5, ph, pw}, 1);
    for (std::size_t c = 0; c < 5; ++c)
      for (std::size_t y = 0; y < 8; ++y)
        for (std::size_t x = 0; x < 7; ++x) padded.at(c, y + geom.pad, x + geom.pad) = sign_of(in.at(c, y, x));
    ConvGeometry unpadded = geom;
    unpadded.pad = 0;
    const Tensor s = conv2d_reference(padded, bank.dense_signs(), unpadded);
    const BetaMap k = compute_beta_map(in, geom);
    Tensor want(s.shape());
    const std::size_t area = k.values.size();
    for (std::size_t o = 0; o < 4; ++o)
      for (std::size_t i = 0; i < area; ++i) want[o * area + i] = s[o * area + i] * k.values[i] * bank.alpha(o);
    CHECK(relative_error(conv_xnor(in, bank, geom), want) < 1e-5);
    CHECK(relative_error(reference::conv_xnor_direct(in, bank, geom), want) < 1e-5);
  }
}

TEST_CASE("xnor convolution of zero input is zero") {
  std::mt19937_64 rng(7);
  const BinaryFilterBank bank = BinaryFilterBank::from_weights(random_tensor(Shape{2, 3, 3, 3}, rng));
  CHECK(conv_xnor(Tensor(Shape{3, 5, 5}), bank, {3, 3, 1, 1}) == Tensor(Shape{2, 5, 5}));
}

TEST_CASE("xnor error shrinks as inputs approach binary structure") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise(0, 1);
  const Tensor w = random_tensor(Shape{4, 8, 3, 3}, rng);
  const BinaryFilterBank bank = BinaryFilterBank::from_weights(w);
  const Tensor signs = random_signs(Shape{8, 8, 8}, rng);
  const ConvGeometry g{3, 3, 1, 0};
  double previous = 1e9;
  for (double mix : {1.0, 0.3, 0.0}) {
    Tensor in(signs.shape());
    for (std::size_t i = 0; i < in.size(); ++i) in[i] = static_cast<Real>(signs[i] + mix * noise(rng));
    const double err = relative_error(conv_xnor(in, bank, g), conv2d_reference(in, bank.dense_weights(), g));
    CHECK(std::isfinite(err));
    CHECK(err <= previous + 1e-9);
    previous = err;
  }
  CHECK(previous < 1e-5);
}

TEST_CASE("count_ops examples") {
  CHECK(count_ops(256, 9, 196, ConvPath::xnor) == OpCount{256ull * 9 * 196, 196});
  CHECK(count_ops(256, 9, 196, ConvPath::xnor).binary_ops == 451584);
  CHECK(count_ops(1, 1, 1, ConvPath::xnor) == OpCount{1, 1});
  CHECK(count_ops(3, 5, 7, ConvPath::full_precision) == OpCount{0, 105});
  CHECK(count_ops(3, 5, 7, ConvPath::binary_weight).binary_ops == 0);
}

TEST_CASE("instrumented counters match count_ops") {
  std::mt19937_64 rng(9);
  const std::size_t c = 16, filters = 3;
  const Tensor in = random_tensor(Shape{c, 10, 10}, rng);
  const BinaryFilterBank bank = BinaryFilterBank::from_weights(random_tensor(Shape{filters, c, 3, 3}, rng));
  const ConvGeometry g{3, 3, 1, 1};
  OpCounters xc;
  conv_xnor(in, bank, g, &xc);
  const OpCount want = count_ops(c, 9, 100, ConvPath::xnor);
  CHECK(xc.binary_ops == filters * want.binary_ops);
  CHECK(xc.outputs_scaled == filters * want.real_ops);
  CHECK(xc.xnor_words == filters * 100 * words_for(c * 9));
  CHECK(xc.popcount_words == xc.xnor_words);
  // Per output: one multiply by the combined scale, plus the beta map cost.
  CHECK(xc.real_mul <= 2 * filters * 100 + 10 * 10 + 100);

  OpCounters bc;
  conv_binary_weight(in, bank, g, &bc);
  CHECK(bc.real_mul == filters * 100);
  CHECK(bc.binary_ops == 0);
  CHECK(bc.real_add >= filters * 100 * (c * 9 - 1));
}

TEST_CASE("parallel kernels agree with the serial reference at every thread count") {
  std::mt19937_64 rng(10);
  const Tensor in = random_tensor(Shape{32, 12, 12}, rng);
  const BinaryFilterBank bank = BinaryFilterBank::from_weights(random_tensor(Shape{8, 32, 3, 3}, rng));
  const ConvGeometry g{3, 3, 1, 1};
  const Tensor xnor_ref = reference::conv_xnor_direct(in, bank, g);
  const Tensor bwn_ref = reference::conv_binary_weight_direct(in, bank, g);
  for (int threads : {1, 2, 4}) {
    ScopedKernelThreads scope(threads);
    CHECK(relative_error(conv_xnor(in, bank, g), xnor_ref) < 1e-6);
    CHECK(relative_error(conv_binary_weight(in, bank, g), bwn_ref) < 1e-5);
  }
}

TEST_CASE("gemm convolution matches the reference and its adjoint") {
  std::mt19937_64 rng(11);
  const ConvGeometry g{3, 3, 2, 1};
  const Tensor in = random_tensor(Shape{2, 3, 7, 6}, rng);
  const Tensor w = random_tensor(Shape{4, 3, 3, 3}, rng);
  const Tensor out = gemm::conv_forward(in, w, g);
  for (std::size_t n = 0; n < 2; ++n) {
    CHECK(relative_error(out.item(n), conv2d_reference(in.item(n), w, g)) < 1e-5);
  }
  // <conv(x), y> == <x, conv^T(y)> and <conv(x), y> == <w, dW>.
  const Tensor y = random_tensor(out.shape(), rng);
  Tensor gx, gw;
  gemm::conv_backward(in, w, g, y, &gx, &gw);
  double lhs = 0, rhs_x = 0, rhs_w = 0;
  for (std::size_t i = 0; i < out.size(); ++i) lhs += static_cast<double>(out[i]) * y[i];
  for (std::size_t i = 0; i < in.size(); ++i) rhs_x += static_cast<double>(in[i]) * gx[i];
  for (std::size_t i = 0; i < w.size(); ++i) rhs_w += static_cast<double>(w[i]) * gw[i];
  CHECK(rhs_x == doctest::Approx(lhs).epsilon(1e-4));
  CHECK(rhs_w == doctest::Approx(lhs).epsilon(1e-4));
}

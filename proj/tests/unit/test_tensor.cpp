//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <limits>
#include <numeric>

#include "support.hpp"
#include "xnornet/tensor.hpp"

using namespace xnornet;
using xnornet::testing::random_tensor;

TEST_CASE("shape extents and element count") {
  const Shape s{2, 3, 4};
  CHECK(s.rank() == 3);
  CHECK(s.element_count() == 24);
  CHECK(s.str() == "(2x3x4)");
  CHECK(Shape{}.element_count() == 0);
  CHECK_THROWS_AS(Shape({2, 0, 4}), ShapeError);
  const std::size_t big = std::numeric_limits<std::size_t>::max() / 2;
  CHECK_THROWS_AS(Shape({big, 4}), ShapeError);
  CHECK_THROWS(s[3]);
}

TEST_CASE("tensor construction checks the value count") {
  CHECK_THROWS_AS(Tensor(Shape{2, 2}, std::vector<Real>{1, 2, 3}), ShapeError);
  Tensor t(Shape{2, 1, 2}, {1, 2, 3, 4});
  CHECK(t.at(1, 0, 1) == 4);
  CHECK(t.item(1) == Tensor(Shape{1, 2}, {3, 4}));
  CHECK(t.reshaped(Shape{4}).shape() == Shape{4});
  CHECK_THROWS_AS(t.reshaped(Shape{3}), ShapeError);
  t[0] = std::numeric_limits<Real>::quiet_NaN();
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("conv geometry output extent") {
  const ConvGeometry g{3, 3, 2, 1};
  CHECK(g.output_h(7) == 4);
  CHECK(g.output_w(8) == 4);
  CHECK_THROWS_AS(ConvGeometry({5, 5, 1, 0}).output_h(4), ShapeError);
  CHECK_THROWS_AS(ConvGeometry({1, 1, 0, 0}).output_h(4), ShapeError);
}

TEST_CASE("conv2d_reference examples") {
  SUBCASE("all ones") {
    const Tensor out = conv2d_reference(Tensor(Shape{1, 3, 3}, 1), Tensor(Shape{1, 2, 2}, 1), {});
    CHECK(out == Tensor(Shape{1, 2, 2}, 4));
  }
  SUBCASE("zero filter") {
    std::mt19937_64 rng(3);
    const Tensor out = conv2d_reference(random_tensor(Shape{2, 5, 5}, rng), Tensor(Shape{3, 2, 3, 3}), {1, 1, 1, 1});
    CHECK(out == Tensor(Shape{3, 5, 5}));
  }
  SUBCASE("hand dot product") {
    const Tensor out = conv2d_reference(Tensor(Shape{1, 2, 2}, {1, 2, 3, 4}), Tensor(Shape{1, 2, 2}, {1, -1, 0, 2}), {});
    CHECK(out.shape() == Shape{1, 1, 1});
    CHECK(out[0] == 7);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(conv2d_reference(Tensor(Shape{2, 3, 3}), Tensor(Shape{1, 1, 2, 2}), {}), ShapeError);
    CHECK_THROWS_AS(conv2d_reference(Tensor(Shape{1, 2, 2}), Tensor(Shape{1, 1, 3, 3}), {}), ShapeError);
  }
}

TEST_CASE("conv2d_reference matches a double oracle with stride and padding") {
  std::mt19937_64 rng(11);
  for (std::size_t stride : {1u, 2u}) {
    for (std::size_t pad : {0u, 1u, 2u}) {
      const Tensor in = random_tensor(Shape{3, 7, 6}, rng);
      const Tensor f = random_tensor(Shape{4, 3, 3, 2}, rng);
      ConvGeometry g;
      g.stride = stride;
      g.pad = pad;
      const Tensor got = conv2d_reference(in, f, g);
      const auto want = xnornet::testing::conv_oracle(in, f, stride, pad);
      CHECK(xnornet::testing::relative_error(got, xnornet::testing::to_tensor(want, got.shape())) < 1e-6);
    }
  }
}

TEST_CASE("conv2d_reference is linear in both operands") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor i1 = random_tensor(Shape{2, 5, 5}, rng), i2 = random_tensor(Shape{2, 5, 5}, rng);
    const Tensor w1 = random_tensor(Shape{3, 2, 3, 3}, rng), w2 = random_tensor(Shape{3, 2, 3, 3}, rng);
    const Real a = 0.7f, b = -1.3f;
    const ConvGeometry g{3, 3, 1, 1};
    const Tensor mixed_in = elementwise(ElementwiseOp::add, elementwise(ElementwiseOp::scale, i1, a),
                                        elementwise(ElementwiseOp::scale, i2, b));
    const Tensor lhs = conv2d_reference(mixed_in, w1, g);
    const Tensor rhs = elementwise(ElementwiseOp::add, elementwise(ElementwiseOp::scale, conv2d_reference(i1, w1, g), a),
                                   elementwise(ElementwiseOp::scale, conv2d_reference(i2, w1, g), b));
    CHECK(xnornet::testing::relative_error(lhs, rhs) < 1e-6);
    const Tensor mixed_w = elementwise(ElementwiseOp::add, elementwise(ElementwiseOp::scale, w1, a),
                                       elementwise(ElementwiseOp::scale, w2, b));
    const Tensor lhs2 = conv2d_reference(i1, mixed_w, g);
    const Tensor rhs2 = elementwise(ElementwiseOp::add, elementwise(ElementwiseOp::scale, conv2d_reference(i1, w1, g), a),
                                    elementwise(ElementwiseOp::scale, conv2d_reference(i1, w2, g), b));
    CHECK(xnornet::testing::relative_error(lhs2, rhs2) < 1e-6);
  }
}

TEST_CASE("elementwise examples") {
  CHECK(elementwise(ElementwiseOp::sign, Tensor(Shape{3}, {0.5f, 0.0f, -0.1f})) == Tensor(Shape{3}, {1, 1, -1}));
  CHECK(elementwise(ElementwiseOp::abs, Tensor(Shape{2}, {-2, 3})) == Tensor(Shape{2}, {2, 3}));
  CHECK(elementwise(ElementwiseOp::mul, Tensor(Shape{2}, {1, 2}), Tensor(Shape{2}, {3, 4})) == Tensor(Shape{2}, {3, 8}));
  CHECK(elementwise(ElementwiseOp::sub, Tensor(Shape{2}, {1, 2}), Tensor(Shape{2}, {3, 4})) == Tensor(Shape{2}, {-2, -2}));
  CHECK_THROWS_AS(elementwise(ElementwiseOp::add, Tensor(Shape{2}), Tensor(Shape{3})), ShapeError);
  CHECK(sign_of(-0.0f) == 1);
}

TEST_CASE("sign times magnitude restores the value") {
  std::mt19937_64 rng(8);
  const Tensor x = random_tensor(Shape{1000}, rng, -100, 100);
  const Tensor back = elementwise(ElementwiseOp::mul, elementwise(ElementwiseOp::sign, x), elementwise(ElementwiseOp::abs, x));
  CHECK(back == x);
}

TEST_CASE("channel_abs_mean") {
  CHECK(channel_abs_mean(Tensor(Shape{2, 1, 1}, {1, -3})) == Tensor(Shape{1, 1}, {2}));
  CHECK(channel_abs_mean(Tensor(Shape{5, 2, 3}, 1)) == Tensor(Shape{2, 3}, 1));
  const Tensor one(Shape{1, 2, 2}, {-1, 2, -3, 4});
  CHECK(channel_abs_mean(one) == Tensor(Shape{2, 2}, {1, 2, 3, 4}));

  // Permuting channels leaves the map unchanged.
  std::mt19937_64 rng(2);
  const Tensor in = random_tensor(Shape{6, 4, 4}, rng);
  std::vector<std::size_t> perm(6);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Tensor permuted(in.shape());
  for (std::size_t c = 0; c < 6; ++c)
    for (std::size_t i = 0; i < 16; ++i) permuted[c * 16 + i] = in[perm[c] * 16 + i];
  CHECK(xnornet::testing::relative_error(channel_abs_mean(permuted), channel_abs_mean(in)) < 1e-6);
}

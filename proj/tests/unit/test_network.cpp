//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <cstring>

#include "double_net.hpp"
#include "support.hpp"
#include "xnornet/arch_config.hpp"
#include "xnornet/conv_kernels.hpp"
#include "xnornet/network.hpp"

using namespace xnornet;
using xnornet::testing::random_tensor;
using xnornet::testing::relative_error;

namespace {

Network from_text(const std::string& text, NetMode mode, BlockOrder order = BlockOrder::cbap) {
  ArchOptions o;
  o.mode = mode;
  o.order = order;
  return build_network(parse_architecture(text, o));
}

const char* kSmall =
    "input 2 6 6\n"
    "conv out=3 k=3 pad=1\n"
    "batchnorm\n"
    "relu\n"
    "maxpool k=2\n"
    "conv out=4 k=3\n"
    "relu\n"
    "conv out=3 k=1\n"
    "softmax\n";

const char* kAvg =
    "input 1 5 5\n"
    "conv out=2 k=2\n"
    "avgpool k=2 stride=1\n"
    "batchnorm\n"
    "conv out=3 k=3\n"
    "softmax\n";

}  // namespace

TEST_CASE("random small networks match finite differences") {
  for (const char* text : {kSmall, kAvg}) {
    Network net = from_text(text, NetMode::full);
    net.initialize(3);
    std::mt19937_64 rng(4);
    // Non-trivial batchnorm affine parameters.
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      if (auto* bn = dynamic_cast<BatchNormLayer*>(&net.layer(l))) {
        bn->gamma().value = random_tensor(bn->gamma().value.shape(), rng, 0.5, 1.5);
        bn->beta().value = random_tensor(bn->beta().value.shape(), rng, -0.5, 0.5);
      }
    }
    const Shape in = net.input_shape();
    const Tensor x = random_tensor(Shape{3, in[0], in[1], in[2]}, rng);
    const std::vector<int> labels{0, 2, 1};

    GradientTape tape;
    net.zero_grad();
    const LossResult loss = loss_softmax_nll(net.forward(x, Mode::train, &tape), labels);
    const Tensor gx = net.backward(tape, loss.grad);

    xnornet::testing::DoubleNet oracle;
    std::vector<Parameter*> param_ptrs;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      oracle.specs.push_back(net.layer(l).spec());
      std::vector<double> p;
      if (auto* c = dynamic_cast<ConvLayer*>(&net.layer(l))) {
        p.assign(c->weights().value.data().begin(), c->weights().value.data().end());
      } else if (auto* bn = dynamic_cast<BatchNormLayer*>(&net.layer(l))) {
        p.assign(bn->gamma().value.data().begin(), bn->gamma().value.data().end());
        p.insert(p.end(), bn->beta().value.data().begin(), bn->beta().value.data().end());
      }
      oracle.params.push_back(p);
    }
    xnornet::testing::DTensor din = xnornet::testing::make_dtensor(3, in[0], in[1], in[2]);
    for (std::size_t i = 0; i < x.size(); ++i) din.v[i] = x[i];
    CHECK(oracle.loss(din, labels) == doctest::Approx(loss.loss).epsilon(1e-5));

    const double h = 1e-6;
    std::vector<double> fd, got;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      std::vector<Real> grads;
      if (auto* c = dynamic_cast<ConvLayer*>(&net.layer(l))) {
        grads.assign(c->weights().grad.data().begin(), c->weights().grad.data().end());
      } else if (auto* bn = dynamic_cast<BatchNormLayer*>(&net.layer(l))) {
        grads.assign(bn->gamma().grad.data().begin(), bn->gamma().grad.data().end());
        grads.insert(grads.end(), bn->beta().grad.data().begin(), bn->beta().grad.data().end());
      }
      for (std::size_t i = 0; i < grads.size(); ++i) {
        auto p = oracle, m = oracle;
        p.params[l][i] += h;
        m.params[l][i] -= h;
        fd.push_back((p.loss(din, labels) - m.loss(din, labels)) / (2 * h));
        got.push_back(grads[i]);
      }
    }
    std::vector<double> fdx, gotx;
    for (std::size_t i = 0; i < din.v.size(); ++i) {
      auto p = din, m = din;
      p.v[i] += h;
      m.v[i] -= h;
      fdx.push_back((oracle.loss(p, labels) - oracle.loss(m, labels)) / (2 * h));
      gotx.push_back(gx[i]);
    }
    CHECK(relative_error(got, fd) < 1e-4);
    CHECK(relative_error(gotx, fdx) < 1e-4);
  }
}

TEST_CASE("construction enforces full-precision ends and the shape chain") {
  LayerSpec bin;
  bin.kind = LayerKind::binconv;
  bin.in_channels = 1;
  bin.out_channels = 2;
  bin.binarize_weights = true;
  LayerSpec conv = bin;
  conv.kind = LayerKind::conv;
  conv.binarize_weights = false;
  LayerSpec last = conv;
  last.in_channels = 2;
  last.out_channels = 3;

  CHECK_NOTHROW(Network(Shape{1, 4, 4}, {conv, [&] { auto s = bin; s.in_channels = 2; return s; }(), last}));
  CHECK_THROWS_AS(Network(Shape{1, 4, 4}, {bin, last}), std::invalid_argument);
  auto bin_last = bin;
  bin_last.in_channels = 2;
  CHECK_THROWS_AS(Network(Shape{1, 4, 4}, {conv, bin_last}), std::invalid_argument);
  // Channel chain break.
  CHECK_THROWS_AS(Network(Shape{1, 4, 4}, {conv, conv}), std::invalid_argument);
  // Spatial chain break: a 5x5 kernel on a 4x4 input.
  auto wide = conv;
  wide.geom = ConvGeometry{5, 5, 1, 0};
  CHECK_THROWS_AS(Network(Shape{1, 4, 4}, {wide, last}), ShapeError);
  CHECK_THROWS_AS(Network(Shape{1, 4, 4}, {}), std::invalid_argument);
}

TEST_CASE("shapes chain through the toy architecture") {
  Network net = from_text(
      "input 1 28 28\n"
      "block out=32 k=5 pad=2 pool=2 first\n"
      "block out=64 k=3 pad=1 pool=2 relu\n"
      "block out=256 k=7 relu\n"
      "conv out=10 k=1\n"
      "softmax\n",
      NetMode::xnor, BlockOrder::bacp);
  CHECK(net.output_shape() == Shape{10, 1, 1});
  CHECK(net.layer_input_shape(0) == Shape{1, 28, 28});
  CHECK(net.layer_input_shape(4) == Shape{32, 14, 14});
}

TEST_CASE("tape is consumed exactly once") {
  Network net = from_text(kSmall, NetMode::full);
  net.initialize(1);
  std::mt19937_64 rng(2);
  const Tensor x = random_tensor(Shape{1, 2, 6, 6}, rng);
  GradientTape tape;
  CHECK_THROWS(net.forward(x, Mode::train, nullptr));
  CHECK_THROWS(net.backward(tape, Tensor(Shape{1, 3, 1, 1})));
  net.forward(x, Mode::train, &tape);
  CHECK_NOTHROW(net.backward(tape, Tensor(Shape{1, 3, 1, 1})));
  CHECK_THROWS(net.backward(tape, Tensor(Shape{1, 3, 1, 1})));
  CHECK_THROWS_AS(net.forward(Tensor(Shape{1, 2, 5, 6}), Mode::eval), ShapeError);
}

TEST_CASE("eval forwards are bit-identical") {
  for (NetMode mode : {NetMode::full, NetMode::bwn, NetMode::xnor}) {
    Network net = from_text(
        "input 3 8 8\n"
        "block out=8 k=3 pad=1 pool=2 first\n"
        "block out=16 k=3 pad=1 pool=2\n"
        "conv out=4 k=2\n"
        "softmax\n",
        mode, BlockOrder::bacp);
    net.initialize(7);
    std::mt19937_64 rng(8);
    const Tensor x = random_tensor(Shape{4, 3, 8, 8}, rng);
    const Tensor a = net.forward(x, Mode::eval);
    const Tensor b = net.forward(x, Mode::eval);
    REQUIRE(a.size() == b.size());
    CHECK(std::memcmp(a.ptr(), b.ptr(), a.size() * sizeof(Real)) == 0);
  }
}

TEST_CASE("B-A-C-P forward equals the hand-chained composition") {
  Network net = from_text(
      "input 2 6 6\n"
      "conv out=3 k=3 pad=1\n"
      "block out=4 k=3 pad=1 pool=2 relu\n"
      "conv out=2 k=3\n"
      "softmax\n",
      NetMode::xnor, BlockOrder::bacp);
  net.initialize(11);
  // conv, batchnorm, binactiv, binconv, relu, maxpool, conv, softmax
  REQUIRE(net.layer_count() == 8);
  CHECK(net.layer(1).spec().kind == LayerKind::batchnorm);
  CHECK(net.layer(2).spec().kind == LayerKind::binactiv);
  CHECK(net.layer(3).spec().kind == LayerKind::binconv);
  CHECK(net.layer(4).spec().kind == LayerKind::relu);
  CHECK(net.layer(5).spec().kind == LayerKind::maxpool);

  std::mt19937_64 rng(12);
  auto& bn = dynamic_cast<BatchNormLayer&>(net.layer(1));
  bn.gamma().value = random_tensor(Shape{3}, rng, 0.5, 2);
  bn.beta().value = random_tensor(Shape{3}, rng, -0.3, 0.3);
  for (std::size_t c = 0; c < 3; ++c) {
    bn.state().running_mean[c] = static_cast<Real>(0.1 * c);
    bn.state().running_var[c] = static_cast<Real>(0.5 + c);
  }
  const Tensor x = random_tensor(Shape{1, 2, 6, 6}, rng);
  const Tensor got = net.forward(x, Mode::eval);

  const auto& c0 = dynamic_cast<const ConvLayer&>(net.layer(0));
  const auto& bc = dynamic_cast<const BinConvLayer&>(net.layer(3));
  const auto& c6 = dynamic_cast<const ConvLayer&>(net.layer(6));
  Tensor a = conv2d_reference(x.item(0), c0.weights().value, {3, 3, 1, 1});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < 36; ++i) {
      const double istd = 1.0 / std::sqrt(bn.state().running_var[c] + 1e-5);
      a[c * 36 + i] = static_cast<Real>((a[c * 36 + i] - bn.state().running_mean[c]) * istd * bn.gamma().value[c] + bn.beta().value[c]);
    }
  const BetaMap k = compute_beta_map(a, {3, 3, 1, 1});
  Tensor padded(Shape{3, 8, 8}, 1);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 6; ++y)
      for (std::size_t xx = 0; xx < 6; ++xx) padded.at(c, y + 1, xx + 1) = sign_of(a.at(c, y, xx));
  Tensor s = conv2d_reference(padded, bc.bank().dense_signs(), {3, 3, 1, 0});
  for (std::size_t f = 0; f < 4; ++f)
    for (std::size_t i = 0; i < 36; ++i) s[f * 36 + i] = std::max(Real{0}, s[f * 36 + i] * k.values[i] * bc.bank().alpha(f));
  Tensor pooled(Shape{4, 3, 3});
  for (std::size_t f = 0; f < 4; ++f)
    for (std::size_t y = 0; y < 3; ++y)
      for (std::size_t xx = 0; xx < 3; ++xx)
        pooled.at(f, y, xx) = std::max({s.at(f, 2 * y, 2 * xx), s.at(f, 2 * y + 1, 2 * xx), s.at(f, 2 * y, 2 * xx + 1),
                                        s.at(f, 2 * y + 1, 2 * xx + 1)});
  const Tensor want = conv2d_reference(pooled, c6.weights().value, {3, 3, 1, 0});
  CHECK(relative_error(got.reshaped(want.shape()), want) < 1e-5);
}

TEST_CASE("initialize binarizes every binarized layer") {
  Network net = from_text(kSmall, NetMode::full);
  Network bwn = from_text(
      "input 1 8 8\nconv out=4 k=3\nbinconv out=6 k=3\nconv out=2 k=4\nsoftmax\n", NetMode::bwn);
  bwn.initialize(5);
  const auto& b = dynamic_cast<const BinConvLayer&>(bwn.layer(1));
  CHECK(b.bank() == BinaryFilterBank::from_weights(b.real_weights().value));
  // LeCun-uniform bound sqrt(3 / fan_in).
  const double bound = std::sqrt(3.0 / 36);
  for (Real v : b.real_weights().value.data()) CHECK(std::fabs(v) <= bound);
  const std::uint64_t before = b.binarize_count();
  bwn.binarize();
  CHECK(b.binarize_count() == before + 1);
}

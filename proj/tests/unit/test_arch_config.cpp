//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "xnornet/arch_config.hpp"

using namespace xnornet;

namespace {

std::vector<LayerKind> kinds(const Architecture& a) {
  std::vector<LayerKind> k;
  for (const auto& s : a.layers) k.push_back(s.kind);
  return k;
}

const char* kBlock = "input 1 8 8\nblock out=4 k=3 pad=1 pool=2 first\nblock out=8 k=3 pad=1 pool=2 relu\nconv out=3 k=2\nsoftmax\n";

}  // namespace

TEST_CASE("block expansion by mode and order") {
  using K = LayerKind;
  ArchOptions xnor_cbap{NetMode::xnor, BlockOrder::cbap, false, 1};
  ArchOptions xnor_bacp{NetMode::xnor, BlockOrder::bacp, false, 1};
  ArchOptions bwn{NetMode::bwn, BlockOrder::bacp, false, 1};
  ArchOptions full{NetMode::full, BlockOrder::cbap, false, 1};

  CHECK(kinds(parse_architecture(kBlock, xnor_cbap)) ==
        std::vector<K>{K::conv, K::batchnorm, K::binactiv, K::maxpool, K::binconv, K::batchnorm, K::binactiv,
                       K::maxpool, K::conv, K::softmax_nll});
  CHECK(kinds(parse_architecture(kBlock, xnor_bacp)) ==
        std::vector<K>{K::conv, K::batchnorm, K::binactiv, K::maxpool, K::batchnorm, K::binactiv, K::binconv,
                       K::relu, K::maxpool, K::conv, K::softmax_nll});
  CHECK(kinds(parse_architecture(kBlock, bwn)) ==
        std::vector<K>{K::conv, K::batchnorm, K::relu, K::maxpool, K::binconv, K::batchnorm, K::relu, K::maxpool,
                       K::conv, K::softmax_nll});
  CHECK(kinds(parse_architecture(kBlock, full)) ==
        std::vector<K>{K::conv, K::batchnorm, K::relu, K::maxpool, K::conv, K::batchnorm, K::relu, K::maxpool,
                       K::conv, K::softmax_nll});

  const Architecture a = parse_architecture(kBlock, xnor_bacp);
  CHECK(a.input == Shape{1, 8, 8});
  const LayerSpec& bc = a.layers[6];
  CHECK(bc.binarize_input);
  CHECK(bc.binarize_weights);
  CHECK(bc.in_channels == 4);
  CHECK(bc.out_channels == 8);
  CHECK(bc.geom == ConvGeometry{3, 3, 1, 1});
  CHECK(a.layers[8].geom == ConvGeometry{2, 2, 2, 0});
  CHECK_NOTHROW(build_network(a));

  const Architecture b = parse_architecture(kBlock, bwn);
  CHECK_FALSE(b.layers[4].binarize_input);
  CHECK(b.layers[4].binarize_weights);
}

TEST_CASE("options propagate to binarized layers") {
  ArchOptions o{NetMode::xnor, BlockOrder::bacp, true, 3};
  const Architecture a = parse_architecture(kBlock, o);
  CHECK(a.layers[5].input_bits == 3);
  CHECK(a.layers[6].input_bits == 3);
  CHECK(a.layers[6].learned_scale);
  CHECK_THROWS_AS(parse_architecture(kBlock, ArchOptions{NetMode::xnor, BlockOrder::bacp, false, 0}), std::invalid_argument);
  CHECK(parse_net_mode("bwn") == NetMode::bwn);
  CHECK(parse_block_order("B-A-C-P") == BlockOrder::bacp);
  CHECK(to_string(BlockOrder::cbap) == "C-B-A-P");
  CHECK_THROWS_AS(parse_net_mode("ternary"), std::invalid_argument);
  CHECK_THROWS_AS(parse_block_order("abcp"), std::invalid_argument);
}

TEST_CASE("pool defaults and comments") {
  const Architecture a = parse_architecture(
      "# comment line\n\ninput 3 9 9   # trailing\nconv out=2 kh=3 kw=1 stride=2\navgpool k=3\nmaxpool k=2 stride=1 pad=1\nconv out=2 k=1\n",
      {});
  REQUIRE(a.layers.size() == 4);
  CHECK(a.layers[0].geom == ConvGeometry{3, 1, 2, 0});
  CHECK(a.layers[1].geom == ConvGeometry{3, 3, 3, 0});
  CHECK(a.layers[2].geom == ConvGeometry{2, 2, 1, 1});
}

TEST_CASE("config errors carry the line number") {
  auto line_of = [](const std::string& text) {
    try {
      parse_architecture(text, {});
    } catch (const ConfigError& e) {
      return e.line();
    }
    return std::size_t{0};
  };
  CHECK(line_of("input 1 4 4\nconv out=2 k=3 bogus=1\n") == 2);
  CHECK(line_of("input 1 4 4\nconv k=3\n") == 2);
  CHECK(line_of("input 1 4 4\n\nfancy out=2\n") == 3);
  CHECK(line_of("conv out=2\n") == 1);
  CHECK(line_of("input 1 4\n") == 1);
  CHECK(line_of("input 1 4 4\ninput 1 4 4\n") == 2);
  CHECK(line_of("input 1 4 4\nconv out=x\n") == 2);
  CHECK(line_of("input 1 4 4\nblock out=2 wide\n") == 2);
  CHECK(line_of("input 1 4 4\nconv out=2 k=0\n") == 2);
  CHECK(line_of("") == 0);
  CHECK_THROWS_AS(parse_architecture("", {}), ConfigError);
}

TEST_CASE("load_architecture reports path and line") {
  const std::string path = "arch_config_test.cfg";
  {
    std::ofstream out(path);
    out << "input 1 4 4\nconv out=2 k=9\nconv out=2 k=1 extra\n";
  }
  try {
    load_architecture(path, {});
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("arch_config_test.cfg:3:") == 0);
  }
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_architecture("/nonexistent/arch.cfg", {}), std::runtime_error);
}

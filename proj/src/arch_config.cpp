//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "xnornet/arch_config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace xnornet {

std::string to_string(NetMode mode) {
  switch (mode) {
    case NetMode::full: return "full";
    case NetMode::bwn: return "bwn";
    case NetMode::xnor: return "xnor";
  }
  return "unknown";
}

std::string to_string(BlockOrder order) { return order == BlockOrder::cbap ? "C-B-A-P" : "B-A-C-P"; }

NetMode parse_net_mode(const std::string& text) {
  if (text == "full") return NetMode::full;
  if (text == "bwn") return NetMode::bwn;
  if (text == "xnor") return NetMode::xnor;
  throw std::invalid_argument("unknown mode '" + text + "' (expected full, bwn or xnor)");
}

BlockOrder parse_block_order(const std::string& text) {
  if (text == "cbap" || text == "C-B-A-P") return BlockOrder::cbap;
  if (text == "bacp" || text == "B-A-C-P") return BlockOrder::bacp;
  throw std::invalid_argument("unknown block order '" + text + "' (expected cbap or bacp)");
}

namespace {

struct Line {
  std::size_t number = 0;
  std::string keyword;
  std::vector<std::string> positional;
  std::map<std::string, std::string> keys;
  std::set<std::string> flags;
};

std::size_t to_size(const Line& line, const std::string& text, const std::string& what) {
  std::size_t v = 0;
  const auto* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || p != end) throw ConfigError(line.number, what + ": expected an integer, got '" + text + "'");
  return v;
}

class Reader {
 public:
  Reader(const Line& line, std::set<std::string> allowed_keys, std::set<std::string> allowed_flags)
      : line_(line) {
    for (const auto& [k, v] : line.keys) {
      if (!allowed_keys.count(k)) throw ConfigError(line.number, line.keyword + ": unknown key '" + k + "'");
    }
    for (const auto& f : line.flags) {
      if (!allowed_flags.count(f)) throw ConfigError(line.number, line.keyword + ": unknown flag '" + f + "'");
    }
    if (!line.positional.empty() && line.keyword != "input") {
      throw ConfigError(line.number, line.keyword + ": unexpected argument '" + line.positional[0] + "'");
    }
  }

  std::size_t get(const std::string& key, std::optional<std::size_t> fallback = std::nullopt) const {
    auto it = line_.keys.find(key);
    if (it == line_.keys.end()) {
      if (!fallback) throw ConfigError(line_.number, line_.keyword + ": missing " + key + "=");
      return *fallback;
    }
    return to_size(line_, it->second, line_.keyword + " " + key);
  }
  bool flag(const std::string& name) const { return line_.flags.count(name) > 0; }

 private:
  const Line& line_;
};

Line tokenize(const std::string& raw, std::size_t number) {
  Line line;
  line.number = number;
  std::istringstream in(raw.substr(0, raw.find('#')));
  std::string tok;
  while (in >> tok) {
    if (line.keyword.empty()) {
      line.keyword = tok;
      continue;
    }
    const auto eq = tok.find('=');
    if (eq == std::string::npos) {
      if (line.keyword == "input") {
        line.positional.push_back(tok);
      } else {
        line.flags.insert(tok);
      }
    } else {
      line.keys[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
  }
  return line;
}

class Builder {
 public:
  Builder(const ArchOptions& options) : options_(options) {}

  void set_channels(std::size_t c) { channels_ = c; }

  void conv(std::size_t out, ConvGeometry g) {
    LayerSpec s;
    s.kind = LayerKind::conv;
    s.in_channels = channels_;
    s.out_channels = out;
    s.geom = g;
    push(s);
    channels_ = out;
  }

  // A binarizable convolution, resolved by the mode.
  void binconv(std::size_t out, ConvGeometry g) {
    if (options_.mode == NetMode::full) return conv(out, g);
    LayerSpec s;
    s.kind = LayerKind::binconv;
    s.in_channels = channels_;
    s.out_channels = out;
    s.geom = g;
    s.binarize_weights = true;
    s.binarize_input = options_.mode == NetMode::xnor;
    s.learned_scale = options_.learned_scale;
    s.input_bits = s.binarize_input ? options_.input_bits : 1;
    push(s);
    channels_ = out;
  }

  void simple(LayerKind kind) {
    LayerSpec s;
    s.kind = kind;
    s.in_channels = channels_;
    s.out_channels = channels_;
    push(s);
  }

  // Binary activation in XNOR mode, ReLU otherwise.
  void activation() {
    if (options_.mode != NetMode::xnor) return simple(LayerKind::relu);
    LayerSpec s;
    s.kind = LayerKind::binactiv;
    s.in_channels = channels_;
    s.out_channels = channels_;
    s.binarize_input = true;
    s.input_bits = options_.input_bits;
    push(s);
  }

  void pool(LayerKind kind, ConvGeometry g) {
    LayerSpec s;
    s.kind = kind;
    s.in_channels = channels_;
    s.out_channels = channels_;
    s.geom = g;
    push(s);
  }

  void block(std::size_t out, ConvGeometry g, std::size_t pool_size, bool relu, bool first) {
    const auto do_pool = [&] {
      if (pool_size > 1) pool(LayerKind::maxpool, ConvGeometry{pool_size, pool_size, pool_size, 0});
    };
    if (first) {
      conv(out, g);
      simple(LayerKind::batchnorm);
      activation();
      do_pool();
      return;
    }
    if (options_.mode != NetMode::xnor || options_.order == BlockOrder::cbap) {
      binconv(out, g);
      simple(LayerKind::batchnorm);
      activation();
      do_pool();
      return;
    }
    simple(LayerKind::batchnorm);
    activation();
    binconv(out, g);
    if (relu) simple(LayerKind::relu);
    do_pool();
  }

  Architecture finish(Shape input) { return Architecture{std::move(input), std::move(layers_)}; }

 private:
  void push(const LayerSpec& s) { layers_.push_back(s); }

  ArchOptions options_;
  std::size_t channels_ = 0;
  std::vector<LayerSpec> layers_;
};

// Pooling passes no default stride and gets stride = kernel height.
ConvGeometry read_geometry(const Reader& r, std::optional<std::size_t> default_stride) {
  ConvGeometry g;
  const std::size_t k = r.get("k", 1);
  g.kernel_h = r.get("kh", k);
  g.kernel_w = r.get("kw", k);
  g.stride = r.get("stride", default_stride.value_or(g.kernel_h));
  g.pad = r.get("pad", 0);
  if (g.kernel_h == 0 || g.kernel_w == 0 || g.stride == 0) {
    throw ShapeError("kernel extent and stride must be positive");
  }
  return g;
}

}  // namespace

Architecture parse_architecture(const std::string& text, const ArchOptions& options) {
  if (options.input_bits < 1 || options.input_bits > 24) {
    throw std::invalid_argument("input bits must be in [1, 24]");
  }
  Builder b(options);
  std::optional<Shape> input;
  std::istringstream in(text);
  std::string raw;
  std::size_t number = 0;
  const std::set<std::string> conv_keys{"out", "k", "kh", "kw", "stride", "pad"};
  const std::set<std::string> pool_keys{"k", "kh", "kw", "stride", "pad"};
  while (std::getline(in, raw)) {
    ++number;
    const Line line = tokenize(raw, number);
    if (line.keyword.empty()) continue;
    if (line.keyword == "input") {
      if (input) throw ConfigError(number, "input declared twice");
      if (line.positional.size() != 3 || !line.keys.empty()) {
        throw ConfigError(number, "input: expected 'input C H W'");
      }
      std::vector<std::size_t> dims;
      for (const auto& p : line.positional) dims.push_back(to_size(line, p, "input"));
      try {
        input = Shape(dims);
      } catch (const std::exception& e) {
        throw ConfigError(number, std::string("input: ") + e.what());
      }
      b.set_channels(dims[0]);
      continue;
    }
    if (!input) throw ConfigError(number, "the first layer line must be preceded by 'input C H W'");
    try {
      const std::string& kw = line.keyword;
      if (kw == "conv" || kw == "binconv") {
        const Reader r(line, conv_keys, {});
        const std::size_t out = r.get("out");
        if (out == 0) throw ConfigError(number, kw + ": out must be positive");
        kw == "conv" ? b.conv(out, read_geometry(r, 1)) : b.binconv(out, read_geometry(r, 1));
      } else if (kw == "block") {
        const Reader r(line, {"out", "k", "kh", "kw", "stride", "pad", "pool"}, {"relu", "first"});
        const std::size_t out = r.get("out");
        if (out == 0) throw ConfigError(number, "block: out must be positive");
        b.block(out, read_geometry(r, 1), r.get("pool", 0), r.flag("relu"), r.flag("first"));
      } else if (kw == "maxpool" || kw == "avgpool") {
        const Reader r(line, pool_keys, {});
        const ConvGeometry g = read_geometry(r, std::nullopt);
        b.pool(kw == "maxpool" ? LayerKind::maxpool : LayerKind::avgpool, g);
      } else if (kw == "batchnorm" || kw == "relu" || kw == "softmax" || kw == "binactiv") {
        const Reader r(line, {}, {});
        if (kw == "batchnorm") b.simple(LayerKind::batchnorm);
        if (kw == "relu") b.simple(LayerKind::relu);
        if (kw == "softmax") b.simple(LayerKind::softmax_nll);
        if (kw == "binactiv") b.activation();
      } else {
        throw ConfigError(number, "unknown layer '" + kw + "'");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(number, e.what());
    }
  }
  if (!input) throw ConfigError(number, "missing 'input C H W'");
  return b.finish(*input);
}

Architecture load_architecture(const std::string& path, const ArchOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open architecture file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_architecture(text.str(), options);
  } catch (const ConfigError& e) {
    throw std::runtime_error(path + ":" + std::to_string(e.line()) + ": " + e.message());
  }
}

Network build_network(const Architecture& arch) { return Network(arch.input, arch.layers); }

}  // namespace xnornet

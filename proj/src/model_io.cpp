//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "xnornet/model_io.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <sstream>

namespace xnornet {

ModelFormatError::ModelFormatError(Kind kind, const std::string& message)
    : std::runtime_error([&] {
        switch (kind) {
          case Kind::bad_magic: return "bad magic: " + message;
          case Kind::unsupported_version: return "unsupported version: " + message;
          case Kind::size_mismatch: return "size mismatch: " + message;
          case Kind::truncated: return "truncated file: " + message;
          case Kind::invalid_record: return "invalid record: " + message;
        }
        return message;
      }()),
      kind_(kind) {}

namespace {

using Kind = ModelFormatError::Kind;

constexpr std::uint8_t kBinarizeInput = 1;
constexpr std::uint8_t kBinarizeWeights = 2;
constexpr std::uint8_t kLearnedScale = 4;
constexpr std::uint8_t kRealWeights = 8;
constexpr std::size_t kHeaderBytes = 4 + 2 + 2 + 12;
constexpr std::size_t kRecordHeaderBytes = 4 + 6 * 4 + 8;

class Writer {
 public:
  void u8(std::uint8_t v) { out.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  template <typename Range>
  void floats(const Range& r) {
    for (float v : r) f32(v);
  }

  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  std::size_t position() const noexcept { return pos_; }
  void need(std::size_t n, const std::string& what) const {
    if (remaining() < n) {
      throw ModelFormatError(Kind::truncated, what + " needs " + std::to_string(n) + " bytes at offset " +
                                                  std::to_string(pos_) + ", " + std::to_string(remaining()) +
                                                  " left");
    }
  }
  std::uint64_t le(int width) {
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= std::uint64_t{bytes_[pos_ + static_cast<std::size_t>(i)]} << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  std::vector<Real> floats(std::size_t n) {
    std::vector<Real> v(n);
    for (auto& x : v) x = f32();
    return v;
  }
  void skip(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t narrow(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw std::out_of_range(std::string("model: ") + what + " does not fit in 32 bits");
  }
  return static_cast<std::uint32_t>(v);
}

// Multiplies with an overflow check against the remaining file size.
std::uint64_t checked_product(std::initializer_list<std::uint64_t> factors) {
  std::uint64_t p = 1;
  for (std::uint64_t f : factors) {
    if (f != 0 && p > std::numeric_limits<std::uint64_t>::max() / f) {
      throw ModelFormatError(Kind::size_mismatch, "declared shape overflows");
    }
    p *= f;
  }
  return p;
}

std::uint64_t expected_payload(const LayerSpec& s, bool real_weights) {
  const std::uint64_t n = checked_product({s.in_channels, s.geom.kernel_h, s.geom.kernel_w});
  switch (s.kind) {
    case LayerKind::conv: return checked_product({s.out_channels, n, 4});
    case LayerKind::binconv: {
      const std::uint64_t words = checked_product({s.out_channels, words_for(n), 8});
      const std::uint64_t alphas = checked_product({s.out_channels, 4});
      const std::uint64_t reals = real_weights ? checked_product({s.out_channels, n, 4}) : 0;
      return words + alphas + reals;
    }
    case LayerKind::batchnorm: return checked_product({s.in_channels, 16}) + 4;
    default: return 0;
  }
}

std::uint8_t flags_of(const LayerSpec& s, bool real) {
  std::uint8_t f = 0;
  if (s.binarize_input) f |= kBinarizeInput;
  if (s.binarize_weights) f |= kBinarizeWeights;
  if (s.learned_scale) f |= kLearnedScale;
  if (real) f |= kRealWeights;
  return f;
}

struct Record {
  LayerSpec spec;
  bool real_weights = false;
  std::size_t payload_offset = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_model(const Network& net, bool include_real_weights) {
  if (net.layer_count() > std::numeric_limits<std::uint16_t>::max()) {
    throw std::out_of_range("model: too many layers for the file format");
  }
  Writer w;
  for (char c : {'X', 'B', 'N', '1'}) w.u8(static_cast<std::uint8_t>(c));
  w.u16(kModelVersion);
  w.u16(static_cast<std::uint16_t>(net.layer_count()));
  for (std::size_t i = 0; i < 3; ++i) w.u32(narrow(net.input_shape()[i], "input extent"));

  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const Layer& layer = net.layer(i);
    const LayerSpec& s = layer.spec();
    const auto* bin = dynamic_cast<const BinConvLayer*>(&layer);
    const bool real = bin && include_real_weights && bin->has_real_weights();
    w.u8(static_cast<std::uint8_t>(s.kind));
    w.u8(flags_of(s, real));
    w.u8(static_cast<std::uint8_t>(s.input_bits));
    w.u8(0);
    w.u32(narrow(s.out_channels, "out channels"));
    w.u32(narrow(s.in_channels, "in channels"));
    w.u32(narrow(s.geom.kernel_h, "kernel"));
    w.u32(narrow(s.geom.kernel_w, "kernel"));
    w.u32(narrow(s.geom.stride, "stride"));
    w.u32(narrow(s.geom.pad, "pad"));
    w.u64(expected_payload(s, real));
    const std::size_t start = w.out.size();
    if (const auto* conv = dynamic_cast<const ConvLayer*>(&layer)) {
      w.floats(conv->weights().value.data());
    } else if (bin) {
      BinaryFilterBank bank = bin->bank();
      if (s.learned_scale) {
        const Tensor& scale = bin->scale().value;
        bank.set_alphas(std::vector<Real>(scale.data().begin(), scale.data().end()));
      }
      for (Word word : bank.words()) w.u64(word);
      w.floats(bank.alphas());
      if (real) w.floats(bin->real_weights().value.data());
    } else if (const auto* bn = dynamic_cast<const BatchNormLayer*>(&layer)) {
      w.floats(bn->state().running_mean);
      w.floats(bn->state().running_var);
      w.floats(bn->gamma().value.data());
      w.floats(bn->beta().value.data());
      w.f32(bn->state().epsilon);
    }
    if (w.out.size() - start != expected_payload(s, real)) {
      throw std::logic_error("model: payload of layer " + std::to_string(i) + " does not match its shape");
    }
  }
  return std::move(w.out);
}

Network deserialize_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.need(4, "magic");
  if (!(bytes[0] == 'X' && bytes[1] == 'B' && bytes[2] == 'N' && bytes[3] == '1')) {
    throw ModelFormatError(Kind::bad_magic, "file does not start with XBN1");
  }
  r.skip(4);
  r.need(2, "version");
  const std::uint16_t version = r.u16();
  if (version != kModelVersion) {
    throw ModelFormatError(Kind::unsupported_version,
                           "file version " + std::to_string(version) + ", reader supports " +
                               std::to_string(kModelVersion));
  }
  r.need(kHeaderBytes - 6, "header");
  const std::uint16_t count = r.u16();
  std::vector<std::size_t> input(3);
  for (auto& d : input) d = r.u32();

  // First pass: validate every record header and payload size before
  // building anything.
  std::vector<Record> records;
  for (std::uint16_t i = 0; i < count; ++i) {
    const std::string where = "layer " + std::to_string(i);
    r.need(kRecordHeaderBytes, where + " header");
    Record rec;
    const std::uint8_t kind = r.u8();
    const std::uint8_t flags = r.u8();
    const std::uint8_t bits = r.u8();
    r.u8();
    if (kind < 1 || kind > 8) throw ModelFormatError(Kind::invalid_record, where + ": unknown kind " + std::to_string(kind));
    if (flags & ~(kBinarizeInput | kBinarizeWeights | kLearnedScale | kRealWeights)) {
      throw ModelFormatError(Kind::invalid_record, where + ": unknown flags");
    }
    LayerSpec& s = rec.spec;
    s.kind = static_cast<LayerKind>(kind);
    s.binarize_input = flags & kBinarizeInput;
    s.binarize_weights = flags & kBinarizeWeights;
    s.learned_scale = flags & kLearnedScale;
    s.input_bits = bits;
    rec.real_weights = flags & kRealWeights;
    s.out_channels = r.u32();
    s.in_channels = r.u32();
    s.geom.kernel_h = r.u32();
    s.geom.kernel_w = r.u32();
    s.geom.stride = r.u32();
    s.geom.pad = r.u32();
    const std::uint64_t payload = r.u64();
    if (rec.real_weights && s.kind != LayerKind::binconv) {
      throw ModelFormatError(Kind::invalid_record, where + ": real-weight flag on a " + to_string(s.kind) + " layer");
    }
    if (bits < 1 || bits > 24) throw ModelFormatError(Kind::invalid_record, where + ": input bits " + std::to_string(bits));
    const std::uint64_t expected = expected_payload(s, rec.real_weights);
    if (payload != expected) {
      throw ModelFormatError(Kind::size_mismatch, where + " (" + to_string(s.kind) + ") declares " +
                                                      std::to_string(payload) + " payload bytes, its shape needs " +
                                                      std::to_string(expected));
    }
    r.need(payload, where + " payload");
    rec.payload_offset = r.position();
    r.skip(payload);
    records.push_back(rec);
  }
  if (r.remaining() != 0) {
    throw ModelFormatError(Kind::size_mismatch, std::to_string(r.remaining()) + " trailing bytes after the last layer");
  }

  std::vector<LayerSpec> specs;
  for (const Record& rec : records) specs.push_back(rec.spec);
  std::optional<Network> net;
  try {
    net.emplace(Shape(input), specs);
  } catch (const std::exception& e) {
    throw ModelFormatError(Kind::invalid_record, e.what());
  }

  for (std::size_t i = 0; i < records.size(); ++i) {
    const Record& rec = records[i];
    const LayerSpec& s = rec.spec;
    Reader p(bytes.subspan(rec.payload_offset));
    Layer& layer = net->layer(i);
    try {
      if (auto* conv = dynamic_cast<ConvLayer*>(&layer)) {
        Tensor& w = conv->weights().value;
        w = Tensor(w.shape(), p.floats(w.size()));
      } else if (auto* bin = dynamic_cast<BinConvLayer*>(&layer)) {
        const Shape filter{s.in_channels, s.geom.kernel_h, s.geom.kernel_w};
        const std::size_t wpf = words_for(filter.element_count());
        std::vector<Word> words(s.out_channels * wpf);
        for (auto& word : words) word = p.u64();
        std::vector<Real> alphas = p.floats(s.out_channels);
        if (rec.real_weights) {
          bin->set_real_weights(Tensor(Shape{s.out_channels, s.in_channels, s.geom.kernel_h, s.geom.kernel_w},
                                       p.floats(s.out_channels * filter.element_count())));
        } else {
          bin->drop_real_weights();
        }
        bin->set_bank(BinaryFilterBank::from_parts(filter, std::move(words), std::move(alphas)));
      } else if (auto* bn = dynamic_cast<BatchNormLayer*>(&layer)) {
        const std::size_t c = s.in_channels;
        bn->state().running_mean = p.floats(c);
        bn->state().running_var = p.floats(c);
        bn->gamma().value = Tensor(Shape{c}, p.floats(c));
        bn->beta().value = Tensor(Shape{c}, p.floats(c));
        bn->state().epsilon = p.f32();
      }
    } catch (const ModelFormatError&) {
      throw;
    } catch (const std::exception& e) {
      throw ModelFormatError(Kind::invalid_record, "layer " + std::to_string(i) + ": " + e.what());
    }
  }
  return std::move(*net);
}

void save_model(const Network& net, const std::string& path, bool include_real_weights) {
  const auto bytes = serialize_model(net, include_real_weights);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write model file '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing model file '" + path + "'");
}

Network load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize_model(bytes);
  } catch (const ModelFormatError& e) {
    throw ModelFormatError(e.kind(), path + ": " + std::string(e.what()).substr(std::string(e.what()).find(": ") + 2));
  }
}

void strip_real_weights(Network& net) {
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    if (auto* b = dynamic_cast<BinConvLayer*>(&net.layer(i)); b && b->has_real_weights()) {
      b->binarize();
      b->drop_real_weights();
    }
  }
}

std::vector<FootprintLayer> footprint_layers(const Network& net) {
  std::vector<FootprintLayer> out;
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const LayerSpec& s = net.layer(i).spec();
    const std::string name = std::to_string(i) + ":" + to_string(s.kind);
    const std::size_t n = s.in_channels * s.geom.kernel_h * s.geom.kernel_w;
    if (s.kind == LayerKind::conv) out.push_back({name, s.out_channels, n, false});
    if (s.kind == LayerKind::binconv) out.push_back({name, s.out_channels, n, true});
    if (s.kind == LayerKind::batchnorm) out.push_back({name, s.in_channels, 4, false});
  }
  return out;
}

std::string describe(const Network& net) {
  std::ostringstream out;
  const Shape& in = net.input_shape();
  out << "input " << in[0] << "x" << in[1] << "x" << in[2] << "\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-4s %-10s %-12s %-12s %-7s %-6s %-4s %-12s %10s %12s\n", "#", "kind", "input",
                "output", "kernel", "stride", "pad", "flags", "params", "bytes");
  out << buf;
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const Layer& layer = net.layer(i);
    const LayerSpec& s = layer.spec();
    std::string flags;
    if (s.binarize_weights) flags += "W";
    if (s.binarize_input) flags += s.input_bits == 1 ? "I" : "I" + std::to_string(s.input_bits);
    if (s.learned_scale) flags += "S";
    if (const auto* b = dynamic_cast<const BinConvLayer*>(&layer); b && b->has_real_weights()) flags += "R";
    if (flags.empty()) flags = "-";
    std::uint64_t params = 0, bytes = 0;
    const std::size_t n = s.in_channels * s.geom.kernel_h * s.geom.kernel_w;
    if (s.kind == LayerKind::conv) {
      params = s.out_channels * n;
      bytes = 4 * params;
    } else if (s.kind == LayerKind::binconv) {
      params = s.out_channels * n;
      bytes = layer_footprint({"", s.out_channels, n, true}, FootprintMode::binary);
    } else if (s.kind == LayerKind::batchnorm) {
      params = 4 * s.in_channels;
      bytes = 4 * params + 4;
    }
    total += bytes;
    const Shape& a = net.layer_input_shape(i);
    const Shape& o = net.layer_input_shape(i + 1);
    const bool spatial = s.kind == LayerKind::conv || s.kind == LayerKind::binconv || s.kind == LayerKind::maxpool ||
                         s.kind == LayerKind::avgpool;
    const std::string kernel = spatial ? std::to_string(s.geom.kernel_h) + "x" + std::to_string(s.geom.kernel_w) : "-";
    std::snprintf(buf, sizeof buf, "%-4zu %-10s %-12s %-12s %-7s %-6s %-4s %-12s %10llu %12llu\n", i,
                  to_string(s.kind).c_str(), a.str().c_str(), o.str().c_str(), kernel.c_str(),
                  spatial ? std::to_string(s.geom.stride).c_str() : "-",
                  spatial ? std::to_string(s.geom.pad).c_str() : "-", flags.c_str(),
                  static_cast<unsigned long long>(params), static_cast<unsigned long long>(bytes));
    out << buf;
  }
  out << "stored weight bytes: " << total << "\n";
  return out.str();
}

std::uint64_t layer_footprint(const FootprintLayer& layer, FootprintMode mode) {
  const std::uint64_t params = std::uint64_t{layer.filters} * layer.filter_size;
  if (mode == FootprintMode::float32 || !layer.binarizable) return 4 * params;
  return std::uint64_t{layer.filters} * (words_for(layer.filter_size) * 8 + 4);
}

std::uint64_t memory_footprint(const std::vector<FootprintLayer>& arch, FootprintMode mode) {
  std::uint64_t total = 0;
  for (const auto& l : arch) total += layer_footprint(l, mode);
  return total;
}

std::vector<FootprintLayer> alexnet_layers() {
  return {
      {"conv1", 96, 3 * 11 * 11, false},
      {"conv2", 256, 48 * 5 * 5, true},
      {"conv3", 384, 256 * 3 * 3, true},
      {"conv4", 384, 192 * 3 * 3, true},
      {"conv5", 256, 192 * 3 * 3, true},
      {"fc6", 4096, 256 * 6 * 6, true},
      {"fc7", 4096, 4096, true},
      {"fc8", 1000, 4096, false},
  };
}

std::vector<FootprintLayer> resnet18_layers() {
  std::vector<FootprintLayer> l{{"conv1", 64, 3 * 7 * 7, false}};
  std::size_t in = 64;
  for (std::size_t stage = 0; stage < 4; ++stage) {
    const std::size_t out = std::size_t{64} << stage;
    const std::string s = "layer" + std::to_string(stage + 1);
    for (std::size_t block = 0; block < 2; ++block) {
      const std::string b = s + "." + std::to_string(block);
      l.push_back({b + ".conv1", out, in * 9, true});
      l.push_back({b + ".conv2", out, out * 9, true});
      if (in != out) l.push_back({b + ".downsample", out, in, true});
      in = out;
    }
  }
  l.push_back({"fc", 1000, 512, false});
  return l;
}

std::vector<FootprintLayer> vgg19_layers() {
  std::vector<FootprintLayer> l;
  const std::size_t widths[] = {64, 64, 128, 128, 256, 256, 256, 256, 512, 512, 512, 512, 512, 512, 512, 512};
  std::size_t in = 3;
  for (std::size_t i = 0; i < std::size(widths); ++i) {
    l.push_back({"conv" + std::to_string(i + 1), widths[i], in * 9, i != 0});
    in = widths[i];
  }
  l.push_back({"fc6", 4096, 512 * 7 * 7, true});
  l.push_back({"fc7", 4096, 4096, true});
  l.push_back({"fc8", 1000, 4096, false});
  return l;
}

}  // namespace xnornet

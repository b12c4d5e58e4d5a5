//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

// Test-only helpers and double-precision oracles. Nothing here calls into
// the library's kernels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "xnornet/tensor.hpp"

namespace xnornet::testing {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<Real>(dist(rng));
  return t;
}

inline Tensor random_signs(Shape shape, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = (rng() & 1u) ? Real{1} : Real{-1};
  return t;
}

/// max |a - b| / max |b|, or max |a - b| when b is all zeros.
inline double relative_error(const Tensor& a, const Tensor& b) {
  double diff = 0, scale = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::fabs(static_cast<double>(a[i]) - b[i]));
    scale = std::max(scale, std::fabs(static_cast<double>(b[i])));
  }
  return scale > 0 ? diff / scale : diff;
}

inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0, scale = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::fabs(a[i] - b[i]));
    scale = std::max(scale, std::fabs(b[i]));
  }
  return scale > 0 ? diff / scale : diff;
}

/// Direct correlation in double: input (c, h, w), filters (K, c, kh, kw).
inline std::vector<double> conv_oracle(const Tensor& in, const Tensor& f, std::size_t stride, std::size_t pad) {
  const std::size_t c = in.shape()[0], h = in.shape()[1], w = in.shape()[2];
  const std::size_t k = f.shape()[0], kh = f.shape()[2], kw = f.shape()[3];
  const std::size_t oh = (h + 2 * pad - kh) / stride + 1, ow = (w + 2 * pad - kw) / stride + 1;
  std::vector<double> out(k * oh * ow, 0.0);
  for (std::size_t o = 0; o < k; ++o)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x) {
        double acc = 0;
        for (std::size_t ch = 0; ch < c; ++ch)
          for (std::size_t i = 0; i < kh; ++i)
            for (std::size_t j = 0; j < kw; ++j) {
              const long iy = static_cast<long>(y * stride + i) - static_cast<long>(pad);
              const long ix = static_cast<long>(x * stride + j) - static_cast<long>(pad);
              if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(w)) continue;
              acc += static_cast<double>(in[(ch * h + iy) * w + ix]) * f[((o * c + ch) * kh + i) * kw + j];
            }
        out[(o * oh + y) * ow + x] = acc;
      }
  return out;
}

inline Tensor to_tensor(const std::vector<double>& v, Shape shape) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < v.size(); ++i) t[i] = static_cast<Real>(v[i]);
  return t;
}

/// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("xnornet-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

inline void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace xnornet::testing

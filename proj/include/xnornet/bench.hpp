//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "xnornet/conv_kernels.hpp"

namespace xnornet {

/// Binary operations one machine word holds (and one instruction performs).
inline constexpr double kOpsPerWord = 64;

/// S = ops * c N_W / (c N_W + ops): speedup of one binary convolution over
/// its full-precision counterpart when N_I non-binary ops remain per filter.
double speedup_model(double channels, double filter_area, double ops_per_word = kOpsPerWord);

struct Timing {
  double seconds = 0;  // per call
  std::size_t reps = 0;
};

/// Runs `fn` `warmup` times, then doubles the repetition count until one
/// timed batch lasts at least `min_seconds`.
Timing time_kernel(const std::function<void()>& fn, double min_seconds, std::size_t warmup = 1);

/// Best effort: restricts the calling thread to one CPU.
bool pin_current_thread();

struct BenchConfig {
  std::vector<std::size_t> channels{1, 2, 3, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
  std::vector<std::size_t> kernels{1, 3, 5, 7, 9, 11};
  std::size_t fixed_channels = 256;
  std::size_t fixed_kernel = 3;
  std::size_t out_size = 14;
  std::size_t filters = 256;
  double min_seconds = 0.05;
  std::size_t warmup = 1;
  std::uint64_t seed = 1;
  int threads = 1;
  /// Also time the serial direct XNOR kernel and the binary-weight kernel.
  bool include_direct = true;
  bool include_bwn = true;
};

struct BenchRow {
  std::string sweep;   // "channels", "filter" or "point"
  std::string kernel;  // float_reference, xnor_direct, xnor, bwn
  std::size_t channels = 0;
  std::size_t kernel_size = 0;
  std::size_t filter_area = 0;
  std::size_t output_area = 0;
  std::size_t filters = 0;
  int threads = 1;
  Timing timing;
  double speedup = 0;        // float_reference time / this time
  double model_speedup = 0;  // speedup_model(c, N_W)
  OpCounters counters;
  std::uint64_t seed = 0;
};

/// Every kernel at one (c, k) point; the output is out_size x out_size.
std::vector<BenchRow> bench_point(std::size_t channels, std::size_t kernel, const BenchConfig& config,
                                  const std::string& sweep = "point");

/// Channel sweep at fixed_kernel, then filter-size sweep at fixed_channels.
std::vector<BenchRow> bench_kernels(const BenchConfig& config,
                                    const std::function<void(const BenchRow&)>& progress = {});

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace xnornet

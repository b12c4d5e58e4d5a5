//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "xnornet/bench.hpp"

#include <chrono>
#include <cstdio>
#include <ostream>
#include <random>
#include <stdexcept>

#if defined(__linux__)
#include <sched.h>
#endif

#include "xnornet/parallel.hpp"

namespace xnornet {

double speedup_model(double channels, double filter_area, double ops_per_word) {
  if (channels < 1 || filter_area < 1) throw std::invalid_argument("speedup_model: c and N_W must be >= 1");
  if (ops_per_word <= 0) throw std::invalid_argument("speedup_model: ops per word must be positive");
  const double cnw = channels * filter_area;
  return ops_per_word * cnw / (cnw + ops_per_word);
}

Timing time_kernel(const std::function<void()>& fn, double min_seconds, std::size_t warmup) {
  using clock = std::chrono::steady_clock;
  for (std::size_t i = 0; i < warmup; ++i) fn();
  std::size_t reps = 1;
  for (;;) {
    const auto start = clock::now();
    for (std::size_t i = 0; i < reps; ++i) fn();
    const double elapsed = std::chrono::duration<double>(clock::now() - start).count();
    if (elapsed >= min_seconds || reps >= (std::size_t{1} << 30)) {
      return {elapsed / static_cast<double>(reps), reps};
    }
    reps *= 2;
  }
}

bool pin_current_thread() {
#if defined(__linux__)
  cpu_set_t current;
  CPU_ZERO(&current);
  if (sched_getaffinity(0, sizeof current, &current) != 0) return false;
  for (int cpu = 0; cpu < CPU_SETSIZE; ++cpu) {
    if (!CPU_ISSET(cpu, &current)) continue;
    cpu_set_t one;
    CPU_ZERO(&one);
    CPU_SET(cpu, &one);
    return sched_setaffinity(0, sizeof one, &one) == 0;
  }
#endif
  return false;
}

std::vector<BenchRow> bench_point(std::size_t channels, std::size_t kernel, const BenchConfig& config,
                                  const std::string& sweep) {
  if (channels == 0 || kernel == 0 || config.out_size == 0 || config.filters == 0) {
    throw std::invalid_argument("bench: sizes must be positive");
  }
  ScopedKernelThreads threads(config.threads);
  // Even kernels cannot keep the size with symmetric padding; grow the
  // input instead so the output stays out_size x out_size.
  ConvGeometry geom{kernel, kernel, 1, (kernel - 1) / 2};
  const std::size_t in_size = config.out_size + kernel - 1 - 2 * geom.pad;

  std::mt19937_64 rng(config.seed ^ (channels * 1315423911u) ^ (kernel << 40));
  std::normal_distribution<Real> dist(0, 1);
  Tensor input(Shape{channels, in_size, in_size});
  for (std::size_t i = 0; i < input.size(); ++i) input[i] = dist(rng);
  Tensor weights(Shape{config.filters, channels, kernel, kernel});
  for (std::size_t i = 0; i < weights.size(); ++i) weights[i] = dist(rng);
  const BinaryFilterBank bank = BinaryFilterBank::from_weights(weights);
  const Tensor dense = bank.dense_weights();

  const std::size_t nw = kernel * kernel;
  const std::size_t ni = config.out_size * config.out_size;
  const double model = speedup_model(static_cast<double>(channels), static_cast<double>(nw));
  auto row = [&](const std::string& name, Timing t, OpCounters counters) {
    BenchRow r;
    r.sweep = sweep;
    r.kernel = name;
    r.channels = channels;
    r.kernel_size = kernel;
    r.filter_area = nw;
    r.output_area = ni;
    r.filters = config.filters;
    r.threads = config.threads;
    r.timing = t;
    r.model_speedup = model;
    r.counters = counters;
    r.seed = config.seed;
    return r;
  };

  std::vector<BenchRow> rows;
  volatile Real sink = 0;
  const Timing ref = time_kernel([&] { sink = conv2d_reference(input, dense, geom)[0]; }, config.min_seconds,
                                 config.warmup);
  OpCounters ref_ops;
  ref_ops.real_mul = std::uint64_t{config.filters} * channels * nw * ni;
  ref_ops.real_add = ref_ops.real_mul;
  rows.push_back(row("float_reference", ref, ref_ops));

  if (config.include_direct) {
    const Timing t = time_kernel([&] { sink = reference::conv_xnor_direct(input, bank, geom)[0]; },
                                 config.min_seconds, config.warmup);
    rows.push_back(row("xnor_direct", t, {}));
  }
  OpCounters xnor_ops;
  conv_xnor(input, bank, geom, &xnor_ops);
  const Timing tx = time_kernel([&] { sink = conv_xnor(input, bank, geom)[0]; }, config.min_seconds, config.warmup);
  rows.push_back(row("xnor", tx, xnor_ops));
  if (config.include_bwn) {
    OpCounters bwn_ops;
    conv_binary_weight(input, bank, geom, &bwn_ops);
    const Timing tb = time_kernel([&] { sink = conv_binary_weight(input, bank, geom)[0]; }, config.min_seconds,
                                  config.warmup);
    rows.push_back(row("bwn", tb, bwn_ops));
  }
  (void)sink;
  for (BenchRow& r : rows) r.speedup = ref.seconds / r.timing.seconds;
  return rows;
}

std::vector<BenchRow> bench_kernels(const BenchConfig& config, const std::function<void(const BenchRow&)>& progress) {
  std::vector<BenchRow> rows;
  auto add = [&](std::vector<BenchRow> point) {
    for (auto& r : point) {
      if (progress) progress(r);
      rows.push_back(std::move(r));
    }
  };
  for (std::size_t c : config.channels) add(bench_point(c, config.fixed_kernel, config, "channels"));
  for (std::size_t k : config.kernels) add(bench_point(config.fixed_channels, k, config, "filter"));
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "sweep,kernel,c,k,N_W,N_I,filters,threads,reps,seconds,speedup,model_speedup,binary_ops,real_mul,real_add,"
         "xnor_words,popcount_words,outputs_scaled,seed\n";
  char buf[512];
  for (const BenchRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%zu,%zu,%zu,%zu,%zu,%d,%zu,%.9g,%.4f,%.4f,%llu,%llu,%llu,%llu,%llu,%llu,%llu\n",
                  r.sweep.c_str(), r.kernel.c_str(), r.channels, r.kernel_size, r.filter_area, r.output_area,
                  r.filters, r.threads, r.timing.reps, r.timing.seconds, r.speedup, r.model_speedup,
                  static_cast<unsigned long long>(r.counters.binary_ops),
                  static_cast<unsigned long long>(r.counters.real_mul),
                  static_cast<unsigned long long>(r.counters.real_add),
                  static_cast<unsigned long long>(r.counters.xnor_words),
                  static_cast<unsigned long long>(r.counters.popcount_words),
                  static_cast<unsigned long long>(r.counters.outputs_scaled), static_cast<unsigned long long>(r.seed));
    out << buf;
  }
}

}  // namespace xnornet

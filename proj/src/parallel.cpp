//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "xnornet/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>

#ifdef XNORNET_WITH_OPENMP
#include <omp.h>
#endif

namespace xnornet {

namespace {

std::atomic<int> g_override{0};

int default_threads() noexcept {
#ifdef XNORNET_WITH_OPENMP
  int threads = omp_get_max_threads();
#else
  int threads = 1;
#endif
  if (const char* cap = std::getenv("XBN_THREADS")) {
    const int limit = std::atoi(cap);
    if (limit > 0) threads = std::min(threads, limit);
  }
  return std::max(threads, 1);
}

}  // namespace

int kernel_threads() noexcept {
  static const int base = default_threads();
  const int forced = g_override.load(std::memory_order_relaxed);
  return forced > 0 ? forced : base;
}

ScopedKernelThreads::ScopedKernelThreads(int threads) noexcept
    : previous_(g_override.exchange(std::max(threads, 1))) {}

ScopedKernelThreads::~ScopedKernelThreads() { g_override.store(previous_); }

}  // namespace xnornet

//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

namespace xnornet {

/// Thread count for parallel kernels: the OpenMP default, capped by the
/// XBN_THREADS environment variable, overridden by ScopedKernelThreads.
int kernel_threads() noexcept;

/// Pins kernel parallelism for the lifetime of the object (bench uses 1).
class ScopedKernelThreads {
 public:
  explicit ScopedKernelThreads(int threads) noexcept;
  ~ScopedKernelThreads();
  ScopedKernelThreads(const ScopedKernelThreads&) = delete;
  ScopedKernelThreads& operator=(const ScopedKernelThreads&) = delete;

 private:
  int previous_;
};

}  // namespace xnornet

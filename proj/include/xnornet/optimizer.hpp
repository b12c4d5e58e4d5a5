//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xnornet/layers.hpp"

namespace xnornet {

enum class OptimizerKind { sgd_momentum, adam };

OptimizerKind parse_optimizer_kind(const std::string& text);
std::string to_string(OptimizerKind kind);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd_momentum;
  Real momentum = Real{0.9};
  Real beta1 = Real{0.9};
  Real beta2 = Real{0.999};
  Real epsilon = Real{1e-8};
  Real weight_decay = 0;
};

/// Updates parameter values from their gradients. Buffers are created on
/// the first step and mirror the parameter shapes.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config) : config_(config) {}

  void step(const std::vector<Parameter*>& params, Real lr);

  const OptimizerConfig& config() const noexcept { return config_; }
  std::uint64_t steps() const noexcept { return steps_; }
  const std::vector<Tensor>& first_moments() const noexcept { return m_; }
  const std::vector<Tensor>& second_moments() const noexcept { return v_; }

 private:
  OptimizerConfig config_;
  std::uint64_t steps_ = 0;
  std::vector<Tensor> m_;  // momentum / first moment
  std::vector<Tensor> v_;  // second moment (adam)
};

enum class ScheduleKind { step_decay, polynomial };

struct LrSchedule {
  ScheduleKind kind = ScheduleKind::step_decay;
  Real base_lr = Real{0.01};
  /// step_decay: lr = base * decay^(epoch / step_epochs).
  Real decay = Real{0.1};
  std::size_t step_epochs = 2;
  /// polynomial: lr = base * (1 - epoch / total_epochs)^power.
  Real power = 4;
  std::size_t total_epochs = 1;

  /// Learning rate used during `epoch` (0-based).
  Real at(std::size_t epoch) const;
};

ScheduleKind parse_schedule_kind(const std::string& text);

}  // namespace xnornet

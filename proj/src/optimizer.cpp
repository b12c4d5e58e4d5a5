//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "xnornet/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace xnornet {

OptimizerKind parse_optimizer_kind(const std::string& text) {
  if (text == "sgd") return OptimizerKind::sgd_momentum;
  if (text == "adam") return OptimizerKind::adam;
  throw std::invalid_argument("unknown optimizer '" + text + "' (expected sgd or adam)");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::adam ? "adam" : "sgd"; }

ScheduleKind parse_schedule_kind(const std::string& text) {
  if (text == "step") return ScheduleKind::step_decay;
  if (text == "poly") return ScheduleKind::polynomial;
  throw std::invalid_argument("unknown schedule '" + text + "' (expected step or poly)");
}

void Optimizer::step(const std::vector<Parameter*>& params, Real lr) {
  if (m_.empty()) {
    for (const Parameter* p : params) {
      m_.emplace_back(p->value.shape());
      if (config_.kind == OptimizerKind::adam) v_.emplace_back(p->value.shape());
    }
  }
  if (m_.size() != params.size()) throw std::logic_error("optimizer: parameter list changed between steps");
  ++steps_;
  const double t = static_cast<double>(steps_);
  const Real bias1 = static_cast<Real>(1 - std::pow(static_cast<double>(config_.beta1), t));
  const Real bias2 = static_cast<Real>(1 - std::pow(static_cast<double>(config_.beta2), t));

  for (std::size_t j = 0; j < params.size(); ++j) {
    Parameter& p = *params[j];
    if (p.grad.shape() != p.value.shape() || m_[j].shape() != p.value.shape()) {
      throw ShapeError("optimizer: buffer shape mismatch for " + p.name);
    }
    Real* w = p.value.ptr();
    const Real* g = p.grad.ptr();
    Real* m = m_[j].ptr();
    const std::size_t n = p.value.size();
    if (config_.kind == OptimizerKind::sgd_momentum) {
      for (std::size_t i = 0; i < n; ++i) {
        const Real gi = g[i] + config_.weight_decay * w[i];
        m[i] = config_.momentum * m[i] + gi;
        w[i] -= lr * m[i];
      }
      continue;
    }
    Real* v = v_[j].ptr();
    for (std::size_t i = 0; i < n; ++i) {
      const Real gi = g[i] + config_.weight_decay * w[i];
      m[i] = config_.beta1 * m[i] + (1 - config_.beta1) * gi;
      v[i] = config_.beta2 * v[i] + (1 - config_.beta2) * gi * gi;
      w[i] -= lr * (m[i] / bias1) / (std::sqrt(v[i] / bias2) + config_.epsilon);
    }
  }
}

Real LrSchedule::at(std::size_t epoch) const {
  if (base_lr < 0) throw std::invalid_argument("learning rate must be non-negative");
  if (kind == ScheduleKind::step_decay) {
    if (step_epochs == 0) throw std::invalid_argument("step schedule needs step_epochs > 0");
    return base_lr * static_cast<Real>(std::pow(decay, static_cast<double>(epoch / step_epochs)));
  }
  if (total_epochs == 0 || epoch >= total_epochs) {
    throw std::out_of_range("polynomial schedule: epoch " + std::to_string(epoch) + " outside [0, " +
                            std::to_string(total_epochs) + ")");
  }
  const double frac = 1.0 - static_cast<double>(epoch) / static_cast<double>(total_epochs);
  return base_lr * static_cast<Real>(std::pow(frac, static_cast<double>(power)));
}

}  // namespace xnornet

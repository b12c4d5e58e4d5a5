//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "xnornet/dataset.hpp"
#include "xnornet/network.hpp"
#include "xnornet/optimizer.hpp"

namespace xnornet {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HistoryRow {
  std::size_t epoch = 0;
  std::string split;  // "train" or "val"
  double loss = 0;
  double top1 = 0;
  double topk = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const HistoryRow&, const HistoryRow&) = default;
};

struct TrainConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 64;
  OptimizerConfig optimizer;
  LrSchedule schedule;
  std::uint64_t seed = 1;
  GradientOptions gradients;
  /// Clamp real weights of binarized layers to [-1, 1] after each update.
  bool clamp_weights = true;
  std::size_t topk = 5;
  /// Written after every epoch when non-empty (real weights included).
  std::string checkpoint_path;
  std::function<void(const HistoryRow&)> on_epoch;
};

struct StepResult {
  double loss = 0;
  double top1 = 0;
  double topk = 0;
};

struct EvalResult {
  double loss = 0;
  double top1 = 0;
  double topk = 0;
};

class Trainer {
 public:
  Trainer(Network& net, TrainConfig config);

  /// Binarize, forward with W~, backward with respect to W~, update the
  /// real weights.
  StepResult train_step(const Tensor& images, const std::vector<int>& labels, Real lr);

  /// Trains for config.epochs; `val` may be null.
  std::vector<HistoryRow> fit(const Dataset& train, const Dataset* val);

  Optimizer& optimizer() noexcept { return optimizer_; }
  const TrainConfig& config() const noexcept { return config_; }
  std::uint64_t steps() const noexcept { return steps_; }

 private:
  Network& net_;
  TrainConfig config_;
  Optimizer optimizer_;
  std::mt19937_64 rng_;
  std::uint64_t steps_ = 0;
};

/// Eval-mode accuracy over the whole dataset. The true label counts as
/// top-k when fewer than k classes beat it, ties going to the lower index.
EvalResult evaluate(Network& net, const Dataset& data, std::size_t k = 5, std::size_t batch_size = 256);

/// Number of classes ranked ahead of `label` under the tie rule.
std::size_t rank_of_label(const Real* logits, std::size_t classes, int label);

void write_history_csv(std::ostream& out, const std::vector<HistoryRow>& rows);

}  // namespace xnornet

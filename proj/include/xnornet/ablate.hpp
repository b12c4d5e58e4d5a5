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

#include "xnornet/arch_config.hpp"
#include "xnornet/dataset.hpp"
#include "xnornet/trainer.hpp"

namespace xnornet {

struct AblationConfig {
  /// Architecture text; the studies set mode, order and scale themselves.
  std::string arch_text;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  /// Training settings of the scale study (binary-weight mode).
  TrainConfig bwn_train;
  /// Training settings of the block-order study (XNOR mode).
  TrainConfig xnor_train;
  bool block_order_study = true;
  bool scale_study = true;
};

struct AblationRow {
  std::string study;    // "block_order" or "scale"
  std::string variant;  // C-B-A-P, B-A-C-P, formula, learned
  std::uint64_t seed = 0;
  double loss = 0;
  double top1 = 0;
  double topk = 0;
};

struct AblationSummary {
  std::string study;
  std::string variant;
  std::vector<std::uint64_t> seeds;
  double mean_top1 = 0;
  double sd_top1 = 0;  // sample standard deviation
  double mean_topk = 0;
  double mean_loss = 0;
};

/// Trains every (variant, seed) pair from scratch and evaluates on `val`.
std::vector<AblationRow> run_ablation(const AblationConfig& config, const Dataset& train, const Dataset& val,
                                      const std::function<void(const AblationRow&)>& progress = {});

std::vector<AblationSummary> summarize(const std::vector<AblationRow>& rows);

/// One "run" line per training run, then one "summary" line per variant.
void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows);

}  // namespace xnornet

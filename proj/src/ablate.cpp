//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "xnornet/ablate.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace xnornet {

namespace {

AblationRow train_variant(const std::string& study, const std::string& variant, const ArchOptions& options,
                          TrainConfig train_config, std::uint64_t seed, const AblationConfig& config,
                          const Dataset& train, const Dataset& val) {
  Network net = build_network(parse_architecture(config.arch_text, options));
  net.initialize(seed);
  train_config.seed = seed;
  train_config.checkpoint_path.clear();
  train_config.on_epoch = nullptr;
  Trainer trainer(net, train_config);
  trainer.fit(train, nullptr);
  const EvalResult e = evaluate(net, val, train_config.topk);
  return {study, variant, seed, e.loss, e.top1, e.topk};
}

}  // namespace

std::vector<AblationRow> run_ablation(const AblationConfig& config, const Dataset& train, const Dataset& val,
                                      const std::function<void(const AblationRow&)>& progress) {
  std::vector<AblationRow> rows;
  auto run = [&](const std::string& study, const std::string& variant, const ArchOptions& options,
                 const TrainConfig& tc) {
    for (std::uint64_t seed : config.seeds) {
      rows.push_back(train_variant(study, variant, options, tc, seed, config, train, val));
      if (progress) progress(rows.back());
    }
  };
  if (config.block_order_study) {
    for (BlockOrder order : {BlockOrder::cbap, BlockOrder::bacp}) {
      ArchOptions o;
      o.mode = NetMode::xnor;
      o.order = order;
      run("block_order", to_string(order), o, config.xnor_train);
    }
  }
  if (config.scale_study) {
    for (bool learned : {false, true}) {
      ArchOptions o;
      o.mode = NetMode::bwn;
      o.learned_scale = learned;
      run("scale", learned ? "learned" : "formula", o, config.bwn_train);
    }
  }
  return rows;
}

std::vector<AblationSummary> summarize(const std::vector<AblationRow>& rows) {
  std::vector<AblationSummary> out;
  for (const AblationRow& r : rows) {
    AblationSummary* s = nullptr;
    for (auto& existing : out) {
      if (existing.study == r.study && existing.variant == r.variant) s = &existing;
    }
    if (!s) {
      out.push_back({r.study, r.variant, {}, 0, 0, 0, 0});
      s = &out.back();
    }
    s->seeds.push_back(r.seed);
    s->mean_top1 += r.top1;
    s->mean_topk += r.topk;
    s->mean_loss += r.loss;
  }
  for (AblationSummary& s : out) {
    const double n = static_cast<double>(s.seeds.size());
    s.mean_top1 /= n;
    s.mean_topk /= n;
    s.mean_loss /= n;
    double sq = 0;
    for (const AblationRow& r : rows) {
      if (r.study == s.study && r.variant == s.variant) sq += (r.top1 - s.mean_top1) * (r.top1 - s.mean_top1);
    }
    s.sd_top1 = n > 1 ? std::sqrt(sq / (n - 1)) : 0.0;
  }
  return out;
}

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
  out << "kind,study,variant,seed,runs,loss,top1,top1_sd,topk\n";
  char buf[256];
  for (const AblationRow& r : rows) {
    std::snprintf(buf, sizeof buf, "run,%s,%s,%llu,1,%.6f,%.6f,0,%.6f\n", r.study.c_str(), r.variant.c_str(),
                  static_cast<unsigned long long>(r.seed), r.loss, r.top1, r.topk);
    out << buf;
  }
  for (const AblationSummary& s : summarize(rows)) {
    std::string seeds;
    for (std::uint64_t seed : s.seeds) seeds += (seeds.empty() ? "" : "+") + std::to_string(seed);
    std::snprintf(buf, sizeof buf, "summary,%s,%s,%s,%zu,%.6f,%.6f,%.6f,%.6f\n", s.study.c_str(), s.variant.c_str(),
                  seeds.c_str(), s.seeds.size(), s.mean_loss, s.mean_top1, s.sd_top1, s.mean_topk);
    out << buf;
  }
}

}  // namespace xnornet

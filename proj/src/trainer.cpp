//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "xnornet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

#include "xnornet/model_io.hpp"

namespace xnornet {

Trainer::Trainer(Network& net, TrainConfig config)
    : net_(net), config_(std::move(config)), optimizer_(config_.optimizer), rng_(config_.seed) {
  if (config_.batch_size == 0) throw std::invalid_argument("trainer: batch size must be positive");
  if (config_.schedule.kind == ScheduleKind::polynomial) config_.schedule.total_epochs = std::max<std::size_t>(config_.epochs, 1);
}

std::size_t rank_of_label(const Real* logits, std::size_t classes, int label) {
  const Real z = logits[label];
  std::size_t ahead = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (logits[c] > z || (logits[c] == z && static_cast<int>(c) < label)) ++ahead;
  }
  return ahead;
}

StepResult Trainer::train_step(const Tensor& images, const std::vector<int>& labels, Real lr) {
  net_.binarize();
  net_.zero_grad();
  GradientTape tape;
  const Tensor logits = net_.forward(images, Mode::train, &tape);
  const LossResult loss = loss_softmax_nll(logits, labels);
  if (!std::isfinite(loss.loss) || !logits.all_finite()) {
    std::ostringstream msg;
    msg << "non-finite loss " << loss.loss << " at step " << steps_ << " (lr " << lr << ", batch "
        << labels.size() << ", logits finite: " << (logits.all_finite() ? "yes" : "no") << ")";
    throw TrainingError(msg.str());
  }
  net_.backward(tape, loss.grad, config_.gradients);

  net_.notify(NetEvent::update);
  const auto params = net_.parameters();
  optimizer_.step(params, lr);
  if (config_.clamp_weights) {
    for (Parameter* p : params) {
      if (!p->clamp_unit) continue;
      for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] = std::clamp(p->value[i], Real{-1}, Real{1});
    }
  }
  ++steps_;

  const std::size_t classes = logits.size() / labels.size();
  std::size_t top1 = 0, topk = 0;
  for (std::size_t b = 0; b < labels.size(); ++b) {
    const std::size_t rank = rank_of_label(logits.ptr() + b * classes, classes, labels[b]);
    if (rank == 0) ++top1;
    if (rank < config_.topk) ++topk;
  }
  const double n = static_cast<double>(labels.size());
  return {loss.loss, static_cast<double>(top1) / n, static_cast<double>(topk) / n};
}

std::vector<HistoryRow> Trainer::fit(const Dataset& train, const Dataset* val) {
  std::vector<HistoryRow> history;
  if (train.size() == 0) throw std::invalid_argument("trainer: empty training set");
  std::vector<std::size_t> order(train.size());
  for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
    const Real lr = config_.schedule.at(epoch);
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Fisher-Yates on the raw engine output, identical across standard libraries.
    for (std::size_t i = order.size(); i-- > 1;) std::swap(order[i], order[rng_() % (i + 1)]);

    double loss_sum = 0, top1_sum = 0, topk_sum = 0;
    for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
      const std::size_t end = std::min(order.size(), start + config_.batch_size);
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(end));
      const StepResult r = train_step(train.gather_images(idx), train.gather_labels(idx), lr);
      loss_sum += r.loss * static_cast<double>(idx.size());
      top1_sum += r.top1 * static_cast<double>(idx.size());
      topk_sum += r.topk * static_cast<double>(idx.size());
    }
    // The bank still holds the signs from before the last update.
    net_.binarize();
    const double n = static_cast<double>(order.size());
    HistoryRow row{epoch, "train", loss_sum / n, top1_sum / n, topk_sum / n, config_.seed};
    history.push_back(row);
    if (config_.on_epoch) config_.on_epoch(row);
    if (val) {
      const EvalResult e = evaluate(net_, *val, config_.topk);
      HistoryRow vrow{epoch, "val", e.loss, e.top1, e.topk, config_.seed};
      history.push_back(vrow);
      if (config_.on_epoch) config_.on_epoch(vrow);
    }
    if (!config_.checkpoint_path.empty()) {
      try {
        save_model(net_, config_.checkpoint_path, true);
      } catch (const std::exception& e) {
        throw TrainingError("checkpoint after epoch " + std::to_string(epoch) + ": " + e.what());
      }
    }
  }
  return history;
}

EvalResult evaluate(Network& net, const Dataset& data, std::size_t k, std::size_t batch_size) {
  EvalResult r;
  if (data.size() == 0) return r;
  if (batch_size == 0) batch_size = 1;
  std::size_t top1 = 0, topk = 0;
  double loss_sum = 0;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t end = std::min(data.size(), start + batch_size);
    std::vector<std::size_t> idx(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const std::vector<int> labels = data.gather_labels(idx);
    const Tensor logits = net.forward(data.gather_images(idx), Mode::eval);
    loss_sum += loss_softmax_nll(logits, labels).loss * static_cast<double>(idx.size());
    const std::size_t classes = logits.size() / idx.size();
    for (std::size_t b = 0; b < idx.size(); ++b) {
      const std::size_t rank = rank_of_label(logits.ptr() + b * classes, classes, labels[b]);
      if (rank == 0) ++top1;
      if (rank < k) ++topk;
    }
  }
  const double n = static_cast<double>(data.size());
  r.loss = loss_sum / n;
  r.top1 = static_cast<double>(top1) / n;
  r.topk = static_cast<double>(topk) / n;
  return r;
}

void write_history_csv(std::ostream& out, const std::vector<HistoryRow>& rows) {
  out << "epoch,split,loss,top1,topk,seed\n";
  char buf[160];
  for (const HistoryRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%s,%.6f,%.6f,%.6f,%llu\n", r.epoch, r.split.c_str(), r.loss, r.top1, r.topk,
                  static_cast<unsigned long long>(r.seed));
    out << buf;
  }
}

}  // namespace xnornet

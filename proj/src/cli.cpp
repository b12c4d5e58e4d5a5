//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "xnornet/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "xnornet/ablate.hpp"
#include "xnornet/arch_config.hpp"
#include "xnornet/bench.hpp"
#include "xnornet/dataset.hpp"
#include "xnornet/model_io.hpp"
#include "xnornet/parallel.hpp"
#include "xnornet/trainer.hpp"

namespace xnornet {

namespace {

// Errors caused by the invocation rather than by the program.
class UserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct TrainOptions {
  std::string mode = "full";
  std::string arch;
  std::string data;
  std::string out = "run";
  std::string order = "bacp";
  std::string optimizer = "sgd";
  std::string schedule = "step";
  std::string sign_grad = "indicator";
  std::string weight_grad = "paper";
  std::size_t epochs = 5;
  std::size_t batch = 64;
  double lr = 0.01;
  double decay = 0.1;
  std::size_t step_epochs = 2;
  double power = 4;
  double weight_decay = 0;
  std::uint64_t seed = 1;
  int kbits = 1;
  bool learned_scale = false;
  bool binary_gradient = false;
  bool no_clamp = false;
  std::size_t topk = 5;
  std::size_t train_limit = 0;
  std::size_t val_limit = 0;
};

void add_training_flags(CLI::App* cmd, TrainOptions& o) {
  cmd->add_option("--mode", o.mode, "full, bwn or xnor")->check(CLI::IsMember({"full", "bwn", "xnor"}));
  cmd->add_option("--order", o.order, "block order of XNOR blocks: bacp or cbap")
      ->check(CLI::IsMember({"bacp", "cbap"}));
  cmd->add_option("--epochs", o.epochs, "training epochs");
  cmd->add_option("--batch", o.batch, "minibatch size")->check(CLI::PositiveNumber);
  cmd->add_option("--lr", o.lr, "base learning rate")->check(CLI::NonNegativeNumber);
  cmd->add_option("--optimizer", o.optimizer, "sgd (momentum 0.9) or adam")->check(CLI::IsMember({"sgd", "adam"}));
  cmd->add_option("--schedule", o.schedule, "step or poly")->check(CLI::IsMember({"step", "poly"}));
  cmd->add_option("--decay", o.decay, "step schedule factor");
  cmd->add_option("--step-epochs", o.step_epochs, "epochs between step decays")->check(CLI::PositiveNumber);
  cmd->add_option("--power", o.power, "polynomial schedule exponent");
  cmd->add_option("--weight-decay", o.weight_decay, "L2 penalty");
  cmd->add_option("--seed", o.seed, "initialization and shuffling seed");
  cmd->add_option("--kbits", o.kbits, "input bits of XNOR layers (1 = sign)")->check(CLI::Range(1, 24));
  cmd->add_flag("--learned-scale", o.learned_scale, "learn the per-filter scale instead of mean |W|");
  cmd->add_flag("--binary-gradient", o.binary_gradient, "binarize gradients entering binary convolutions");
  cmd->add_option("--sign-grad", o.sign_grad, "indicator or scaled")->check(CLI::IsMember({"indicator", "scaled"}));
  cmd->add_option("--weight-grad", o.weight_grad, "paper or full")->check(CLI::IsMember({"paper", "full"}));
  cmd->add_flag("--no-clamp", o.no_clamp, "do not clamp real weights of binarized layers to [-1, 1]");
  cmd->add_option("--topk", o.topk, "k of the top-k accuracy")->check(CLI::PositiveNumber);
  cmd->add_option("--train-limit", o.train_limit, "use only the first N training samples");
  cmd->add_option("--val-limit", o.val_limit, "use only the first N validation samples");
}

ArchOptions arch_options(const TrainOptions& o) {
  ArchOptions a;
  a.mode = parse_net_mode(o.mode);
  a.order = parse_block_order(o.order);
  a.learned_scale = o.learned_scale;
  a.input_bits = o.kbits;
  return a;
}

TrainConfig train_config(const TrainOptions& o) {
  TrainConfig c;
  c.epochs = o.epochs;
  c.batch_size = o.batch;
  c.seed = o.seed;
  c.topk = o.topk;
  c.clamp_weights = !o.no_clamp;
  c.optimizer.kind = parse_optimizer_kind(o.optimizer);
  c.optimizer.weight_decay = static_cast<Real>(o.weight_decay);
  c.schedule.kind = parse_schedule_kind(o.schedule);
  c.schedule.base_lr = static_cast<Real>(o.lr);
  c.schedule.decay = static_cast<Real>(o.decay);
  c.schedule.step_epochs = o.step_epochs;
  c.schedule.power = static_cast<Real>(o.power);
  c.schedule.total_epochs = o.epochs;
  c.gradients.sign = o.sign_grad == "scaled" ? SignGradient::scaled_indicator : SignGradient::indicator;
  c.gradients.weight = o.weight_grad == "full" ? WeightGradientForm::full_jacobian : WeightGradientForm::paper_diagonal;
  c.gradients.binary_gradient = o.binary_gradient;
  return c;
}

DataSplits load_data(const std::string& dir, std::size_t train_limit, std::size_t val_limit) {
  DataSplits s = load_splits(dir);
  if (train_limit) s.train = s.train.head(train_limit);
  if (val_limit) s.val = s.val.head(val_limit);
  return s;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw UserError("cannot write '" + path + "'");
  return f;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UserError("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<FootprintLayer> named_architecture(const std::string& name) {
  if (name == "alexnet") return alexnet_layers();
  if (name == "resnet18") return resnet18_layers();
  if (name == "vgg19") return vgg19_layers();
  throw UserError("unknown architecture '" + name + "' (expected alexnet, resnet18 or vgg19)");
}

void print_footprint(std::ostream& out, const std::vector<FootprintLayer>& layers) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-20s %10s %12s %14s %14s %8s\n", "layer", "filters", "filter_size", "float32_bytes",
                "binary_bytes", "ratio");
  out << buf;
  for (const auto& l : layers) {
    const auto f = layer_footprint(l, FootprintMode::float32);
    const auto b = layer_footprint(l, FootprintMode::binary);
    std::snprintf(buf, sizeof buf, "%-20s %10zu %12zu %14llu %14llu %8.2f\n", l.name.c_str(), l.filters,
                  l.filter_size, static_cast<unsigned long long>(f), static_cast<unsigned long long>(b),
                  b ? static_cast<double>(f) / static_cast<double>(b) : 0.0);
    out << buf;
  }
  const auto f = memory_footprint(layers, FootprintMode::float32);
  const auto b = memory_footprint(layers, FootprintMode::binary);
  std::snprintf(buf, sizeof buf, "total float32 %.2f MB, binary %.2f MB, ratio %.2f\n", static_cast<double>(f) / 1e6,
                static_cast<double>(b) / 1e6, b ? static_cast<double>(f) / static_cast<double>(b) : 0.0);
  out << buf;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Binary-weight and XNOR convolutional networks: train, evaluate, benchmark.", "xnornet"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  TrainOptions t;
  auto* train = app.add_subcommand("train", "Train a network and write history.csv and model.xbn");
  add_training_flags(train, t);
  train->add_option("--arch", t.arch, "architecture file")->required();
  train->add_option("--data", t.data, "directory with IDX or CIFAR binary files")->required();
  train->add_option("--out", t.out, "output directory");

  std::string model_path, data_dir;
  std::size_t eval_topk = 5, eval_limit = 0;
  auto* eval = app.add_subcommand("eval", "Evaluate a model file on the validation split");
  eval->add_option("--model", model_path, "model file")->required();
  eval->add_option("--data", data_dir, "data directory")->required();
  eval->add_option("--topk", eval_topk, "k of the top-k accuracy")->check(CLI::PositiveNumber);
  eval->add_option("--val-limit", eval_limit, "use only the first N validation samples");

  BenchConfig bc;
  std::string bench_out;
  bool bench_point_only = false;
  std::size_t point_c = 256, point_k = 3;
  auto* bench = app.add_subcommand("bench", "Time XNOR and binary-weight kernels against the naive float reference");
  bench->add_option("--out", bench_out, "CSV path (default: stdout)");
  bench->add_option("--min-seconds", bc.min_seconds, "minimum duration of one timed batch");
  bench->add_option("--filters", bc.filters, "filters per convolution")->check(CLI::PositiveNumber);
  bench->add_option("--threads", bc.threads, "kernel threads")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bc.seed, "input seed");
  bench->add_option("--channels", bc.channels, "channel sweep values");
  bench->add_option("--kernels", bc.kernels, "filter-size sweep values");
  bench->add_flag("--point", bench_point_only, "time only one point (see --c, --k)");
  bench->add_option("--c", point_c, "channels of --point")->check(CLI::PositiveNumber);
  bench->add_option("--k", point_k, "filter size of --point")->check(CLI::PositiveNumber);

  TrainOptions a;
  a.epochs = 2;
  std::string ablate_out;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::string xnor_optimizer = "adam";
  double xnor_lr = 0.001;
  auto* ablate = app.add_subcommand("ablate", "Block-order and scale-factor ablations over several seeds");
  add_training_flags(ablate, a);
  ablate->add_option("--arch", a.arch, "architecture file")->required();
  ablate->add_option("--data", a.data, "data directory")->required();
  ablate->add_option("--seeds", seeds, "seeds (comma separated)")->delimiter(',');
  ablate->add_option("--xnor-optimizer", xnor_optimizer, "optimizer of the XNOR runs")
      ->check(CLI::IsMember({"sgd", "adam"}));
  ablate->add_option("--xnor-lr", xnor_lr, "learning rate of the XNOR runs");
  ablate->add_option("--out", ablate_out, "CSV path (default: stdout)");

  std::string pack_in, pack_out;
  auto* pack = app.add_subcommand("pack", "Binarize a checkpoint and drop the real weights of binarized layers");
  pack->add_option("--in", pack_in, "checkpoint with real weights")->required();
  pack->add_option("--out", pack_out, "binarized model file")->required();

  std::string describe_model, describe_arch;
  TrainOptions d;
  auto* describe_cmd = app.add_subcommand("describe", "Print the layer table of a model file or architecture");
  describe_cmd->add_option("--model", describe_model, "model file");
  describe_cmd->add_option("--arch", describe_arch, "architecture file");
  describe_cmd->add_option("--mode", d.mode, "mode used to expand --arch")->check(CLI::IsMember({"full", "bwn", "xnor"}));
  describe_cmd->add_option("--order", d.order, "block order used to expand --arch")->check(CLI::IsMember({"bacp", "cbap"}));
  describe_cmd->add_flag("--learned-scale", d.learned_scale, "expand --arch with learned scales");
  describe_cmd->add_option("--kbits", d.kbits, "input bits used to expand --arch")->check(CLI::Range(1, 24));

  double sp_c = 0, sp_nw = 0, sp_ops = kOpsPerWord;
  auto* speedup = app.add_subcommand("speedup", "Theoretical XNOR speedup S = 64 c N_W / (c N_W + 64)");
  speedup->add_option("--c", sp_c, "input channels")->check(CLI::Range(1.0, 1e12));
  speedup->add_option("--nw", sp_nw, "filter area N_W")->check(CLI::Range(1.0, 1e12));
  speedup->add_option("--ops", sp_ops, "binary operations per word")->check(CLI::PositiveNumber);

  std::string fp_arch = "alexnet", fp_model;
  auto* footprint = app.add_subcommand("footprint", "Weight memory of float32 and binary storage");
  footprint->add_option("--arch", fp_arch, "alexnet, resnet18 or vgg19");
  footprint->add_option("--model", fp_model, "model file (overrides --arch)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_user_error;
  }

  if (*train) {
    Network net = build_network(load_architecture(t.arch, arch_options(t)));
    net.initialize(t.seed);
    const DataSplits data = load_data(t.data, t.train_limit, t.val_limit);
    if (data.train.item_shape() != net.input_shape()) {
      throw UserError("data items are " + data.train.item_shape().str() + " but the network expects " +
                      net.input_shape().str());
    }
    std::filesystem::create_directories(t.out);
    TrainConfig c = train_config(t);
    c.checkpoint_path = (std::filesystem::path(t.out) / "model.xbn").string();
    c.on_epoch = [&](const HistoryRow& r) {
      out << "epoch " << r.epoch << " " << r.split << " loss " << fixed(r.loss, 4) << " top1 " << fixed(r.top1, 4)
          << " top" << t.topk << " " << fixed(r.topk, 4) << "\n";
      out.flush();
    };
    Trainer trainer(net, c);
    const auto history = trainer.fit(data.train, &data.val);
    auto csv = open_output((std::filesystem::path(t.out) / "history.csv").string());
    write_history_csv(csv, history);
    out << "wrote " << (std::filesystem::path(t.out) / "history.csv").string() << " and " << c.checkpoint_path
        << " (seed " << t.seed << ")\n";
    return exit_ok;
  }

  if (*eval) {
    Network net = load_model(model_path);
    const DataSplits data = load_data(data_dir, 0, eval_limit);
    if (data.val.item_shape() != net.input_shape()) {
      throw UserError("data items are " + data.val.item_shape().str() + " but the model expects " +
                      net.input_shape().str());
    }
    const EvalResult r = evaluate(net, data.val, eval_topk);
    out << "top1 " << fixed(r.top1, 4) << " top" << eval_topk << " " << fixed(r.topk, 4) << " loss "
        << fixed(r.loss, 4) << " samples " << data.val.size() << "\n";
    return exit_ok;
  }

  if (*bench) {
    const bool pinned = pin_current_thread();
    err << "bench: " << bc.threads << " kernel thread(s), " << (pinned ? "pinned" : "not pinned") << "\n";
    std::vector<BenchRow> rows;
    if (bench_point_only) {
      rows = bench_point(point_c, point_k, bc);
    } else {
      rows = bench_kernels(bc, [&](const BenchRow& r) {
        err << r.sweep << " " << r.kernel << " c=" << r.channels << " k=" << r.kernel_size << " speedup "
            << fixed(r.speedup, 2) << "\n";
      });
    }
    if (bench_out.empty()) {
      write_bench_csv(out, rows);
    } else {
      auto f = open_output(bench_out);
      write_bench_csv(f, rows);
    }
    return exit_ok;
  }

  if (*ablate) {
    AblationConfig cfg;
    cfg.arch_text = read_text(a.arch);
    parse_architecture(cfg.arch_text, arch_options(a));
    cfg.seeds = seeds;
    if (cfg.seeds.empty()) throw UserError("ablate: at least one seed is required");
    cfg.bwn_train = train_config(a);
    cfg.xnor_train = train_config(a);
    cfg.xnor_train.optimizer.kind = parse_optimizer_kind(xnor_optimizer);
    cfg.xnor_train.schedule.base_lr = static_cast<Real>(xnor_lr);
    const DataSplits data = load_data(a.data, a.train_limit, a.val_limit);
    const auto rows = run_ablation(cfg, data.train, data.val, [&](const AblationRow& r) {
      err << r.study << " " << r.variant << " seed " << r.seed << " top1 " << fixed(r.top1, 4) << "\n";
    });
    if (ablate_out.empty()) {
      write_ablation_csv(out, rows);
    } else {
      auto f = open_output(ablate_out);
      write_ablation_csv(f, rows);
    }
    return exit_ok;
  }

  if (*pack) {
    Network net = load_model(pack_in);
    strip_real_weights(net);
    save_model(net, pack_out, false);
    out << "wrote " << pack_out << " (" << std::filesystem::file_size(pack_out) << " bytes)\n";
    return exit_ok;
  }

  if (*describe_cmd) {
    if (describe_model.empty() == describe_arch.empty()) {
      throw UserError("describe: pass exactly one of --model or --arch");
    }
    if (!describe_model.empty()) {
      out << describe(load_model(describe_model));
    } else {
      out << describe(build_network(load_architecture(describe_arch, arch_options(d))));
    }
    return exit_ok;
  }

  if (*speedup) {
    if ((sp_c > 0) != (sp_nw > 0)) throw UserError("speedup: pass both --c and --nw, or neither");
    if (sp_c > 0) {
      out << fixed(speedup_model(sp_c, sp_nw, sp_ops), 2) << "\n";
      return exit_ok;
    }
    out << "c,N_W,speedup\n";
    for (double c : {1.0, 3.0, 16.0, 64.0, 128.0, 256.0, 512.0, 1024.0}) {
      for (double nw : {1.0, 9.0, 25.0, 49.0, 121.0}) {
        out << c << "," << nw << "," << fixed(speedup_model(c, nw, sp_ops), 2) << "\n";
      }
    }
    return exit_ok;
  }

  if (*footprint) {
    print_footprint(out, fp_model.empty() ? named_architecture(fp_arch) : footprint_layers(load_model(fp_model)));
    return exit_ok;
  }
  return exit_internal_error;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    return run(argc, argv, out, err);
  } catch (const std::logic_error& e) {
    // invalid_argument, out_of_range and ShapeError come from bad input.
    if (dynamic_cast<const std::invalid_argument*>(&e) || dynamic_cast<const std::out_of_range*>(&e)) {
      err << "error: " << e.what() << "\n";
      return exit_user_error;
    }
    err << "internal error: " << e.what() << "\n";
    return exit_internal_error;
  } catch (const std::runtime_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_user_error;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return exit_internal_error;
  }
}

int cli_main(int argc, const char* const* argv) { return cli_main(argc, argv, std::cout, std::cerr); }

}  // namespace xnornet

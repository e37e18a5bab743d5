// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "cmad/config/run_config.hpp"
#include "cmad/errors.hpp"
#include "cmad/evaluation/dataset_io.hpp"
#include "cmad/evaluation/protocol.hpp"
#include "cmad/model/adapted_model.hpp"
#include "cmad/model/generation.hpp"
#include "cmad/model/param_count.hpp"
#include "cmad/representation/annotations.hpp"
#include "cmad/training/model_gradcheck.hpp"
#include "cmad/training/trainer.hpp"

namespace cmad::cli {
namespace {

namespace fs = std::filesystem;

RunConfig load_run_config(const std::string& path) {
  return path.empty() ? RunConfig{} : RunConfig::read(path);
}

void guard_output(const fs::path& path, bool force) {
  if (!force && fs::exists(path)) {
    throw IoError(fmt::format("'{}' already exists; pass --force to overwrite", path.string()));
  }
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

SyntheticDataset load_or_synthesize(const RunConfig& rc) {
  if (rc.dataset.empty()) return synthesize_dataset(rc.synthetic, rc.data_seed);
  if (!fs::is_directory(rc.dataset)) throw IoError(fmt::format("dataset directory '{}' does not exist", rc.dataset));
  auto data = read_dataset(rc.dataset);
  if (data.spec.vocab_size != rc.model.base.vocab_size) {
    throw ConfigError(fmt::format("dataset vocabulary {} does not match the model's {}", data.spec.vocab_size,
                                  rc.model.base.vocab_size));
  }
  return data;
}

AdaptedModel<float> load_model(const fs::path& checkpoint) {
  if (!fs::exists(checkpoint)) throw IoError(fmt::format("checkpoint '{}' does not exist", checkpoint.string()));
  const auto cfg_path = config_path_for(checkpoint);
  if (!fs::exists(cfg_path)) {
    throw IoError(fmt::format("model configuration '{}' next to the checkpoint is missing", cfg_path.string()));
  }
  auto model = AdaptedModel<float>::build(ModelConfig::read(cfg_path), 0);
  load_weights(model, checkpoint);
  return model;
}

TrainConfig pretrain_config(const RunConfig& rc, std::size_t epochs) {
  TrainConfig t = rc.train;
  t.epochs = epochs;
  t.warmup_epochs = std::min(t.warmup_epochs, epochs);
  t.base_lr = rc.pretrain_lr;
  t.batch_size = rc.pretrain_batch_size;
  return t;
}

std::string format_gates(const std::vector<double>& gates) {
  std::string out;
  for (double g : gates) out += fmt::format(" {:.3f}", g);
  return out;
}

}  // namespace

int synth_data(const SynthDataOptions& o) {
  auto rc = load_run_config(o.config);
  const auto seed = o.seed.value_or(rc.data_seed);
  const auto data = synthesize_dataset(rc.synthetic, seed);
  write_dataset(data, o.out, o.force);
  fmt::print("wrote {} train, {} val, {} test examples to {}\n", data.train.size(), data.val.size(),
             data.test.size(), o.out);
  return 0;
}

int pretrain(const PretrainOptions& o) {
  auto rc = load_run_config(o.config);
  const std::size_t epochs = o.epochs.value_or(rc.pretrain_epochs);
  if (epochs == 0) throw ConfigError("pretraining needs at least one epoch (pretrain_epochs or --epochs)");
  guard_output(o.out, o.force);
  const auto data = load_or_synthesize(rc);
  auto model = AdaptedModel<float>::build(rc.model, rc.train.seed);
  pretrain_base(model, data, pretrain_config(rc, epochs),
                [&](std::size_t epoch, double loss) { fmt::print("pretrain epoch {}/{} loss {:.4f}\n", epoch, epochs, loss); });
  const fs::path out(o.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_model(model, out, config_path_for(out));
  fmt::print("saved base decoder to {}\n", o.out);
  return 0;
}

int train(const TrainOptions& o) {
  auto rc = load_run_config(o.config);
  if (o.seed) {
    rc.train.seed = *o.seed;
    rc.eval.seed = *o.seed;
  }
  const std::string resume_from = o.checkpoint.empty() ? rc.checkpoint : o.checkpoint;
  fs::path out_dir = o.out_dir.empty() ? fs::path(rc.out_dir) : fs::path(o.out_dir);
  if (out_dir.empty() && !resume_from.empty()) out_dir = fs::path(resume_from).parent_path();
  if (out_dir.empty()) throw ConfigError("no output directory: set out_dir in the config or pass --out-dir");
  if (resume_from.empty()) guard_output(out_dir / "metrics.csv", o.force);

  const auto data = load_or_synthesize(rc);
  auto model = AdaptedModel<float>::build(rc.model, rc.train.seed);
  std::optional<TrainState> state;
  if (!resume_from.empty()) {
    const auto saved = ModelConfig::read(config_path_for(resume_from));
    if (saved.to_text() != rc.model.to_text()) {
      throw ConfigError(fmt::format("checkpoint '{}' was trained with a different model configuration", resume_from));
    }
    load_weights(model, resume_from);
    state = read_train_state(state_path_for(resume_from));
    fmt::print("resuming after epoch {} (step {})\n", state->epoch, state->optimizer.step_count());
  } else if (!rc.base_checkpoint.empty()) {
    load_base_weights(model, rc.base_checkpoint);
  } else if (rc.pretrain_epochs > 0) {
    pretrain_base(model, data, pretrain_config(rc, rc.pretrain_epochs), [&](std::size_t epoch, double loss) {
      if (!o.quiet) fmt::print("pretrain epoch {}/{} loss {:.4f}\n", epoch, rc.pretrain_epochs, loss);
    });
  }

  fs::create_directories(out_dir);
  write_file(out_dir / "run_config.txt", rc.to_text());
  TrainOutputs outputs{out_dir, [&](const EpochRecord& r) {
                         if (o.quiet) return;
                         fmt::print("epoch {}/{} step {} loss {:.4f} val {:.4f} root {:.3f} full {:.3f} beat {:.3f} gates{}\n",
                                    r.epoch, rc.train.epochs, r.step, r.loss, r.val_loss, r.chord_recall_root,
                                    r.chord_recall_full, r.beat_f1, format_gates(r.gates));
                       }};
  const auto result = fine_tune(model, data, rc.train, outputs, state ? &*state : nullptr);
  if (!result.epochs.empty()) {
    fmt::print("best epoch {} (val loss {:.4f}); outputs in {}\n", result.best_epoch, result.best_val_loss,
               out_dir.string());
  }
  return 0;
}

int generate(const GenerateOptions& o) {
  guard_output(o.out, o.force);
  const auto model = load_model(o.checkpoint);
  const auto cond = load_condition(o.chords, o.midi, o.drums);
  if (cond.length() > model.config().base.max_sequence) {
    throw ConfigError(fmt::format("chord file spans {} frames but the model holds at most {}", cond.length(),
                                  model.config().base.max_sequence));
  }
  prompt_word_ids(o.prompt);
  SamplingOptions sampling;
  sampling.temperature = o.temperature;
  sampling.top_k = o.top_k;
  sampling.greedy = o.greedy;
  std::mt19937_64 rng(o.seed);
  const auto tokens = cmad::generate(model, cond, o.prompt, sampling, rng, !o.no_adaptor);
  std::vector<std::vector<int>> lines{tokens};
  if (fs::path(o.out).has_parent_path()) fs::create_directories(fs::path(o.out).parent_path());
  write_token_lines(o.out, lines);
  fmt::print("wrote {} tokens to {}\n", tokens.size(), o.out);
  return 0;
}

int eval(const EvalOptions& o) {
  if (!o.out.empty()) guard_output(o.out, o.force);
  const auto model = load_model(o.checkpoint);
  if (!fs::is_directory(o.dataset)) throw IoError(fmt::format("dataset directory '{}' does not exist", o.dataset));
  const auto data = read_dataset(o.dataset);
  if (data.test.empty()) throw ConfigError(fmt::format("dataset '{}' has no test split", o.dataset));
  const auto groups = parse_groups(o.groups);
  ProtocolOptions opts;
  opts.samples_per_example = o.samples;
  opts.seed = o.seed;
  opts.window = data.spec.chord_period;
  opts.tolerance = o.tolerance;
  opts.sampling.temperature = o.temperature;
  opts.sampling.top_k = o.top_k;
  const auto report = run_protocol(model, data.test, groups, opts);
  fmt::print("{}", report.table());
  if (!o.out.empty()) {
    if (fs::path(o.out).has_parent_path()) fs::create_directories(fs::path(o.out).parent_path());
    report.write_csv(o.out);
  }
  return 0;
}

int count_params(const CountParamsOptions& o) {
  EncoderMode mode;
  if (o.encoder_mode == "shared") mode = EncoderMode::shared;
  else if (o.encoder_mode == "copy") mode = EncoderMode::copy;
  else throw ConfigError(fmt::format("encoder mode must be shared or copy, got '{}'", o.encoder_mode));
  if (o.full_scale && !o.config.empty()) throw ConfigError("--full-scale and --config are mutually exclusive");

  std::vector<std::size_t> layers = o.layers;
  const auto rc = load_run_config(o.config);
  if (layers.empty()) {
    layers = o.full_scale ? std::vector<std::size_t>{12, 24, 36, 48} : std::vector<std::size_t>{rc.model.adapted_layers};
  }
  fmt::print("L,total,trainable,trainable_percent\n");
  for (auto l : layers) {
    ModelConfig c = o.full_scale ? full_scale_config(l) : rc.model;
    c.adapted_layers = l;
    const auto n = count_parameters(c, mode);
    fmt::print("{},{},{},{:.4f}\n", l, n.total, n.trainable, 100.0 * n.fraction());
  }
  return 0;
}

int gates(const GatesOptions& o) {
  if (!o.out.empty()) guard_output(o.out, o.force);
  std::ifstream in(o.metrics_csv);
  if (!in) throw IoError(fmt::format("cannot open metrics file '{}'", o.metrics_csv));
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw ParseError(fmt::format("{}: empty metrics file", o.metrics_csv));
  const auto header = split(line);
  std::vector<std::size_t> columns;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i].rfind("gate_l", 0) == 0) columns.push_back(i);
  }
  if (header.empty() || header[0] != "epoch" || columns.empty()) {
    throw ParseError(fmt::format("{}: header has no epoch or gate_l<i> columns", o.metrics_csv));
  }
  std::string out = "epoch";
  for (auto c : columns) out += "," + header[c];
  out += "\n";
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw ParseError(fmt::format("{}:{}: expected {} columns, got {}", o.metrics_csv, lineno, header.size(),
                                   cells.size()));
    }
    out += cells[0];
    for (auto c : columns) out += "," + cells[c];
    out += "\n";
  }
  if (o.out.empty()) fmt::print("{}", out);
  else write_file(o.out, out);
  return 0;
}

int gradcheck(const GradcheckOptions& o) {
  const ModelConfig config = o.config.empty() ? gradcheck_config() : ModelConfig::read(o.config);
  ModelGradCheckOptions opts;
  opts.seed = o.seed;
  opts.epsilon = o.epsilon;
  opts.frames = std::min<std::size_t>(opts.frames, config.base.max_sequence);
  const auto r = check_model_gradients(config, opts);
  fmt::print("parameter,max_rel_error,max_abs_grad\n");
  for (const auto& [name, err] : r.per_parameter) {
    const auto it = r.max_abs_grad.find(name);
    fmt::print("{},{:.3e},{:.3e}\n", name, err, it == r.max_abs_grad.end() ? 0.0 : it->second);
  }
  const bool ok = r.max_rel_error < o.tolerance;
  fmt::print("checked {} entries; max relative error {:.3e} at {}[{}]; {}\n", r.checked, r.max_rel_error,
             r.worst_parameter, r.worst_index, ok ? "PASS" : "FAIL");
  return ok ? 0 : 1;
}

}  // namespace cmad::cli

// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#include "cmad/config/run_config.hpp"

#include <fmt/format.h>

#include "cmad/config/key_value.hpp"
#include "cmad/errors.hpp"

namespace cmad {

RunConfig::RunConfig() {
  eval.window = synthetic.chord_period;
}

void RunConfig::validate() const {
  model.validate();
  train.validate();
  synthetic.validate();
  if (synthetic.vocab_size != model.base.vocab_size) {
    throw ConfigError(fmt::format("vocab_size {} disagrees between model and synthetic data ({})",
                                  model.base.vocab_size, synthetic.vocab_size));
  }
  if (synthetic.length > model.base.max_sequence) {
    throw ConfigError(fmt::format("length {} exceeds T_max {}", synthetic.length, model.base.max_sequence));
  }
  if (train.segment_frames > model.base.max_sequence) {
    throw ConfigError(fmt::format("segment_frames {} exceeds T_max {}", train.segment_frames, model.base.max_sequence));
  }
  if (model.mask_rate != train.mask_rate) throw ConfigError("model and training mask rates disagree");
  if (eval.samples_per_example == 0) throw ConfigError("samples_per_example must be positive");
  if (eval.window == 0) throw ConfigError("recall window must be positive");
  if (eval.tolerance < 0) throw ConfigError("beat_tolerance must be non-negative");
  if (!(pretrain_lr > 0.0)) throw ConfigError("pretrain_lr must be positive");
  if (pretrain_batch_size == 0) throw ConfigError("pretrain_batch_size must be positive");
}

std::string RunConfig::to_text() const {
  std::string out = model.to_text();
  out += fmt::format(
      "epochs={}\nwarmup_epochs={}\nbase_lr={}\nbatch_size={}\nseed={}\nsegment_frames={}\nmask_granularity={}\n"
      "clip_norm={}\neval_samples={}\npretrain_epochs={}\npretrain_lr={}\npretrain_batch_size={}\n",
      train.epochs, train.warmup_epochs, train.base_lr, train.batch_size, train.seed, train.segment_frames,
      train.granularity == MaskGranularity::frame ? "frame" : "sequence", train.clip_norm, train.eval_samples,
      pretrain_epochs, pretrain_lr, pretrain_batch_size);
  out += fmt::format(
      "chord_period={}\npulse_period={}\nlength={}\ntrain_count={}\nval_count={}\ntest_count={}\nframe_rate={}\n"
      "data_seed={}\n",
      synthetic.chord_period, synthetic.pulse_period, synthetic.length, synthetic.train_count, synthetic.val_count,
      synthetic.test_count, synthetic.frame_rate, data_seed);
  out += fmt::format("samples_per_example={}\ntemperature={}\ntop_k={}\ngreedy={}\nbeat_tolerance={}\n",
                     eval.samples_per_example, eval.sampling.temperature, eval.sampling.top_k,
                     eval.sampling.greedy ? "true" : "false", eval.tolerance);
  out += fmt::format("base_checkpoint={}\nout_dir={}\ncheckpoint={}\ndataset={}\n", base_checkpoint, out_dir,
                     checkpoint, dataset);
  return out;
}

RunConfig RunConfig::from_text(std::string_view text, std::string_view source) {
  RunConfig c;
  auto& b = c.model.base;
  bool period_set = false;
  for (const auto& kv : parse_key_values(text, source)) {
    const auto& k = kv.key;
    try {
      if (k == "n_layers") b.n_layers = parse_size(kv);
      else if (k == "d_model") b.d_model = parse_size(kv);
      else if (k == "n_heads") b.n_heads = parse_size(kv);
      else if (k == "vocab_size") b.vocab_size = c.synthetic.vocab_size = parse_size(kv);
      else if (k == "T_max") b.max_sequence = parse_size(kv);
      else if (k == "ffn_multiplier") b.ffn_multiplier = parse_size(kv);
      else if (k == "use_cross_attention") b.use_cross_attention = parse_bool(kv);
      else if (k == "prompt_vocab") b.prompt_vocab = parse_size(kv);
      else if (k == "L") c.model.adapted_layers = parse_size(kv);
      else if (k == "k1") c.model.k1 = parse_size(kv);
      else if (k == "k2") c.model.k2 = parse_size(kv);
      else if (k == "r") c.model.mask_rate = c.train.mask_rate = parse_real(kv);
      else if (k == "init_std") c.model.init_std = parse_real(kv);
      else if (k == "epochs") c.train.epochs = parse_size(kv);
      else if (k == "warmup_epochs") c.train.warmup_epochs = parse_size(kv);
      else if (k == "base_lr") c.train.base_lr = parse_real(kv);
      else if (k == "batch_size") c.train.batch_size = parse_size(kv);
      else if (k == "seed") c.train.seed = parse_size(kv);
      else if (k == "segment_frames") c.train.segment_frames = parse_size(kv);
      else if (k == "mask_granularity") {
        if (kv.value == "sequence") c.train.granularity = MaskGranularity::sequence;
        else if (kv.value == "frame") c.train.granularity = MaskGranularity::frame;
        else throw ConfigError(fmt::format("line {}: mask_granularity must be sequence or frame", kv.line));
      }
      else if (k == "clip_norm") c.train.clip_norm = parse_real(kv);
      else if (k == "eval_samples") c.train.eval_samples = parse_size(kv);
      else if (k == "pretrain_epochs") c.pretrain_epochs = parse_size(kv);
      else if (k == "pretrain_lr") c.pretrain_lr = parse_real(kv);
      else if (k == "pretrain_batch_size") c.pretrain_batch_size = parse_size(kv);
      else if (k == "chord_period") {
        c.synthetic.chord_period = parse_size(kv);
        period_set = true;
      }
      else if (k == "pulse_period") c.synthetic.pulse_period = parse_size(kv);
      else if (k == "length") c.synthetic.length = parse_size(kv);
      else if (k == "train_count") c.synthetic.train_count = parse_size(kv);
      else if (k == "val_count") c.synthetic.val_count = parse_size(kv);
      else if (k == "test_count") c.synthetic.test_count = parse_size(kv);
      else if (k == "frame_rate") c.synthetic.frame_rate = parse_real(kv);
      else if (k == "data_seed") c.data_seed = parse_size(kv);
      else if (k == "samples_per_example") c.eval.samples_per_example = parse_size(kv);
      else if (k == "temperature") c.eval.sampling.temperature = parse_real(kv);
      else if (k == "top_k") c.eval.sampling.top_k = parse_size(kv);
      else if (k == "greedy") c.eval.sampling.greedy = parse_bool(kv);
      else if (k == "beat_tolerance") c.eval.tolerance = static_cast<int>(parse_size(kv));
      else if (k == "base_checkpoint") c.base_checkpoint = kv.value;
      else if (k == "out_dir") c.out_dir = kv.value;
      else if (k == "checkpoint") c.checkpoint = kv.value;
      else if (k == "dataset") c.dataset = kv.value;
      else throw ConfigError(fmt::format("line {}: unknown key '{}'", kv.line, k));
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      if (msg.rfind(std::string(source), 0) == 0) throw;
      throw ConfigError(fmt::format("{}: {}", source, msg));
    }
  }
  if (period_set) c.eval.window = c.synthetic.chord_period;
  c.eval.seed = c.train.seed;
  c.validate();
  return c;
}

RunConfig RunConfig::read(const std::filesystem::path& path) {
  return from_text(read_text_file(path.string()), path.string());
}

}  // namespace cmad

// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <exception>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cmad/errors.hpp"
#include "commands.hpp"

namespace {

constexpr int kUserError = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chord-conditioned adaptor for a frozen token decoder"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Print help for every command");
  int status = 0;

  cmad::cli::SynthDataOptions synth;
  auto* c_synth = app.add_subcommand("synth-data", "Write a synthetic dataset to a directory");
  c_synth->add_option("--config", synth.config, "Run configuration file (defaults if omitted)")->check(CLI::ExistingFile);
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--seed", synth.seed, "Data seed (overrides data_seed)");
  c_synth->add_flag("--force", synth.force, "Overwrite an existing dataset");
  c_synth->callback([&] { status = cmad::cli::synth_data(synth); });

  cmad::cli::PretrainOptions pre;
  auto* c_pre = app.add_subcommand("pretrain", "Train the base decoder without conditions");
  c_pre->add_option("--config", pre.config, "Run configuration file")->check(CLI::ExistingFile);
  c_pre->add_option("--out", pre.out, "Checkpoint to write")->required();
  c_pre->add_option("--epochs", pre.epochs, "Epochs (overrides pretrain_epochs)");
  c_pre->add_flag("--force", pre.force, "Overwrite an existing checkpoint");
  c_pre->callback([&] { status = cmad::cli::pretrain(pre); });

  cmad::cli::TrainOptions tr;
  auto* c_train = app.add_subcommand("train", "Fine-tune the adaptor on a frozen base");
  c_train->add_option("--config", tr.config, "Run configuration file")->check(CLI::ExistingFile);
  c_train->add_option("--checkpoint", tr.checkpoint, "Resume from this checkpoint (its .state file is required)");
  c_train->add_option("--out-dir", tr.out_dir, "Output directory (overrides out_dir)");
  c_train->add_option("--seed", tr.seed, "Training seed (overrides seed)");
  c_train->add_flag("--force", tr.force, "Overwrite outputs of a previous run");
  c_train->add_flag("--quiet", tr.quiet, "Suppress per-epoch progress");
  c_train->callback([&] { status = cmad::cli::train(tr); });

  cmad::cli::GenerateOptions gen;
  auto* c_gen = app.add_subcommand("generate", "Generate a token sequence for a chord file");
  c_gen->add_option("--checkpoint", gen.checkpoint, "Trained checkpoint")->required();
  c_gen->add_option("--chords", gen.chords, "Chord annotations (.lab)")->required();
  c_gen->add_option("--midi", gen.midi, "Note events (.jsonl); masked when omitted");
  c_gen->add_option("--drums", gen.drums, "Drum tokens (.tok); masked when omitted");
  c_gen->add_option("--prompt", gen.prompt, "Text prompt id")->capture_default_str();
  c_gen->add_option("--out", gen.out, "Token file to write")->required();
  c_gen->add_option("--seed", gen.seed, "Sampling seed")->capture_default_str();
  c_gen->add_option("--temperature", gen.temperature, "Softmax temperature")->capture_default_str();
  c_gen->add_option("--top-k", gen.top_k, "Restrict sampling to the k most likely tokens (0 = all)")
      ->capture_default_str();
  c_gen->add_flag("--greedy", gen.greedy, "Take the most likely token at every step");
  c_gen->add_flag("--no-adaptor", gen.no_adaptor, "Run the frozen base only");
  c_gen->add_flag("--force", gen.force, "Overwrite the output file");
  c_gen->callback([&] { status = cmad::cli::generate(gen); });

  cmad::cli::EvalOptions ev;
  auto* c_eval = app.add_subcommand("eval", "Run the controllability protocol on a dataset's test split");
  c_eval->add_option("--checkpoint", ev.checkpoint, "Trained checkpoint")->required();
  c_eval->add_option("--dataset", ev.dataset, "Dataset directory")->required();
  c_eval->add_option("--groups", ev.groups, "Comma-separated groups or 'all'")->capture_default_str();
  c_eval->add_option("--samples", ev.samples, "Generations per test example")->capture_default_str();
  c_eval->add_option("--seed", ev.seed, "Sampling seed")->capture_default_str();
  c_eval->add_option("--temperature", ev.temperature, "Softmax temperature")->capture_default_str();
  c_eval->add_option("--top-k", ev.top_k, "Top-k sampling (0 = all)")->capture_default_str();
  c_eval->add_option("--tolerance", ev.tolerance, "Beat tolerance in frames")->capture_default_str();
  c_eval->add_option("--out", ev.out, "CSV report to write");
  c_eval->add_flag("--force", ev.force, "Overwrite the report");
  c_eval->callback([&] { status = cmad::cli::eval(ev); });

  cmad::cli::CountParamsOptions cp;
  auto* c_count = app.add_subcommand("count-params", "Tabulate total and trainable parameters over L");
  auto* full = c_count->add_flag("--full-scale", cp.full_scale, "Use the full-scale configuration");
  c_count->add_option("--config", cp.config, "Run configuration file")->check(CLI::ExistingFile)->excludes(full);
  c_count->add_option("--L", cp.layers, "Adapted layer counts (default 12,24,36,48 at full scale)")->delimiter(',');
  c_count->add_option("--encoder", cp.encoder_mode, "Encoder weights: shared or copy")->capture_default_str();
  c_count->callback([&] { status = cmad::cli::count_params(cp); });

  cmad::cli::GatesOptions gt;
  auto* c_gates = app.add_subcommand("gates", "Extract per-layer gate trajectories from metrics.csv");
  c_gates->add_option("--metrics-csv", gt.metrics_csv, "metrics.csv from a training run")->required();
  c_gates->add_option("--out", gt.out, "CSV to write (stdout if omitted)");
  c_gates->add_flag("--force", gt.force, "Overwrite the output file");
  c_gates->callback([&] { status = cmad::cli::gates(gt); });

  cmad::cli::GradcheckOptions gc;
  auto* c_grad = app.add_subcommand("gradcheck", "Compare adaptor gradients with central differences");
  c_grad->add_option("--config", gc.config, "Model configuration (small default if omitted)")
      ->check(CLI::ExistingFile);
  c_grad->add_option("--seed", gc.seed, "Initialization seed")->capture_default_str();
  c_grad->add_option("--epsilon", gc.epsilon, "Finite-difference step")->capture_default_str();
  c_grad->add_option("--tolerance", gc.tolerance, "Maximum relative error")->capture_default_str();
  c_grad->callback([&] { status = cmad::cli::gradcheck(gc); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUserError;
  } catch (const cmad::UserError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kUserError;
  } catch (const std::exception& e) {
    fmt::print(stderr, "internal error: {}\n", e.what());
    return 1;
  }
  return status;
}

// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cmad::cli {

struct SynthDataOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool force = false;
};

struct PretrainOptions {
  std::string config;
  std::string out;
  std::optional<std::size_t> epochs;
  bool force = false;
};

struct TrainOptions {
  std::string config;
  std::string checkpoint;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool force = false;
  bool quiet = false;
};

struct GenerateOptions {
  std::string checkpoint;
  std::string chords;
  std::string midi;
  std::string drums;
  int prompt = 0;
  std::string out;
  std::uint64_t seed = 0;
  double temperature = 1.0;
  std::size_t top_k = 0;
  bool greedy = false;
  bool no_adaptor = false;
  bool force = false;
};

struct EvalOptions {
  std::string checkpoint;
  std::string dataset;
  std::string groups = "all";
  std::size_t samples = 4;
  std::uint64_t seed = 0;
  double temperature = 1.0;
  std::size_t top_k = 0;
  int tolerance = 3;
  std::string out;
  bool force = false;
};

struct CountParamsOptions {
  bool full_scale = false;
  std::string config;
  std::vector<std::size_t> layers;
  std::string encoder_mode = "shared";
};

struct GatesOptions {
  std::string metrics_csv;
  std::string out;
  bool force = false;
};

struct GradcheckOptions {
  std::string config;
  std::uint64_t seed = 0;
  double epsilon = 1e-5;
  double tolerance = 1e-4;
};

int synth_data(const SynthDataOptions& options);
int pretrain(const PretrainOptions& options);
int train(const TrainOptions& options);
int generate(const GenerateOptions& options);
int eval(const EvalOptions& options);
int count_params(const CountParamsOptions& options);
int gates(const GatesOptions& options);
int gradcheck(const GradcheckOptions& options);

}  // namespace cmad::cli

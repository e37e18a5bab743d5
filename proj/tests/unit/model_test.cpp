// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include <unistd.h>

#include <gtest/gtest.h>

#include "cmad/errors.hpp"
#include "cmad/evaluation/synthetic.hpp"
#include "cmad/model/adapted_model.hpp"
#include "cmad/model/generation.hpp"
#include "cmad/model/param_count.hpp"
#include "cmad/numerics/checksum.hpp"
#include "cmad/numerics/ops.hpp"
#include "cmad/numerics/optimizer.hpp"
#include "oracles.hpp"

namespace cmad {
namespace {

namespace fs = std::filesystem;

ModelConfig tiny_config(std::size_t layers = 3, std::size_t adapted = 2, bool cross = true) {
  ModelConfig c;
  c.base.n_layers = layers;
  c.base.d_model = 8;
  c.base.n_heads = 2;
  c.base.vocab_size = 64;
  c.base.max_sequence = 8;
  c.base.ffn_multiplier = 2;
  c.base.use_cross_attention = cross;
  c.adapted_layers = adapted;
  c.init_std = 0.3;
  return c;
}

ConditionSequence random_condition(std::size_t frames, std::size_t vocab, std::mt19937_64& rng) {
  std::vector<ChordSymbol> chords(frames);
  std::vector<PianoRollFrame> roll(frames);
  std::vector<int> acoustic(frames);
  const auto& q = chord_qualities();
  for (std::size_t i = 0; i < frames; ++i) {
    const int root = static_cast<int>(rng() % 12);
    chords[i] = ChordSymbol::make(root, root, q[rng() % q.size()].bitmap);
    roll[i].set(48 + rng() % 48);
    acoustic[i] = static_cast<int>(rng() % vocab);
  }
  return ConditionSequence::make(chords, roll, acoustic);
}

std::vector<int> random_tokens(std::size_t n, std::size_t vocab, std::mt19937_64& rng) {
  std::vector<int> t(n);
  for (auto& v : t) v = static_cast<int>(rng() % vocab);
  return t;
}

template <typename T>
void set_gates(AdaptedModel<T>& m, T value) {
  for (std::size_t s = 0; s < m.adapted_count(); ++s) m.gate(s).value[0] = value;
}

TEST(Build, DeterministicAndFrozen) {
  auto a = AdaptedModel<float>::build(tiny_config(), 5);
  auto b = AdaptedModel<float>::build(tiny_config(), 5);
  auto c = AdaptedModel<float>::build(tiny_config(), 6);
  ASSERT_EQ(a.parameters().size(), b.parameters().size());
  bool any_diff = false;
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    const auto& p = a.parameters()[i];
    EXPECT_EQ(p.value, b.parameters()[i].value) << p.name;
    any_diff |= !(p.value == c.parameters()[i].value);
    EXPECT_EQ(p.trainable, !AdaptedModel<float>::is_base_parameter(p.name)) << p.name;
  }
  EXPECT_TRUE(any_diff);
  for (std::size_t s = 0; s < a.adapted_count(); ++s) EXPECT_EQ(a.gate(s).value[0], 0.0f);
}

TEST(Build, AdaptedLayersAreTheTopL) {
  ModelConfig c;
  EXPECT_EQ(c.adapted_layer_indices(), (std::vector<std::size_t>{2, 3}));
  auto m = AdaptedModel<float>::build(tiny_config(4, 2), 1);
  EXPECT_NE(m.parameters().find("adaptor.gate.layer2"), nullptr);
  EXPECT_NE(m.parameters().find("adaptor.gate.layer3"), nullptr);
  EXPECT_EQ(m.parameters().find("adaptor.gate.layer1"), nullptr);
  EXPECT_NE(m.parameters().find("cond.W_e.layer3.head1"), nullptr);
}

TEST(Build, MoreAdaptedLayersThanDecoderLayersIsConfigError) {
  EXPECT_THROW(AdaptedModel<float>::build(tiny_config(2, 4), 1), ConfigError);
}

TEST(Encoder, ZeroInputsGiveZeroOutputs) {
  auto m = AdaptedModel<double>::build(tiny_config(), 2);
  m.encoder_input().value.fill(0.0);
  for (std::size_t s = 0; s < m.adapted_count(); ++s)
    for (std::size_t h = 0; h < 2; ++h) m.condition().fusion(s, h).value.fill(0.0);
  std::mt19937_64 rng(3);
  auto cond = random_condition(5, 64, rng);
  Tape<double> tape;
  for (const auto& e : m.encoder_forward(tape, cond)) {
    for (const auto* v : {&e.q, &e.k, &e.v})
      for (double x : v->value().storage()) EXPECT_EQ(x, 0.0);
  }
}

TEST(Encoder, LastFrameReachesFirstFrame) {
  auto m = AdaptedModel<double>::build(tiny_config(), 4);
  std::mt19937_64 rng(5);
  auto cond = random_condition(5, 64, rng);
  auto other = cond;
  other.chords[4] = parse_chord_label("F#:dim");
  other.acoustic[4] = (other.acoustic[4] + 7) % 64;
  Tape<double> t1, t2;
  const auto a = m.encoder_forward(t1, cond).back().q.value();
  const auto b = m.encoder_forward(t2, other).back().q.value();
  double diff = 0.0;
  for (std::size_t j = 0; j < 8; ++j) diff = std::max(diff, std::fabs(a(0, j) - b(0, j)));
  EXPECT_GT(diff, 1e-6);
}

// Hand-rolled two-frame, two-slot encoder with d_head = 2 (no tape).
TEST(Encoder, MatchesHandRolledTwoFrameCase) {
  auto cfg = tiny_config(2, 2);
  cfg.base.d_model = 4;
  auto m = AdaptedModel<double>::build(cfg, 7);
  std::mt19937_64 rng(8);
  auto cond = random_condition(2, 64, rng);
  const auto& table = m.token_embedding().value;

  auto layer_norm = [](oracle::Matrix x) {
    for (auto& row : x) {
      double mean = 0, var = 0;
      for (double v : row) mean += v;
      mean /= row.size();
      for (double v : row) var += (v - mean) * (v - mean);
      var /= row.size();
      for (auto& v : row) v = (v - mean) / std::sqrt(var + 1e-5);
    }
    return x;
  };
  oracle::Matrix x(2, std::vector<double>(4));
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t j = 0; j < 4; ++j) x[t][j] = m.encoder_input().value(t, j);
  Tape<double> tape;
  const auto enc = m.encoder_forward(tape, cond);
  for (std::size_t slot = 0; slot < 2; ++slot) {
    const auto& blk = m.blocks()[slot];
    auto u = layer_norm(x);
    for (std::size_t h = 0; h < 2; ++h) {
      const auto z = fuse(cond, m.condition(), table, slot, h);
      for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t j = 0; j < 2; ++j) u[t][h * 2 + j] += z(t, j);
    }
    const auto q = oracle::multiply(u, oracle::to_matrix(blk.wq->value));
    const auto k = oracle::multiply(u, oracle::to_matrix(blk.wk->value));
    const auto v = oracle::multiply(u, oracle::to_matrix(blk.wv->value));
    for (std::size_t t = 0; t < 2; ++t) {
      for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_NEAR(enc[slot].q.value()(t, j), q[t][j], 1e-12);
        EXPECT_NEAR(enc[slot].k.value()(t, j), k[t][j], 1e-12);
        EXPECT_NEAR(enc[slot].v.value()(t, j), v[t][j], 1e-12);
      }
    }
    oracle::Matrix heads(2, std::vector<double>(4));
    for (std::size_t h = 0; h < 2; ++h) {
      const auto a = oracle::attention(oracle::columns(q, 2 * h, 2 * h + 2), oracle::columns(k, 2 * h, 2 * h + 2),
                                       oracle::columns(v, 2 * h, 2 * h + 2), false);
      for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t j = 0; j < 2; ++j) heads[t][2 * h + j] = a[t][j];
    }
    const auto o = oracle::multiply(heads, oracle::to_matrix(blk.wo->value));
    for (std::size_t t = 0; t < 2; ++t)
      for (std::size_t j = 0; j < 4; ++j) x[t][j] += o[t][j];
  }
}

TEST(AdaptedAttention, ZeroGateIsBitwiseIdentity) {
  std::mt19937_64 rng(9);
  Tape<double> tape;
  auto base = tape.constant(oracle::random_tensor({3, 4}, rng));
  EncoderLayerOutput<double> enc{tape.constant(oracle::random_tensor({3, 4}, rng)),
                                 tape.constant(oracle::random_tensor({3, 4}, rng)),
                                 tape.constant(oracle::random_tensor({3, 4}, rng))};
  auto out = adapted_attention(base, tape.constant(oracle::random_tensor({3, 4}, rng)), enc,
                               tape.constant(oracle::random_tensor({4, 4}, rng)),
                               tape.constant(Tensor<double>::scalar(0.0)), 2);
  EXPECT_EQ(out.value(), base.value());
}

TEST(AdaptedAttention, UnitGateOnZeroBaseIsConditionAttention) {
  std::mt19937_64 rng(10);
  Tape<double> tape;
  auto dq = tape.constant(oracle::random_tensor({3, 4}, rng));
  EncoderLayerOutput<double> enc{tape.constant(oracle::random_tensor({3, 4}, rng)),
                                 tape.constant(oracle::random_tensor({3, 4}, rng)),
                                 tape.constant(oracle::random_tensor({3, 4}, rng))};
  auto wo = tape.constant(oracle::random_tensor({4, 4}, rng));
  auto out = adapted_attention(tape.constant(Tensor<double>({3, 4})), dq, enc, wo,
                               tape.constant(Tensor<double>::scalar(1.0)), 2);
  EXPECT_LT(max_abs_diff(out.value(), condition_attention(dq, enc, wo, 2).value()), 1e-15);
}

TEST(AdaptedAttention, LengthMismatchIsAlignmentError) {
  Tape<double> tape;
  EncoderLayerOutput<double> enc{tape.constant(Tensor<double>({2, 4})), tape.constant(Tensor<double>({2, 4})),
                                 tape.constant(Tensor<double>({2, 4}))};
  EXPECT_THROW(adapted_attention(tape.constant(Tensor<double>({3, 4})), tape.constant(Tensor<double>({3, 4})), enc,
                                 tape.constant(Tensor<double>({4, 4})), tape.constant(Tensor<double>::scalar(1.0)),
                                 2),
               AlignmentError);
}

TEST(AdaptedAttention, MatchesBruteForceOnHundredSeeds) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed + 100);
    const std::size_t t = 1 + rng() % 4, dh = 1 + rng() % 4, heads = 1 + rng() % 2, d = dh * heads;
    const auto base = oracle::random_tensor({t, d}, rng);
    const auto dq = oracle::random_tensor({t, d}, rng);
    const auto eq = oracle::random_tensor({t, d}, rng);
    const auto ek = oracle::random_tensor({t, d}, rng);
    const auto ev = oracle::random_tensor({t, d}, rng);
    const auto wo = oracle::random_tensor({d, d}, rng);
    const double g = std::normal_distribution<double>()(rng);

    Tape<double> tape;
    EncoderLayerOutput<double> enc{tape.constant(eq), tape.constant(ek), tape.constant(ev)};
    const auto out = adapted_attention(tape.constant(base), tape.constant(dq), enc, tape.constant(wo),
                                       tape.constant(Tensor<double>::scalar(g)), heads)
                         .value();

    // Brute force: S = softmax((Q' + Q) Kᵀ / √d_head) per head, O'' = (S V) W_o, O''' = O' + g O''.
    oracle::Matrix cat(t, std::vector<double>(d));
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < t; ++i) {
        std::vector<double> scores(t);
        for (std::size_t j = 0; j < t; ++j) {
          double s = 0;
          for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) s += (dq(i, c) + eq(i, c)) * ek(j, c);
          scores[j] = s / std::sqrt(static_cast<double>(dh));
        }
        const auto p = oracle::softmax(scores);
        for (std::size_t c = h * dh; c < (h + 1) * dh; ++c)
          for (std::size_t j = 0; j < t; ++j) cat[i][c] += p[j] * ev(j, c);
      }
    }
    const auto o2 = oracle::multiply(cat, oracle::to_matrix(wo));
    double worst = 0;
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t c = 0; c < d; ++c) worst = std::max(worst, std::fabs(out(i, c) - (base(i, c) + g * o2[i][c])));
    EXPECT_LT(worst, 1e-6) << "seed " << seed;
  }
}

TEST(Forward, ZeroGatesEqualFrozenBase) {
  for (bool cross : {true, false}) {
    auto m = AdaptedModel<float>::build(tiny_config(3, 2, cross), 11);
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 5; ++trial) {
      auto cond = random_condition(6, 64, rng);
      if (trial % 2) cond = with_channel_masks(cond, true, false);
      auto tokens = random_tokens(6, 64, rng);
      Tape<float> tape;
      const auto base = m.base_forward(tape, tokens, trial % 4).value();
      EXPECT_LE(max_abs_diff(m.logits(tokens, cond, trial % 4), base), 1e-6f);
    }
  }
}

TEST(Forward, TokenStreamIsCausal) {
  auto m = AdaptedModel<double>::build(tiny_config(), 13);
  set_gates(m, 0.7);
  std::mt19937_64 rng(14);
  auto cond = random_condition(7, 64, rng);
  auto tokens = random_tokens(7, 64, rng);
  const auto ref = m.logits(tokens, cond, 1);
  for (std::size_t t = 0; t < 7; ++t) {
    auto changed = tokens;
    changed[t] = (changed[t] + 13) % 64;
    const auto out = m.logits(changed, cond, 1);
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t v = 0; v < 64; ++v) EXPECT_LE(std::fabs(out(i, v) - ref(i, v)), 1e-6);
    double diff_at_t = 0;
    for (std::size_t v = 0; v < 64; ++v) diff_at_t = std::max(diff_at_t, std::fabs(out(t, v) - ref(t, v)));
    EXPECT_GT(diff_at_t, 0.0);
  }
}

// The encoder is unmasked, so a late condition frame may move early logits once gates open.
TEST(Forward, ConditionMayInfluenceEarlierPositions) {
  auto m = AdaptedModel<double>::build(tiny_config(), 15);
  set_gates(m, 0.7);
  std::mt19937_64 rng(16);
  auto cond = random_condition(6, 64, rng);
  auto tokens = random_tokens(6, 64, rng);
  auto other = cond;
  other.chords[5] = ChordSymbol::none();
  const auto a = m.logits(tokens, cond, 0), b = m.logits(tokens, other, 0);
  double diff = 0;
  for (std::size_t v = 0; v < 64; ++v) diff = std::max(diff, std::fabs(a(0, v) - b(0, v)));
  EXPECT_GT(diff, 0.0);
}

TEST(Forward, LengthMismatchIsAlignmentError) {
  auto m = AdaptedModel<float>::build(tiny_config(), 17);
  std::mt19937_64 rng(18);
  auto cond = random_condition(5, 64, rng);
  auto tokens = random_tokens(4, 64, rng);
  Tape<float> tape;
  EXPECT_THROW(m.forward(tape, tokens, cond, 0), AlignmentError);
}

TEST(Gradients, EveryTrainableParameterIsReached) {
  auto m = AdaptedModel<double>::build(tiny_config(), 19);
  set_gates(m, 0.5);
  std::mt19937_64 rng(20);
  Tape<double> tape;
  std::vector<Var<double>> losses;
  // One example with both channels present, one with both masked.
  for (bool masked : {false, true}) {
    auto cond = with_channel_masks(random_condition(6, 64, rng), masked, masked);
    auto tokens = random_tokens(6, 64, rng);
    auto targets = random_tokens(6, 64, rng);
    losses.push_back(ops::cross_entropy(m.forward(tape, tokens, cond, 2), targets));
  }
  tape.backward(ops::add(losses[0], losses[1]));
  m.parameters().for_each([](const Parameter<double>& p) {
    double mx = 0;
    for (double g : p.grad.storage()) mx = std::max(mx, std::fabs(g));
    if (p.trainable) EXPECT_GT(mx, 0.0) << p.name;
    else EXPECT_FALSE(p.grad_populated) << p.name;
  });
}

TEST(Gradients, FrozenParametersSurviveOptimizerSteps) {
  auto m = AdaptedModel<float>::build(tiny_config(), 21);
  const auto before = frozen_checksums(m.parameters());
  ASSERT_FALSE(before.empty());
  Adam<float> adam;
  std::mt19937_64 rng(22);
  for (int step = 0; step < 5; ++step) {
    Tape<float> tape;
    auto cond = random_condition(6, 64, rng);
    auto tokens = random_tokens(6, 64, rng);
    auto targets = random_tokens(6, 64, rng);
    tape.backward(ops::cross_entropy(m.forward(tape, tokens, cond, 0), targets));
    adam.step(m.parameters(), 1e-2);
  }
  EXPECT_EQ(frozen_checksums(m.parameters()), before);
  EXPECT_NE(m.gate(0).value[0], 0.0f);
}

TEST(IncrementalDecoder, MatchesFullForward) {
  auto m = AdaptedModel<double>::build(tiny_config(), 23);
  set_gates(m, -0.4);
  std::mt19937_64 rng(24);
  auto cond = random_condition(8, 64, rng);
  auto tokens = random_tokens(8, 64, rng);
  for (bool adapt : {true, false}) {
    const auto full = m.logits(tokens, cond, 3, adapt);
    IncrementalDecoder<double> dec(m, cond, 3, adapt);
    for (std::size_t t = 0; t < 8; ++t) {
      const auto row = dec.step(tokens[t]);
      for (std::size_t v = 0; v < 64; ++v) EXPECT_NEAR(row[v], full(t, v), 1e-10);
    }
    EXPECT_THROW(dec.step(0), CapacityError);
  }
}

TEST(Generate, GreedyIsDeterministicAndTemperatureLimitMatches) {
  auto m = AdaptedModel<float>::build(tiny_config(), 25);
  set_gates(m, 0.3f);
  std::mt19937_64 crng(26);
  auto cond = random_condition(8, 64, crng);
  SamplingOptions greedy;
  greedy.greedy = true;
  std::mt19937_64 r1(1), r2(2);
  const auto a = generate(m, cond, 0, greedy, r1);
  EXPECT_EQ(a, generate(m, cond, 0, greedy, r2));
  EXPECT_EQ(a.size(), 8u);
  SamplingOptions cold;
  cold.temperature = 1e-6;
  std::mt19937_64 r3(3);
  EXPECT_EQ(generate(m, cond, 0, cold, r3), a);
}

TEST(SampleToken, TopKAndFrequencies) {
  std::vector<float> logits{0.0f, std::log(3.0f), -50.0f, 0.0f};
  std::mt19937_64 rng(27);
  SamplingOptions top1;
  top1.top_k = 1;
  EXPECT_EQ(sample_token(logits, top1, rng), 1);
  SamplingOptions plain;
  std::vector<int> counts(4);
  const int n = 20000;
  for (int i = 0; i < n; ++i) ++counts[sample_token(logits, plain, rng)];
  EXPECT_NEAR(counts[1] / double(n), 0.6, 0.015);
  EXPECT_NEAR(counts[0] / double(n), 0.2, 0.015);
  EXPECT_EQ(counts[2], 0);
}

TEST(CountParameters, WithoutAdaptedLayersOnlyConditionProjections) {
  auto c = tiny_config(3, 0);
  const auto n = count_parameters(c);
  EXPECT_EQ(n.trainable, 128u * 12 + 8u * 12 + 12 + 12 + 8u * 61);
}

TEST(CountParameters, MatchesBuiltModel) {
  for (std::size_t adapted : {0u, 1u, 3u}) {
    for (bool cross : {true, false}) {
      auto c = tiny_config(3, adapted, cross);
      auto m = AdaptedModel<float>::build(c, 28);
      const auto n = count_parameters(c);
      EXPECT_EQ(n.total, m.parameters().count_values(false)) << adapted << cross;
      EXPECT_EQ(n.trainable, m.parameters().count_values(true)) << adapted << cross;
      EXPECT_GE(count_parameters(c, EncoderMode::copy).total, n.total);
    }
  }
}

TEST(CountParameters, FullScaleTrendAndBound) {
  double prev = 0;
  for (std::size_t layers : {12u, 24u, 36u, 48u}) {
    const auto n = count_parameters(full_scale_config(layers));
    EXPECT_GT(n.fraction(), prev) << layers;
    prev = n.fraction();
  }
  EXPECT_LT(prev, 0.04);
  EXPECT_LT(count_parameters(full_scale_config(0)).fraction(), 0.001);
}

class ModelIoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("cmad_model_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(ModelIoTest, SaveLoadReproducesLogits) {
  auto m = AdaptedModel<float>::build(tiny_config(), 29);
  set_gates(m, 0.2f);
  save_model(m, dir_ / "m.ckpt", config_path_for(dir_ / "m.ckpt"));
  EXPECT_TRUE(fs::exists(dir_ / "m.cfg"));
  auto cfg = ModelConfig::read(dir_ / "m.cfg");
  auto back = AdaptedModel<float>::build(cfg, 99);
  load_weights(back, dir_ / "m.ckpt");
  std::mt19937_64 rng(30);
  auto cond = random_condition(6, 64, rng);
  auto tokens = random_tokens(6, 64, rng);
  EXPECT_EQ(back.logits(tokens, cond, 1), m.logits(tokens, cond, 1));
}

TEST_F(ModelIoTest, BaseWeightsOnlyAndMismatch) {
  auto src = AdaptedModel<float>::build(tiny_config(), 31);
  save_model(src, dir_ / "m.ckpt", dir_ / "m.cfg");
  auto dst = AdaptedModel<float>::build(tiny_config(), 32);
  const auto gate_before = dst.condition().piano_projection().value;
  load_base_weights(dst, dir_ / "m.ckpt");
  EXPECT_EQ(dst.token_embedding().value, src.token_embedding().value);
  EXPECT_EQ(dst.condition().piano_projection().value, gate_before);
  auto wider = tiny_config();
  wider.base.d_model = 12;
  auto other = AdaptedModel<float>::build(wider, 33);
  EXPECT_THROW(load_weights(other, dir_ / "m.ckpt"), LoadError);
  EXPECT_THROW(load_base_weights(other, dir_ / "m.ckpt"), LoadError);
}

}  // namespace
}  // namespace cmad

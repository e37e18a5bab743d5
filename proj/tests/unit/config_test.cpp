// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#include <string>

#include <gtest/gtest.h>

#include "cmad/config/key_value.hpp"
#include "cmad/config/run_config.hpp"
#include "cmad/errors.hpp"
#include "cmad/model/config.hpp"

namespace cmad {
namespace {

TEST(KeyValue, SkipsCommentsAndRejectsDuplicates) {
  auto kv = parse_key_values("# comment\n\n a = 1 \nb=two\n", "x.txt");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0].key, "a");
  EXPECT_EQ(kv[0].value, "1");
  EXPECT_EQ(kv[1].line, 4u);
  EXPECT_THROW(parse_key_values("a=1\na=2\n", "x.txt"), ConfigError);
  EXPECT_THROW(parse_key_values("novalue\n", "x.txt"), ConfigError);
}

TEST(ModelConfig, ReferenceDefaults) {
  ModelConfig c;
  EXPECT_EQ(c.base.n_layers, 4u);
  EXPECT_EQ(c.base.d_model, 64u);
  EXPECT_EQ(c.base.n_heads, 4u);
  EXPECT_EQ(c.adapted_layers, 2u);
  EXPECT_EQ(c.k1, 12u);
  EXPECT_EQ(c.k2, 12u);
  EXPECT_DOUBLE_EQ(c.mask_rate, 0.4);
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.adapted_layer_indices(), (std::vector<std::size_t>{2, 3}));
}

TEST(ModelConfig, TextRoundTrip) {
  ModelConfig c;
  c.base.n_layers = 6;
  c.adapted_layers = 3;
  c.mask_rate = 0.25;
  c.base.use_cross_attention = false;
  auto back = ModelConfig::from_text(c.to_text());
  EXPECT_EQ(back.to_text(), c.to_text());
  EXPECT_EQ(back.adapted_layer_indices(), (std::vector<std::size_t>{3, 4, 5}));
}

TEST(ModelConfig, Validation) {
  ModelConfig c;
  c.adapted_layers = 5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig{};
  c.base.n_heads = 5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig{};
  c.mask_rate = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(ModelConfig::from_text("n_layers=4\nwidth=3\n"), ConfigError);
}

TEST(PromptWords, FixedTable) {
  EXPECT_EQ(prompt_word_ids(0), (std::vector<int>{0, 1}));
  EXPECT_EQ(prompt_word_ids(2), (std::vector<int>{4, 3}));
  EXPECT_THROW(prompt_word_ids(4), IndexError);
}

TEST(RunConfig, OverridesAndUnknownKeys) {
  auto rc = RunConfig::from_text("epochs=3\nL=1\nr=0.5\nvocab_size=60\nchord_period=8\nout_dir=/tmp/x\n");
  EXPECT_EQ(rc.train.epochs, 3u);
  EXPECT_EQ(rc.model.adapted_layers, 1u);
  EXPECT_DOUBLE_EQ(rc.model.mask_rate, 0.5);
  EXPECT_DOUBLE_EQ(rc.train.mask_rate, 0.5);
  EXPECT_EQ(rc.model.base.vocab_size, 60u);
  EXPECT_EQ(rc.synthetic.vocab_size, 60u);
  EXPECT_EQ(rc.eval.window, 8u);
  EXPECT_EQ(rc.out_dir, "/tmp/x");
  EXPECT_THROW(RunConfig::from_text("epochz=3\n"), ConfigError);
  EXPECT_THROW(RunConfig::from_text("epochs=three\n"), ConfigError);
  EXPECT_THROW(RunConfig::from_text("length=400\n"), ConfigError);
}

TEST(RunConfig, TextRoundTrip) {
  auto rc = RunConfig::from_text("epochs=7\nseed=42\ngreedy=true\nmask_granularity=frame\n");
  auto back = RunConfig::from_text(rc.to_text());
  EXPECT_EQ(back.to_text(), rc.to_text());
  EXPECT_EQ(back.train.seed, 42u);
  EXPECT_TRUE(back.eval.sampling.greedy);
}

}  // namespace
}  // namespace cmad

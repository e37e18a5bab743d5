// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#include "cmad/model/adapted_model.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "cmad/errors.hpp"
#include "cmad/numerics/checkpoint.hpp"

namespace cmad {
namespace {

template <typename T>
Tensor<T> normal_tensor(Shape shape, std::mt19937_64& rng, double stddev) {
  Tensor<T> t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(dist(rng));
  return t;
}

template <typename T>
double row_rms(const Tensor<T>& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += static_cast<double>(x[i]) * static_cast<double>(x[i]);
  return std::sqrt(s / static_cast<double>(x.size()));
}

}  // namespace

template <typename T>
Var<T> multi_head_attention(const Var<T>& q, const Var<T>& k, const Var<T>& v, std::size_t n_heads, bool causal) {
  const std::size_t d = q.shape()[1];
  if (n_heads == 0 || d % n_heads != 0) {
    throw DimensionError(fmt::format("attention width {} not divisible by {} heads", d, n_heads));
  }
  const std::size_t dh = d / n_heads;
  const T inv = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  std::vector<Var<T>> heads;
  heads.reserve(n_heads);
  for (std::size_t h = 0; h < n_heads; ++h) {
    auto qh = n_heads == 1 ? q : ops::slice_cols(q, h * dh, (h + 1) * dh);
    auto kh = n_heads == 1 ? k : ops::slice_cols(k, h * dh, (h + 1) * dh);
    auto vh = n_heads == 1 ? v : ops::slice_cols(v, h * dh, (h + 1) * dh);
    auto p = ops::softmax_rows(ops::scale(ops::matmul_nt(qh, kh), inv), causal);
    heads.push_back(ops::matmul(p, vh));
  }
  return n_heads == 1 ? heads.front() : ops::concat_cols(heads);
}

template <typename T>
Var<T> condition_attention(const Var<T>& decoder_q, const EncoderLayerOutput<T>& enc, const Var<T>& w_o,
                           std::size_t n_heads) {
  if (decoder_q.shape()[0] != enc.q.shape()[0]) {
    throw AlignmentError(fmt::format("decoder has {} positions but the condition has {} frames",
                                     decoder_q.shape()[0], enc.q.shape()[0]));
  }
  auto q = ops::add(decoder_q, enc.q);
  return ops::matmul(multi_head_attention(q, enc.k, enc.v, n_heads, false), w_o);
}

template <typename T>
Var<T> adapted_attention(const Var<T>& base_output, const Var<T>& decoder_q, const EncoderLayerOutput<T>& enc,
                         const Var<T>& w_o, const Var<T>& gate, std::size_t n_heads) {
  return ops::add(base_output, ops::scale_by(condition_attention(decoder_q, enc, w_o, n_heads), gate));
}

template <typename T>
Tensor<T> sinusoidal_positions(std::size_t rows, std::size_t width) {
  Tensor<T> out({rows, width});
  for (std::size_t pos = 0; pos < rows; ++pos) {
    for (std::size_t i = 0; i < width; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(width));
      const double a = static_cast<double>(pos) * freq;
      out(pos, i) = static_cast<T>(i % 2 == 0 ? std::sin(a) : std::cos(a));
    }
  }
  return out;
}

template <typename T>
AdaptedModel<T> AdaptedModel<T>::build(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  AdaptedModel m;
  m.config_ = config;
  const auto& b = config.base;
  const std::size_t d = b.d_model;
  const double sd = config.init_std;
  std::mt19937_64 rng(seed);
  auto& store = m.store_;
  auto ones = [&](std::size_t n) { return Tensor<T>::filled({n}, T{1}); };
  auto zeros = [&](std::size_t n) { return Tensor<T>::zeros({n}); };

  m.tok_emb_ = &store.add("base.tok_emb", normal_tensor<T>({b.vocab_size, d}, rng, sd), false);
  if (b.use_cross_attention) {
    m.prompt_emb_ = &store.add("base.prompt_emb", normal_tensor<T>({b.prompt_vocab, d}, rng, sd), false);
  }
  for (std::size_t i = 0; i < b.n_layers; ++i) {
    const std::string p = fmt::format("base.layer{}.", i);
    DecoderBlock<T> blk;
    blk.ln1_gain = &store.add(p + "ln1.gain", ones(d), false);
    blk.ln1_bias = &store.add(p + "ln1.bias", zeros(d), false);
    blk.wq = &store.add(p + "attn.wq", normal_tensor<T>({d, d}, rng, sd), false);
    blk.wk = &store.add(p + "attn.wk", normal_tensor<T>({d, d}, rng, sd), false);
    blk.wv = &store.add(p + "attn.wv", normal_tensor<T>({d, d}, rng, sd), false);
    blk.wo = &store.add(p + "attn.wo", normal_tensor<T>({d, d}, rng, sd), false);
    if (b.use_cross_attention) {
      blk.lnx_gain = &store.add(p + "lnx.gain", ones(d), false);
      blk.lnx_bias = &store.add(p + "lnx.bias", zeros(d), false);
      blk.xq = &store.add(p + "xattn.wq", normal_tensor<T>({d, d}, rng, sd), false);
      blk.xk = &store.add(p + "xattn.wk", normal_tensor<T>({d, d}, rng, sd), false);
      blk.xv = &store.add(p + "xattn.wv", normal_tensor<T>({d, d}, rng, sd), false);
      blk.xo = &store.add(p + "xattn.wo", normal_tensor<T>({d, d}, rng, sd), false);
    }
    blk.ln2_gain = &store.add(p + "ln2.gain", ones(d), false);
    blk.ln2_bias = &store.add(p + "ln2.bias", zeros(d), false);
    const std::size_t f = d * b.ffn_multiplier;
    blk.w1 = &store.add(p + "ffn.w1", normal_tensor<T>({d, f}, rng, sd), false);
    blk.w2 = &store.add(p + "ffn.w2", normal_tensor<T>({f, d}, rng, sd), false);
    m.blocks_.push_back(blk);
  }
  m.lnf_gain_ = &store.add("base.ln_f.gain", ones(d), false);
  m.lnf_bias_ = &store.add("base.ln_f.bias", zeros(d), false);
  m.head_ = &store.add("base.head", normal_tensor<T>({d, b.vocab_size}, rng, sd), false);

  if (config.adapted_layers > 0) {
    m.enc_input_ = &store.add("enc.input", normal_tensor<T>({b.max_sequence, d}, rng, sd), true);
  }
  const auto layers = config.adapted_layer_indices();
  for (auto i : layers) {
    m.gates_.push_back(&store.add(fmt::format("adaptor.gate.layer{}", i), Tensor<T>::zeros({1}), true));
  }
  ConditionDims dims;
  dims.k1 = config.k1;
  dims.k2 = config.k2;
  dims.acoustic_dim = d;
  dims.head_dim = b.d_head();
  dims.heads = b.n_heads;
  dims.max_frames = b.max_sequence;
  m.cond_ = ConditionParams<T>(store, dims, layers, rng, sd);
  m.positions_ = sinusoidal_positions<T>(b.max_sequence, d);
  return m;
}

template <typename T>
void AdaptedModel<T>::set_trainable(bool base, bool adaptor) {
  store_.for_each([&](Parameter<T>& p) { p.trainable = is_base_parameter(p.name) ? base : adaptor; });
}

template <typename T>
Var<T> AdaptedModel<T>::prompt_states(Tape<T>& tape, int prompt_id) const {
  if (!prompt_emb_) throw StateError("model was built without cross-attention");
  const auto ids = prompt_word_ids(prompt_id);
  return ops::embedding_lookup(tape.parameter(*prompt_emb_), std::span<const int>(ids));
}

template <typename T>
std::vector<EncoderLayerOutput<T>> AdaptedModel<T>::encoder_forward(Tape<T>& tape,
                                                                    const ConditionSequence& cond) const {
  const auto& b = config_.base;
  const std::size_t n_frames = cond.length();
  auto joint = joint_input(tape, cond, cond_, tape.parameter(*tok_emb_));
  auto x = ops::slice_rows(tape.parameter(*enc_input_), 0, n_frames);
  std::vector<EncoderLayerOutput<T>> out;
  const std::size_t first = b.n_layers - config_.adapted_layers;
  for (std::size_t slot = 0; slot < config_.adapted_layers; ++slot) {
    const auto& blk = blocks_[first + slot];
    std::vector<Var<T>> parts;
    for (std::size_t h = 0; h < b.n_heads; ++h) parts.push_back(fuse_head(joint, cond_, slot, h));
    auto z = parts.size() == 1 ? parts.front() : ops::concat_cols(parts);
    auto u = ops::add(ops::layer_norm(x, tape.parameter(*blk.ln1_gain), tape.parameter(*blk.ln1_bias)), z);
    EncoderLayerOutput<T> e{ops::matmul(u, tape.parameter(*blk.wq)), ops::matmul(u, tape.parameter(*blk.wk)),
                            ops::matmul(u, tape.parameter(*blk.wv))};
    if (slot + 1 < config_.adapted_layers) {
      x = ops::add(x, ops::matmul(multi_head_attention(e.q, e.k, e.v, b.n_heads, false), tape.parameter(*blk.wo)));
    }
    out.push_back(std::move(e));
  }
  return out;
}

template <typename T>
Var<T> AdaptedModel<T>::decode(Tape<T>& tape, std::span<const int> tokens,
                               const std::vector<EncoderLayerOutput<T>>* enc, int prompt_id,
                               ForwardTrace* trace) const {
  const auto& b = config_.base;
  const std::size_t n = tokens.size();
  if (n == 0) throw DimensionError("empty token sequence");
  if (n > b.max_sequence) {
    throw CapacityError(fmt::format("{} tokens exceed the context of {}", n, b.max_sequence));
  }
  Tensor<T> pos({n, b.d_model});
  std::copy(positions_.data(), positions_.data() + n * b.d_model, pos.data());
  const T emb_scale = static_cast<T>(std::sqrt(static_cast<double>(b.d_model)));
  auto x = ops::add(ops::scale(ops::embedding_lookup(tape.parameter(*tok_emb_), tokens), emb_scale),
                    tape.constant(std::move(pos)));
  Var<T> prompt;
  if (b.use_cross_attention) prompt = prompt_states(tape, prompt_id);
  if (trace) trace->residual_rms.clear();
  const std::size_t first = b.n_layers - config_.adapted_layers;
  for (std::size_t i = 0; i < b.n_layers; ++i) {
    const auto& blk = blocks_[i];
    auto h = ops::layer_norm(x, tape.parameter(*blk.ln1_gain), tape.parameter(*blk.ln1_bias));
    auto q = ops::matmul(h, tape.parameter(*blk.wq));
    auto k = ops::matmul(h, tape.parameter(*blk.wk));
    auto v = ops::matmul(h, tape.parameter(*blk.wv));
    auto wo = tape.parameter(*blk.wo);
    auto attn = ops::matmul(multi_head_attention(q, k, v, b.n_heads, true), wo);
    if (enc && i >= first) {
      const std::size_t slot = i - first;
      attn = adapted_attention(attn, q, (*enc)[slot], wo, tape.parameter(*gates_[slot]), b.n_heads);
    }
    x = ops::add(x, attn);
    if (b.use_cross_attention) {
      auto hx = ops::layer_norm(x, tape.parameter(*blk.lnx_gain), tape.parameter(*blk.lnx_bias));
      auto xq = ops::matmul(hx, tape.parameter(*blk.xq));
      auto xk = ops::matmul(prompt, tape.parameter(*blk.xk));
      auto xv = ops::matmul(prompt, tape.parameter(*blk.xv));
      x = ops::add(x, ops::matmul(multi_head_attention(xq, xk, xv, b.n_heads, false), tape.parameter(*blk.xo)));
    }
    auto h2 = ops::layer_norm(x, tape.parameter(*blk.ln2_gain), tape.parameter(*blk.ln2_bias));
    auto ff = ops::matmul(ops::gelu(ops::matmul(h2, tape.parameter(*blk.w1))), tape.parameter(*blk.w2));
    x = ops::add(x, ff);
    if (trace) trace->residual_rms.push_back(row_rms(x.value()));
  }
  x = ops::layer_norm(x, tape.parameter(*lnf_gain_), tape.parameter(*lnf_bias_));
  return ops::matmul(x, tape.parameter(*head_));
}

template <typename T>
Var<T> AdaptedModel<T>::forward(Tape<T>& tape, std::span<const int> tokens, const ConditionSequence& cond,
                                int prompt_id, const ForwardOptions& options) const {
  if (tokens.size() != cond.length()) {
    throw AlignmentError(
        fmt::format("{} tokens but the condition has {} frames", tokens.size(), cond.length()));
  }
  if (!options.use_adaptor || config_.adapted_layers == 0) {
    return decode(tape, tokens, nullptr, prompt_id, options.trace);
  }
  const auto enc = encoder_forward(tape, cond);
  return decode(tape, tokens, &enc, prompt_id, options.trace);
}

template <typename T>
Var<T> AdaptedModel<T>::base_forward(Tape<T>& tape, std::span<const int> tokens, int prompt_id,
                                     ForwardTrace* trace) const {
  return decode(tape, tokens, nullptr, prompt_id, trace);
}

template <typename T>
Tensor<T> AdaptedModel<T>::logits(std::span<const int> tokens, const ConditionSequence& cond, int prompt_id,
                                  bool use_adaptor) const {
  Tape<T> tape;
  ForwardOptions opts;
  opts.use_adaptor = use_adaptor;
  return forward(tape, tokens, cond, prompt_id, opts).value();
}

std::filesystem::path config_path_for(const std::filesystem::path& checkpoint) {
  auto p = checkpoint;
  p.replace_extension(".cfg");
  return p;
}

template <typename T>
void save_model(const AdaptedModel<T>& model, const std::filesystem::path& checkpoint,
                const std::filesystem::path& config_path) {
  write_checkpoint(checkpoint, snapshot_parameters(model.parameters()));
  model.config().write(config_path);
}

template <typename T>
void load_weights(AdaptedModel<T>& model, const std::filesystem::path& checkpoint) {
  restore_parameters(model.parameters(), read_checkpoint(checkpoint));
}

template <typename T>
void load_base_weights(AdaptedModel<T>& model, const std::filesystem::path& checkpoint) {
  const auto tensors = read_checkpoint(checkpoint);
  std::size_t loaded = 0;
  for (const auto& nt : tensors) {
    if (!AdaptedModel<T>::is_base_parameter(nt.name)) continue;
    auto* p = model.parameters().find(nt.name);
    if (!p) throw LoadError(fmt::format("{}: unexpected tensor '{}'", checkpoint.string(), nt.name));
    if (p->value.shape() != nt.tensor.shape()) {
      throw LoadError(fmt::format("{}: tensor '{}' has shape {} but the model expects {}", checkpoint.string(),
                                  nt.name, shape_string(nt.tensor.shape()), shape_string(p->value.shape())));
    }
    p->value = nt.tensor.template cast<T>();
    ++loaded;
  }
  std::size_t expected = 0;
  model.parameters().for_each([&](const Parameter<T>& p) {
    if (AdaptedModel<T>::is_base_parameter(p.name)) ++expected;
  });
  if (loaded != expected) {
    throw LoadError(fmt::format("{}: found {} of {} base tensors", checkpoint.string(), loaded, expected));
  }
}

#define CMAD_INSTANTIATE_MODEL(T)                                                                              \
  template class AdaptedModel<T>;                                                                              \
  template Var<T> multi_head_attention(const Var<T>&, const Var<T>&, const Var<T>&, std::size_t, bool);        \
  template Var<T> condition_attention(const Var<T>&, const EncoderLayerOutput<T>&, const Var<T>&, std::size_t); \
  template Var<T> adapted_attention(const Var<T>&, const Var<T>&, const EncoderLayerOutput<T>&, const Var<T>&,  \
                                    const Var<T>&, std::size_t);                                               \
  template Tensor<T> sinusoidal_positions<T>(std::size_t, std::size_t);                                        \
  template void save_model(const AdaptedModel<T>&, const std::filesystem::path&, const std::filesystem::path&); \
  template void load_weights(AdaptedModel<T>&, const std::filesystem::path&);                                  \
  template void load_base_weights(AdaptedModel<T>&, const std::filesystem::path&);

CMAD_INSTANTIATE_MODEL(float)
CMAD_INSTANTIATE_MODEL(double)

#undef CMAD_INSTANTIATE_MODEL

}  // namespace cmad

// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#include "cmad/model/generation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "cmad/errors.hpp"
#include "cmad/numerics/kernels.hpp"

namespace cmad {
namespace {

template <typename T>
void norm(const std::vector<T>& x, const Parameter<T>& gain, const Parameter<T>& bias, std::vector<T>& out) {
  kernels::layer_norm_row(x.data(), gain.value.data(), bias.value.data(), out.data(), static_cast<T*>(nullptr),
                          x.size(), T(1e-5), static_cast<T*>(nullptr), static_cast<T*>(nullptr));
}

template <typename T>
void project(const std::vector<T>& x, const Parameter<T>& w, std::vector<T>& out) {
  out.assign(w.value.cols(), T{0});
  kernels::gemm_nn(1, x.size(), out.size(), x.data(), w.value.data(), out.data(), false);
}

}  // namespace

template <typename T>
IncrementalDecoder<T>::IncrementalDecoder(const AdaptedModel<T>& model, const ConditionSequence& cond,
                                          int prompt_id, bool use_adaptor)
    : model_(&model), frames_(cond.length()), adapt_(use_adaptor && model.config().adapted_layers > 0) {
  const auto& b = model.config().base;
  if (frames_ == 0) throw DimensionError("condition sequence is empty");
  if (frames_ > b.max_sequence) {
    throw CapacityError(fmt::format("{} frames exceed the context of {}", frames_, b.max_sequence));
  }
  cache_.resize(b.n_layers);
  Tape<T> tape;
  if (b.use_cross_attention) {
    auto prompt = model.prompt_states(tape, prompt_id);
    prompt_rows_ = prompt.shape()[0];
    for (std::size_t i = 0; i < b.n_layers; ++i) {
      const auto& blk = model.blocks()[i];
      cache_[i].xk = ops::matmul(prompt, tape.parameter(*blk.xk)).value().storage();
      cache_[i].xv = ops::matmul(prompt, tape.parameter(*blk.xv)).value().storage();
    }
  }
  if (adapt_) {
    for (auto& e : model.encoder_forward(tape, cond)) {
      enc_q_.push_back(e.q.value());
      enc_k_.push_back(e.k.value());
      enc_v_.push_back(e.v.value());
    }
  }
  for (auto& c : cache_) {
    c.k.reserve(frames_ * b.d_model);
    c.v.reserve(frames_ * b.d_model);
  }
}

template <typename T>
void IncrementalDecoder<T>::attend(const T* q, const T* k, const T* v, std::size_t rows, T* out) const {
  const auto& b = model_->config().base;
  const std::size_t d = b.d_model;
  const std::size_t dh = b.d_head();
  const T inv = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  std::vector<T> scores(rows), probs(rows);
  for (std::size_t h = 0; h < b.n_heads; ++h) {
    const std::size_t off = h * dh;
    for (std::size_t s = 0; s < rows; ++s) {
      T acc{0};
      for (std::size_t j = 0; j < dh; ++j) acc += q[off + j] * k[s * d + off + j];
      scores[s] = acc * inv;
    }
    kernels::softmax_row(scores.data(), probs.data(), rows, rows);
    for (std::size_t j = 0; j < dh; ++j) out[off + j] = T{0};
    for (std::size_t s = 0; s < rows; ++s) {
      const T p = probs[s];
      for (std::size_t j = 0; j < dh; ++j) out[off + j] += p * v[s * d + off + j];
    }
  }
}

template <typename T>
std::vector<T> IncrementalDecoder<T>::step(int token) {
  const auto& cfg = model_->config();
  const auto& b = cfg.base;
  const std::size_t d = b.d_model;
  if (pos_ >= frames_) throw CapacityError(fmt::format("decoder already produced {} positions", frames_));
  if (token < 0 || static_cast<std::size_t>(token) >= b.vocab_size) {
    throw IndexError(fmt::format("token {} out of range [0, {})", token, b.vocab_size));
  }
  std::vector<T> x(d), h(d), q, k, v, o(d), proj, hidden;
  const auto& emb = model_->token_embedding().value;
  const auto& posv = model_->positions();
  const T emb_scale = static_cast<T>(std::sqrt(static_cast<double>(d)));
  for (std::size_t j = 0; j < d; ++j) x[j] = emb(static_cast<std::size_t>(token), j) * emb_scale + posv(pos_, j);

  const std::size_t first = b.n_layers - cfg.adapted_layers;
  for (std::size_t i = 0; i < b.n_layers; ++i) {
    const auto& blk = model_->blocks()[i];
    auto& c = cache_[i];
    norm(x, *blk.ln1_gain, *blk.ln1_bias, h);
    project(h, *blk.wq, q);
    project(h, *blk.wk, k);
    project(h, *blk.wv, v);
    c.k.insert(c.k.end(), k.begin(), k.end());
    c.v.insert(c.v.end(), v.begin(), v.end());
    attend(q.data(), c.k.data(), c.v.data(), pos_ + 1, o.data());
    std::vector<T> attn;
    project(o, *blk.wo, attn);
    if (adapt_ && i >= first) {
      const std::size_t slot = i - first;
      std::vector<T> qq(d);
      for (std::size_t j = 0; j < d; ++j) qq[j] = q[j] + enc_q_[slot](pos_, j);
      attend(qq.data(), enc_k_[slot].data(), enc_v_[slot].data(), frames_, o.data());
      project(o, *blk.wo, proj);
      const T g = model_->gate(slot).value[0];
      for (std::size_t j = 0; j < d; ++j) attn[j] = attn[j] + proj[j] * g;
    }
    for (std::size_t j = 0; j < d; ++j) x[j] += attn[j];
    if (b.use_cross_attention) {
      norm(x, *blk.lnx_gain, *blk.lnx_bias, h);
      project(h, *blk.xq, q);
      attend(q.data(), c.xk.data(), c.xv.data(), prompt_rows_, o.data());
      project(o, *blk.xo, proj);
      for (std::size_t j = 0; j < d; ++j) x[j] += proj[j];
    }
    norm(x, *blk.ln2_gain, *blk.ln2_bias, h);
    project(h, *blk.w1, hidden);
    for (auto& u : hidden) u = kernels::gelu(u);
    project(hidden, *blk.w2, proj);
    for (std::size_t j = 0; j < d; ++j) x[j] += proj[j];
  }
  norm(x, model_->final_gain(), model_->final_bias(), h);
  std::vector<T> logits;
  project(h, model_->output_head(), logits);
  ++pos_;
  return logits;
}

int sample_token(std::span<const float> logits, const SamplingOptions& options, std::mt19937_64& rng) {
  if (logits.empty()) throw DimensionError("cannot sample from an empty logit row");
  if (options.greedy || options.temperature <= 0.0) {
    return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  }
  std::vector<std::size_t> order(logits.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t keep = logits.size();
  if (options.top_k > 0 && options.top_k < keep) {
    keep = options.top_k;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return logits[a] > logits[b]; });
    order.resize(keep);
    std::sort(order.begin(), order.end());
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (auto i : order) mx = std::max(mx, static_cast<double>(logits[i]));
  std::vector<double> w(keep);
  double total = 0.0;
  for (std::size_t n = 0; n < keep; ++n) {
    w[n] = std::exp((static_cast<double>(logits[order[n]]) - mx) / options.temperature);
    total += w[n];
  }
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng) * total;
  double cum = 0.0;
  for (std::size_t n = 0; n < keep; ++n) {
    cum += w[n];
    if (u < cum) return static_cast<int>(order[n]);
  }
  for (std::size_t n = keep; n-- > 0;) {
    if (w[n] > 0.0) return static_cast<int>(order[n]);
  }
  return static_cast<int>(order.back());
}

std::vector<int> generate(const AdaptedModel<float>& model, const ConditionSequence& cond, int prompt_id,
                          const SamplingOptions& options, std::mt19937_64& rng, bool use_adaptor) {
  IncrementalDecoder<float> dec(model, cond, prompt_id, use_adaptor);
  std::vector<int> out;
  out.reserve(cond.length());
  int token = options.start_token;
  for (std::size_t t = 0; t < cond.length(); ++t) {
    const auto logits = dec.step(token);
    token = sample_token(logits, options, rng);
    out.push_back(token);
  }
  return out;
}

template class IncrementalDecoder<float>;
template class IncrementalDecoder<double>;

}  // namespace cmad

// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cmad/model/config.hpp"
#include "cmad/numerics/ops.hpp"
#include "cmad/representation/condition.hpp"

namespace cmad {

/// Parameters of one pre-norm decoder block. Attention projections are d_model×d_model;
/// head h owns columns [h·d_head, (h+1)·d_head) of q/k/v and the matching rows of o.
template <typename T>
struct DecoderBlock {
  Parameter<T>* ln1_gain = nullptr;
  Parameter<T>* ln1_bias = nullptr;
  Parameter<T>* wq = nullptr;
  Parameter<T>* wk = nullptr;
  Parameter<T>* wv = nullptr;
  Parameter<T>* wo = nullptr;
  // Cross-attention onto the prompt words (absent when disabled).
  Parameter<T>* lnx_gain = nullptr;
  Parameter<T>* lnx_bias = nullptr;
  Parameter<T>* xq = nullptr;
  Parameter<T>* xk = nullptr;
  Parameter<T>* xv = nullptr;
  Parameter<T>* xo = nullptr;
  Parameter<T>* ln2_gain = nullptr;
  Parameter<T>* ln2_bias = nullptr;
  Parameter<T>* w1 = nullptr;
  Parameter<T>* w2 = nullptr;
};

/// Per-layer encoder projections (all heads side by side, T×d_model each).
template <typename T>
struct EncoderLayerOutput {
  Var<T> q;
  Var<T> k;
  Var<T> v;
};

/// Residual-stream RMS after each decoder layer, recorded for diagnostics.
struct ForwardTrace {
  std::vector<double> residual_rms;
};

/// Multi-head attention from precomputed projections, concatenated over heads (before W_o).
template <typename T>
Var<T> multi_head_attention(const Var<T>& q, const Var<T>& k, const Var<T>& v, std::size_t n_heads, bool causal);

/// Condition attention of the adaptor, projected by the frozen output matrix:
/// O'' = concat_h softmax((Q'_h + Q_h) K_hᵀ / √d_head) V_h · W_o, unmasked over condition frames.
template <typename T>
Var<T> condition_attention(const Var<T>& decoder_q, const EncoderLayerOutput<T>& enc, const Var<T>& w_o,
                           std::size_t n_heads);

/// O''' = O' + g · O''. Throws AlignmentError if decoder and condition lengths differ.
template <typename T>
Var<T> adapted_attention(const Var<T>& base_output, const Var<T>& decoder_q, const EncoderLayerOutput<T>& enc,
                         const Var<T>& w_o, const Var<T>& gate, std::size_t n_heads);

/// Frozen decoder plus conditional encoder and gated adaptor.
///
/// The encoder reuses the self-attention blocks of the top-L decoder layers by reference; its
/// only own parameter is the learnable input sequence. All base parameters are frozen.
template <typename T>
class AdaptedModel {
 public:
  struct ForwardOptions {
    bool use_adaptor = true;
    ForwardTrace* trace = nullptr;
  };

  /// Deterministic initialization from `seed`; base parameters frozen, adaptor trainable with
  /// gates at zero.
  static AdaptedModel build(const ModelConfig& config, std::uint64_t seed);

  AdaptedModel(AdaptedModel&&) noexcept = default;
  AdaptedModel& operator=(AdaptedModel&&) noexcept = default;

  const ModelConfig& config() const noexcept { return config_; }
  ParameterStore<T>& parameters() noexcept { return store_; }
  const ParameterStore<T>& parameters() const noexcept { return store_; }

  const std::vector<DecoderBlock<T>>& blocks() const noexcept { return blocks_; }
  Parameter<T>& token_embedding() const { return *tok_emb_; }
  Parameter<T>& prompt_embedding() const { return *prompt_emb_; }
  Parameter<T>& final_gain() const { return *lnf_gain_; }
  Parameter<T>& final_bias() const { return *lnf_bias_; }
  Parameter<T>& output_head() const { return *head_; }
  Parameter<T>& encoder_input() const { return *enc_input_; }
  Parameter<T>& gate(std::size_t slot) const { return *gates_.at(slot); }
  std::size_t adapted_count() const noexcept { return gates_.size(); }
  const ConditionParams<T>& condition() const noexcept { return cond_; }
  /// Fixed sinusoidal position table, T_max×d_model.
  const Tensor<T>& positions() const noexcept { return positions_; }

  static bool is_base_parameter(const std::string& name) { return name.rfind("base.", 0) == 0; }
  /// Toggles trainability of the base and adaptor parameter groups.
  void set_trainable(bool base, bool adaptor);

  /// Next-token logits (T×V). Position t sees tokens 0..t and every condition frame.
  Var<T> forward(Tape<T>& tape, std::span<const int> tokens, const ConditionSequence& cond, int prompt_id,
                 const ForwardOptions& options) const;
  Var<T> forward(Tape<T>& tape, std::span<const int> tokens, const ConditionSequence& cond, int prompt_id) const {
    return forward(tape, tokens, cond, prompt_id, ForwardOptions{});
  }
  /// The frozen decoder alone.
  Var<T> base_forward(Tape<T>& tape, std::span<const int> tokens, int prompt_id,
                      ForwardTrace* trace = nullptr) const;

  /// Per adapted layer (ascending) Q, K, V of the unmasked conditional encoder.
  std::vector<EncoderLayerOutput<T>> encoder_forward(Tape<T>& tape, const ConditionSequence& cond) const;

  /// Prompt word embeddings (W×d_model) on the tape.
  Var<T> prompt_states(Tape<T>& tape, int prompt_id) const;

  Tensor<T> logits(std::span<const int> tokens, const ConditionSequence& cond, int prompt_id,
                   bool use_adaptor = true) const;

 private:
  AdaptedModel() = default;

  Var<T> decode(Tape<T>& tape, std::span<const int> tokens, const std::vector<EncoderLayerOutput<T>>* enc,
                int prompt_id, ForwardTrace* trace) const;

  ModelConfig config_;
  ParameterStore<T> store_;
  std::vector<DecoderBlock<T>> blocks_;
  Parameter<T>* tok_emb_ = nullptr;
  Parameter<T>* prompt_emb_ = nullptr;
  Parameter<T>* lnf_gain_ = nullptr;
  Parameter<T>* lnf_bias_ = nullptr;
  Parameter<T>* head_ = nullptr;
  Parameter<T>* enc_input_ = nullptr;
  std::vector<Parameter<T>*> gates_;
  ConditionParams<T> cond_;
  Tensor<T> positions_;
};

/// Sinusoidal position table (rows × width).
template <typename T>
Tensor<T> sinusoidal_positions(std::size_t rows, std::size_t width);

/// Writes every parameter to a checkpoint and the model configuration to `config_path`.
template <typename T>
void save_model(const AdaptedModel<T>& model, const std::filesystem::path& checkpoint,
                const std::filesystem::path& config_path);
/// Loads weights into an already-built model; names and shapes must match exactly.
template <typename T>
void load_weights(AdaptedModel<T>& model, const std::filesystem::path& checkpoint);
/// Copies only the base.* tensors of a checkpoint (used to start from a pre-trained decoder).
template <typename T>
void load_base_weights(AdaptedModel<T>& model, const std::filesystem::path& checkpoint);
/// Sibling configuration path of a checkpoint: same stem, ".cfg" extension.
std::filesystem::path config_path_for(const std::filesystem::path& checkpoint);

extern template class AdaptedModel<float>;
extern template class AdaptedModel<double>;

}  // namespace cmad

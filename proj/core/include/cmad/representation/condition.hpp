// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cmad/numerics/ops.hpp"
#include "cmad/representation/annotations.hpp"

namespace cmad {

enum class MaskGranularity {
  sequence,  // one draw per channel per example, applied to every frame
  frame,     // independent draw per frame (ablation mode)
};

/// Frame-aligned condition channels plus the per-frame mask flags.
struct ConditionSequence {
  std::vector<ChordSymbol> chords;
  std::vector<PianoRollFrame> piano_roll;
  std::vector<int> acoustic;
  std::vector<std::uint8_t> midi_masked;
  std::vector<std::uint8_t> acoustic_masked;
  double frame_rate = kDefaultFrameRate;

  std::size_t length() const noexcept { return chords.size(); }

  /// Builds an unmasked sequence; throws AlignmentError on channel length mismatch.
  static ConditionSequence make(std::vector<ChordSymbol> chords, std::vector<PianoRollFrame> piano_roll,
                                std::vector<int> acoustic, double frame_rate = kDefaultFrameRate);
  void validate() const;
};

/// With probability r the MIDI channel is replaced by its mask embedding; independently the
/// same for the acoustic channel. The chord channel is never masked.
ConditionSequence apply_masking(ConditionSequence seq, double r, std::mt19937_64& rng,
                                MaskGranularity granularity = MaskGranularity::sequence);

/// Forces the mask state of both channels on every frame.
ConditionSequence with_channel_masks(ConditionSequence seq, bool midi_masked, bool acoustic_masked);

/// Replaces every chord with no-chord.
ConditionSequence without_chords(ConditionSequence seq);

struct ConditionDims {
  std::size_t k1 = 12;           // piano-roll projection width
  std::size_t k2 = 12;           // acoustic projection width
  std::size_t acoustic_dim = 0;  // width of the frozen token embedding (n)
  std::size_t head_dim = 0;
  std::size_t heads = 0;
  std::size_t max_frames = 0;

  std::size_t joint_dim() const noexcept { return kChordFrameSize + k1 + k2; }
};

/// Trainable parameters of the joint symbolic/acoustic embedding.
///
/// The joint pre-fusion vector [chord; piano; acoustic] + positional is shared by every
/// layer and head; the fusion matrix is distinct per (layer, head).
template <typename T>
class ConditionParams {
 public:
  ConditionParams() = default;
  /// `layers` are the decoder layer indices that receive a fusion matrix per head.
  ConditionParams(ParameterStore<T>& store, const ConditionDims& dims, const std::vector<std::size_t>& layers,
                  std::mt19937_64& rng, double init_std);

  const ConditionDims& dims() const noexcept { return dims_; }

  Parameter<T>& piano_projection() const { return *w_p_; }
  Parameter<T>& acoustic_projection() const { return *w_a_; }
  Parameter<T>& positional() const { return *z_pos_; }
  Parameter<T>& midi_mask() const { return *s_p_; }
  Parameter<T>& acoustic_mask() const { return *s_a_; }
  /// `slot` indexes the adapted layers in ascending order.
  Parameter<T>& fusion(std::size_t slot, std::size_t head) const { return *w_e_.at(slot).at(head); }
  std::size_t slots() const noexcept { return w_e_.size(); }

 private:
  ConditionDims dims_;
  Parameter<T>* w_p_ = nullptr;
  Parameter<T>* w_a_ = nullptr;
  Parameter<T>* z_pos_ = nullptr;
  Parameter<T>* s_p_ = nullptr;
  Parameter<T>* s_a_ = nullptr;
  std::vector<std::vector<Parameter<T>*>> w_e_;
};

/// Constant T×37 matrix of encoded chord frames.
template <typename T>
Tensor<T> chord_matrix(const ConditionSequence& seq);
/// Constant T×128 piano-roll matrix.
template <typename T>
Tensor<T> piano_roll_matrix(const ConditionSequence& seq);

/// p' = W_pᵀ p for one frame.
template <typename T>
std::vector<T> project_piano_roll(const PianoRollFrame& frame, const Tensor<T>& w_p);
/// h' = W_aᵀ h where h is row `token` of the frozen embedding table.
template <typename T>
std::vector<T> project_acoustic(int token, const Tensor<T>& embedding_table, const Tensor<T>& w_a);

/// T×(37+k1+k2) joint vector [c; z^p; z^a] + z^pos on the tape. `embedding_table` is the
/// frozen token embedding of the base decoder.
template <typename T>
Var<T> joint_input(Tape<T>& tape, const ConditionSequence& seq, const ConditionParams<T>& params,
                   const Var<T>& embedding_table);

/// T×d_head fused embedding for one (layer slot, head).
template <typename T>
Var<T> fuse_head(const Var<T>& joint, const ConditionParams<T>& params, std::size_t slot, std::size_t head);

/// Non-differentiable convenience: joint_input followed by fuse_head.
template <typename T>
Tensor<T> fuse(const ConditionSequence& seq, const ConditionParams<T>& params, const Tensor<T>& embedding_table,
               std::size_t slot, std::size_t head);

}  // namespace cmad

// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#include "cmad/representation/condition.hpp"

#include <fmt/format.h>

#include "cmad/errors.hpp"

namespace cmad {

ConditionSequence ConditionSequence::make(std::vector<ChordSymbol> chords, std::vector<PianoRollFrame> piano_roll,
                                          std::vector<int> acoustic, double frame_rate) {
  ConditionSequence s;
  const std::size_t n = chords.size();
  s.chords = std::move(chords);
  s.piano_roll = std::move(piano_roll);
  s.acoustic = std::move(acoustic);
  s.midi_masked.assign(n, 0);
  s.acoustic_masked.assign(n, 0);
  s.frame_rate = frame_rate;
  s.validate();
  return s;
}

void ConditionSequence::validate() const {
  const std::size_t n = chords.size();
  if (piano_roll.size() != n || acoustic.size() != n || midi_masked.size() != n || acoustic_masked.size() != n) {
    throw AlignmentError(fmt::format(
        "condition channels disagree in length: chords {}, piano roll {}, acoustic {}, masks {}/{}", n,
        piano_roll.size(), acoustic.size(), midi_masked.size(), acoustic_masked.size()));
  }
}

ConditionSequence apply_masking(ConditionSequence seq, double r, std::mt19937_64& rng, MaskGranularity granularity) {
  if (!(r >= 0.0 && r <= 1.0)) throw ConfigError(fmt::format("mask rate {} outside [0, 1]", r));
  seq.validate();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = seq.length();
  if (granularity == MaskGranularity::sequence) {
    const std::uint8_t midi = u(rng) < r ? 1 : 0;
    const std::uint8_t acoustic = u(rng) < r ? 1 : 0;
    seq.midi_masked.assign(n, midi);
    seq.acoustic_masked.assign(n, acoustic);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      seq.midi_masked[i] = u(rng) < r ? 1 : 0;
      seq.acoustic_masked[i] = u(rng) < r ? 1 : 0;
    }
  }
  return seq;
}

ConditionSequence with_channel_masks(ConditionSequence seq, bool midi_masked, bool acoustic_masked) {
  seq.midi_masked.assign(seq.length(), midi_masked ? 1 : 0);
  seq.acoustic_masked.assign(seq.length(), acoustic_masked ? 1 : 0);
  return seq;
}

ConditionSequence without_chords(ConditionSequence seq) {
  seq.chords.assign(seq.length(), ChordSymbol::none());
  return seq;
}

template <typename T>
ConditionParams<T>::ConditionParams(ParameterStore<T>& store, const ConditionDims& dims,
                                    const std::vector<std::size_t>& layers, std::mt19937_64& rng, double init_std)
    : dims_(dims) {
  std::normal_distribution<double> normal(0.0, init_std);
  auto randn = [&](Shape shape) {
    Tensor<T> t(std::move(shape));
    for (auto& v : t.values()) v = static_cast<T>(normal(rng));
    return t;
  };
  const std::size_t joint = dims.joint_dim();
  w_p_ = &store.add("cond.W_p", randn({kPianoRollPitches, dims.k1}), true);
  w_a_ = &store.add("cond.W_a", randn({dims.acoustic_dim, dims.k2}), true);
  s_p_ = &store.add("cond.s_p", randn({1, dims.k1}), true);
  s_a_ = &store.add("cond.s_a", randn({1, dims.k2}), true);
  z_pos_ = &store.add("cond.z_pos", randn({dims.max_frames, joint}), true);
  for (std::size_t layer : layers) {
    auto& per_head = w_e_.emplace_back();
    for (std::size_t h = 0; h < dims.heads; ++h) {
      per_head.push_back(
          &store.add(fmt::format("cond.W_e.layer{}.head{}", layer, h), randn({joint, dims.head_dim}), true));
    }
  }
}

template <typename T>
Tensor<T> chord_matrix(const ConditionSequence& seq) {
  Tensor<T> m({seq.length(), kChordFrameSize});
  for (std::size_t i = 0; i < seq.length(); ++i) {
    const auto f = encode_chord_frame(seq.chords[i]);
    for (std::size_t j = 0; j < kChordFrameSize; ++j) m(i, j) = static_cast<T>(f[j]);
  }
  return m;
}

template <typename T>
Tensor<T> piano_roll_matrix(const ConditionSequence& seq) {
  Tensor<T> m({seq.length(), kPianoRollPitches});
  for (std::size_t i = 0; i < seq.length(); ++i)
    for (std::size_t j = 0; j < kPianoRollPitches; ++j) m(i, j) = seq.piano_roll[i][j] ? T{1} : T{0};
  return m;
}

template <typename T>
std::vector<T> project_piano_roll(const PianoRollFrame& frame, const Tensor<T>& w_p) {
  if (w_p.rank() != 2 || w_p.shape()[0] != kPianoRollPitches) {
    throw DimensionError("piano-roll projection must be 128×k, got " + shape_string(w_p.shape()));
  }
  std::vector<T> out(w_p.cols(), T{0});
  for (std::size_t j = 0; j < kPianoRollPitches; ++j) {
    if (!frame[j]) continue;
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += w_p(j, c);
  }
  return out;
}

template <typename T>
std::vector<T> project_acoustic(int token, const Tensor<T>& embedding_table, const Tensor<T>& w_a) {
  if (token < 0 || static_cast<std::size_t>(token) >= embedding_table.rows()) {
    throw IndexError(fmt::format("acoustic token {} outside vocabulary of {}", token, embedding_table.rows()));
  }
  if (w_a.rows() != embedding_table.cols()) {
    throw DimensionError("acoustic projection rows " + std::to_string(w_a.rows()) +
                         " do not match embedding width " + std::to_string(embedding_table.cols()));
  }
  std::vector<T> out(w_a.cols(), T{0});
  const auto h = embedding_table.row(static_cast<std::size_t>(token));
  for (std::size_t j = 0; j < h.size(); ++j)
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += h[j] * w_a(j, c);
  return out;
}

template <typename T>
Var<T> joint_input(Tape<T>& tape, const ConditionSequence& seq, const ConditionParams<T>& params,
                   const Var<T>& embedding_table) {
  seq.validate();
  const std::size_t n = seq.length();
  if (n == 0) throw DimensionError("condition sequence is empty");
  if (n > params.dims().max_frames) {
    throw CapacityError(fmt::format("condition has {} frames but capacity is {}", n, params.dims().max_frames));
  }
  auto chords = tape.constant(chord_matrix<T>(seq));
  auto roll = tape.constant(piano_roll_matrix<T>(seq));
  auto piano = ops::mask_rows(ops::matmul(roll, tape.parameter(params.piano_projection())),
                              tape.parameter(params.midi_mask()), seq.midi_masked);
  auto h = ops::embedding_lookup(embedding_table, std::span<const int>(seq.acoustic));
  auto acoustic = ops::mask_rows(ops::matmul(h, tape.parameter(params.acoustic_projection())),
                                 tape.parameter(params.acoustic_mask()), seq.acoustic_masked);
  auto joint = ops::concat_cols<T>({chords, piano, acoustic});
  return ops::add(joint, ops::slice_rows(tape.parameter(params.positional()), 0, n));
}

template <typename T>
Var<T> fuse_head(const Var<T>& joint, const ConditionParams<T>& params, std::size_t slot, std::size_t head) {
  return ops::matmul(joint, joint.tape().parameter(params.fusion(slot, head)));
}

template <typename T>
Tensor<T> fuse(const ConditionSequence& seq, const ConditionParams<T>& params, const Tensor<T>& embedding_table,
               std::size_t slot, std::size_t head) {
  Tape<T> tape;
  auto table = tape.constant(embedding_table);
  auto joint = joint_input(tape, seq, params, table);
  return fuse_head(joint, params, slot, head).value();
}

#define CMAD_INSTANTIATE_CONDITION(T)                                                                          \
  template class ConditionParams<T>;                                                                           \
  template Tensor<T> chord_matrix<T>(const ConditionSequence&);                                                \
  template Tensor<T> piano_roll_matrix<T>(const ConditionSequence&);                                           \
  template std::vector<T> project_piano_roll(const PianoRollFrame&, const Tensor<T>&);                         \
  template std::vector<T> project_acoustic(int, const Tensor<T>&, const Tensor<T>&);                           \
  template Var<T> joint_input(Tape<T>&, const ConditionSequence&, const ConditionParams<T>&, const Var<T>&);    \
  template Var<T> fuse_head(const Var<T>&, const ConditionParams<T>&, std::size_t, std::size_t);               \
  template Tensor<T> fuse(const ConditionSequence&, const ConditionParams<T>&, const Tensor<T>&, std::size_t, \
                          std::size_t);

CMAD_INSTANTIATE_CONDITION(float)
CMAD_INSTANTIATE_CONDITION(double)

#undef CMAD_INSTANTIATE_CONDITION

}  // namespace cmad

// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cmad/errors.hpp"
#include "cmad/representation/chord.hpp"

namespace cmad {
namespace {

std::bitset<12> bits(std::initializer_list<int> on) {
  std::bitset<12> b;
  for (int i : on) b.set(i);
  return b;
}

std::vector<int> ones(const ChordFrame& f) {
  std::vector<int> out;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] == 1.0f) out.push_back(static_cast<int>(i));
    else EXPECT_EQ(f[i], 0.0f) << "position " << i;
  }
  return out;
}

TEST(ParseChordLabel, TableExamples) {
  auto c = parse_chord_label("C:maj");
  EXPECT_FALSE(c.no_chord);
  EXPECT_EQ(c.root, 0);
  EXPECT_EQ(c.bass, 0);
  EXPECT_EQ(c.bitmap, bits({0, 4, 7}));

  auto d = parse_chord_label("D:min");
  EXPECT_EQ(d.root, 2);
  EXPECT_EQ(d.bass, 2);
  EXPECT_EQ(d.bitmap, bits({0, 3, 7}));

  EXPECT_TRUE(parse_chord_label("N").no_chord);
}

TEST(ParseChordLabel, SlashBassIsAbsolute) {
  auto g = parse_chord_label("G:7/B");
  EXPECT_EQ(g.root, 7);
  // B is four semitones above G, the major third of the chord.
  EXPECT_EQ(g.bass, (7 + 4) % 12);
  EXPECT_EQ(g.bass, 11);
  EXPECT_EQ(g.bitmap, bits({0, 4, 7, 10}));
}

TEST(ParseChordLabel, DefaultsAndEnharmonics) {
  EXPECT_EQ(parse_chord_label("E"), parse_chord_label("E:maj"));
  EXPECT_EQ(parse_chord_label("Db:min").root, parse_chord_label("C#:min").root);
}

TEST(ParseChordLabel, ErrorsNameTheOffendingToken) {
  for (const auto& [label, token] : std::vector<std::pair<std::string, std::string>>{
           {"H:maj", "H"}, {"C:blues", "blues"}, {"C:maj/X", "X"}}) {
    try {
      parse_chord_label(label);
      ADD_FAILURE() << label;
    } catch (const ParseError& e) {
      EXPECT_NE(std::string(e.what()).find(token), std::string::npos) << e.what();
    }
  }
  EXPECT_THROW(parse_chord_label(""), ParseError);
  EXPECT_THROW(parse_chord_label("C:"), ParseError);
}

TEST(EncodeChordFrame, LayoutExamples) {
  EXPECT_EQ(ones(encode_chord_frame(parse_chord_label("C:maj"))), (std::vector<int>{0, 12, 24, 28, 31}));
  EXPECT_EQ(ones(encode_chord_frame(parse_chord_label("N"))), (std::vector<int>{36}));
  EXPECT_EQ(ones(encode_chord_frame(parse_chord_label("D:min"))), (std::vector<int>{2, 14, 24, 27, 31}));
}

TEST(EncodeChordFrame, OneCountIsTwoPlusPopcount) {
  for (const auto& q : chord_qualities()) {
    for (int root = 0; root < 12; ++root) {
      const auto f = encode_chord_frame(ChordSymbol::make(root, root, q.bitmap));
      EXPECT_EQ(ones(f).size(), 2 + q.bitmap.count()) << q.name;
      EXPECT_EQ(f[kNoChordIndex], 0.0f);
    }
  }
}

TEST(EncodeChordFrame, RoundTripsEveryRootBassQuality) {
  for (const auto& q : chord_qualities()) {
    for (int root = 0; root < 12; ++root) {
      for (int bass = 0; bass < 12; ++bass) {
        const auto chord = ChordSymbol::make(root, bass, q.bitmap);
        const auto back = decode_chord_frame(encode_chord_frame(chord));
        EXPECT_EQ(back, chord);
        EXPECT_EQ(parse_chord_label(format_chord_label(chord)), chord) << format_chord_label(chord);
      }
    }
  }
  EXPECT_TRUE(decode_chord_frame(encode_chord_frame(ChordSymbol::none())).no_chord);
}

TEST(ChordSymbol, PitchClassesRotateByRoot) {
  EXPECT_EQ(parse_chord_label("A:min").pitch_classes(), bits({9, 0, 4}));
}

}  // namespace
}  // namespace cmad

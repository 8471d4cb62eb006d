// Copyright 2026 The latent-lens Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "doctest.h"
#include "latent_lens/corpus.hpp"
#include "latent_lens/features.hpp"

namespace ll = latent_lens;

namespace {

ll::Melody from_pitches(const std::vector<int>& pitches, int dur, double tempo = 120.0) {
  ll::Melody m;
  m.tempo_qpm = tempo;
  int t = 0;
  for (int p : pitches) {
    m.spans.push_back({ll::Pitch(p), t, dur});
    t += dur;
  }
  return m;
}

ll::Melody transpose(ll::Melody m, int semitones) {
  for (auto& s : m.spans) s.pitch = ll::Pitch(s.pitch.value() + semitones);
  return m;
}

bool is_fraction_feature(std::size_t i) {
  const auto name = ll::kFeatureNames[i];
  return name == "R6_rest_fraction" || name == "P6_most_common_pitch_frequency" ||
         name.substr(0, 2) == "M3" || name.substr(0, 2) == "M4" || name.substr(0, 2) == "M5" ||
         name.substr(0, 2) == "M6" || name.substr(0, 2) == "M7";
}

}  // namespace

TEST_CASE("catalog") {
  CHECK(ll::kFeatureNames.size() == 20);
  CHECK(ll::feature_index("R1_note_density") == 0u);
  CHECK(ll::feature_index("M7_arpeggiation_fraction") == 19u);
  CHECK_FALSE(ll::feature_index("X").has_value());
  CHECK(ll::feature_block(0) == ll::FeatureBlock::kRhythm);
  CHECK(ll::feature_block(7) == ll::FeatureBlock::kPitch);
  CHECK(ll::feature_block(13) == ll::FeatureBlock::kMelody);
}

TEST_CASE("C major scale in quarter notes") {
  const auto f = ll::extract_features(from_pitches({60, 62, 64, 65, 67, 69, 71, 72}, 4));
  CHECK_FALSE(f.degenerate);
  CHECK(f.at("R1_note_density") == doctest::Approx(2.0));
  CHECK(f.at("R2_mean_note_duration") == doctest::Approx(0.5));
  CHECK(f.at("R3_sd_note_duration") == doctest::Approx(0.0));
  CHECK(f.at("R6_rest_fraction") == doctest::Approx(0.0));
  CHECK(f.at("R7_mean_inter_onset_interval") == doctest::Approx(4.0));
  CHECK(f.at("P1_pitch_range") == 12.0);
  CHECK(f.at("P2_mean_pitch") == doctest::Approx(66.25));
  CHECK(f.at("P3_pitch_variety") == 8.0);
  CHECK(f.at("P4_pitch_class_variety") == 7.0);
  CHECK(f.at("P5_most_common_pitch") == 60.0);
  CHECK(f.at("P6_most_common_pitch_frequency") == doctest::Approx(1.0 / 8.0));
  CHECK(f.at("M1_mean_abs_interval") == doctest::Approx(12.0 / 7.0));
  CHECK(f.at("M2_most_common_interval") == 2.0);
  CHECK(f.at("M3_rising_fraction") == 1.0);
  CHECK(f.at("M4_stepwise_fraction") == 1.0);
  CHECK(f.at("M5_chromatic_fraction") == doctest::Approx(2.0 / 7.0));
  CHECK(f.at("M6_repeated_fraction") == 0.0);
  CHECK_THROWS_AS(f.at("nope"), std::out_of_range);
}

TEST_CASE("single whole note is degenerate") {
  const auto f = ll::extract_features(from_pitches({60}, 16));
  CHECK(f.degenerate);
  CHECK(f.at("P1_pitch_range") == 0.0);
  CHECK(f.at("R6_rest_fraction") == doctest::Approx(0.5));
  for (std::size_t i = 13; i < 20; ++i) CHECK(f[i] == 0.0);
}

TEST_CASE("empty melody is degenerate zeros except rest fraction") {
  const auto f = ll::extract_features(ll::Melody{});
  CHECK(f.degenerate);
  CHECK(f.at("R6_rest_fraction") == 1.0);
  CHECK(f.at("R1_note_density") == 0.0);
}

TEST_CASE("two notes C4 to E4") {
  const auto f = ll::extract_features(from_pitches({60, 64}, 4));
  CHECK(f.at("M1_mean_abs_interval") == 4.0);
  CHECK(f.at("M7_arpeggiation_fraction") == 1.0);
  CHECK(f.at("M4_stepwise_fraction") == 0.0);
  CHECK(f.at("R6_rest_fraction") == doctest::Approx(0.75));
}

TEST_CASE("tie rules") {
  // Intervals +3, -3: equal counts and |value|, lower value wins.
  CHECK(ll::extract_features(from_pitches({60, 63, 60}, 4)).at("M2_most_common_interval") == -3.0);
  // Intervals +2, -5: smaller magnitude wins.
  CHECK(ll::extract_features(from_pitches({60, 62, 57}, 4)).at("M2_most_common_interval") == 2.0);
  // Pitches 67 and 62 once each: lower pitch wins.
  CHECK(ll::extract_features(from_pitches({67, 62}, 4)).at("P5_most_common_pitch") == 62.0);
  // Repeated notes do not count towards the rising fraction denominator.
  CHECK(ll::extract_features(from_pitches({60, 60, 62, 60}, 4)).at("M3_rising_fraction") == 0.5);
}

TEST_CASE("corpus matrix rows match single extraction and permute with the corpus") {
  auto corpus = ll::gen_random_corpus({}, 30, 4);
  const auto f = ll::extract_corpus_features(corpus);
  REQUIRE(f.rows() == 30);
  REQUIRE(f.cols() == 20);
  for (Eigen::Index r = 0; r < f.rows(); ++r) {
    const auto v = ll::extract_features(corpus[static_cast<std::size_t>(r)]);
    for (std::size_t c = 0; c < 20; ++c) CHECK(f(r, static_cast<Eigen::Index>(c)) == v[c]);
  }
  std::reverse(corpus.begin(), corpus.end());
  const auto g = ll::extract_corpus_features(corpus);
  for (Eigen::Index r = 0; r < f.rows(); ++r) CHECK(g.row(r) == f.row(29 - r));
}

TEST_CASE("transposition and tempo invariants on random melodies") {
  const auto corpus = ll::gen_random_corpus({}, 300, 12);
  for (const auto& m : corpus) {
    if (m.spans.empty()) continue;
    int hi = 0;
    for (const auto& s : m.spans) hi = std::max(hi, s.pitch.value());
    if (hi + 5 > 127) continue;
    const auto a = ll::extract_features(m);
    const auto b = ll::extract_features(transpose(m, 5));
    for (std::size_t i = 0; i < 20; ++i) {
      const auto block = ll::feature_block(i);
      const auto name = ll::kFeatureNames[i];
      if (name == "P2_mean_pitch" || name == "P5_most_common_pitch") {
        CHECK(b[i] == doctest::Approx(a[i] + 5.0));
      } else if (block != ll::FeatureBlock::kPitch) {
        CHECK(b[i] == a[i]);
      }
    }
    ll::Melody fast = m;
    fast.tempo_qpm *= 2.0;
    const auto c = ll::extract_features(fast);
    CHECK(c.at("R1_note_density") == doctest::Approx(2.0 * a.at("R1_note_density")));
    CHECK(c.at("R2_mean_note_duration") == doctest::Approx(0.5 * a.at("R2_mean_note_duration")));
    CHECK(c.at("R4_shortest_note") == doctest::Approx(0.5 * a.at("R4_shortest_note")));
    CHECK(c.at("R5_longest_note") == doctest::Approx(0.5 * a.at("R5_longest_note")));
    for (std::size_t i = 7; i < 20; ++i) CHECK(c[i] == a[i]);
    for (std::size_t i = 0; i < 20; ++i) {
      if (is_fraction_feature(i)) {
        CHECK(a[i] >= 0.0);
        CHECK(a[i] <= 1.0);
      }
    }
  }
}

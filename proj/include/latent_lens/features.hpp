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

// Scalar rhythm (R), pitch (P) and melody (M) descriptors of a melody.

#ifndef LATENT_LENS_FEATURES_HPP_
#define LATENT_LENS_FEATURES_HPP_

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string_view>
#include <vector>

#include "latent_lens/melody.hpp"

namespace latent_lens {

inline constexpr std::size_t kFeatureCount = 20;

// Stable API: column order of every feature matrix.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "R1_note_density",           // onsets per second
    "R2_mean_note_duration",     // seconds
    "R3_sd_note_duration",       // seconds, population sd
    "R4_shortest_note",          // seconds
    "R5_longest_note",           // seconds
    "R6_rest_fraction",          // silent steps / total steps
    "R7_mean_inter_onset_interval",  // steps
    "P1_pitch_range",            // semitones
    "P2_mean_pitch",
    "P3_pitch_variety",          // distinct pitches
    "P4_pitch_class_variety",    // distinct pitch classes
    "P5_most_common_pitch",      // ties -> lower pitch
    "P6_most_common_pitch_frequency",  // fraction of onsets
    "M1_mean_abs_interval",      // semitones
    "M2_most_common_interval",   // signed; ties -> smaller |value|, then lower value
    "M3_rising_fraction",        // rising / non-zero intervals
    "M4_stepwise_fraction",      // |d| in {1, 2}
    "M5_chromatic_fraction",     // |d| == 1
    "M6_repeated_fraction",      // d == 0
    "M7_arpeggiation_fraction",  // |d| in {0,3,4,7,10,11,12,15,16}
};

enum class FeatureBlock { kRhythm, kPitch, kMelody };

FeatureBlock feature_block(std::size_t index);
std::optional<std::size_t> feature_index(std::string_view name);

struct FeatureVector {
  std::array<double, kFeatureCount> values{};
  // Set when the melody has fewer than two onsets: interval features (and,
  // for an empty melody, every note statistic) are reported as 0.
  bool degenerate = false;

  double operator[](std::size_t i) const { return values[i]; }
  // Throws std::out_of_range for unknown names.
  double at(std::string_view name) const;
};

FeatureVector extract_features(const Melody& m);

// n x 20 matrix, rows in corpus order, columns in kFeatureNames order.
Eigen::MatrixXd extract_corpus_features(const std::vector<Melody>& corpus);

}  // namespace latent_lens

#endif  // LATENT_LENS_FEATURES_HPP_

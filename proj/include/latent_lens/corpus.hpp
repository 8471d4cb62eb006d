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

// Corpus generators: random note sequences and a seeded synthetic "musical"
// corpus that stands in for real MIDI data.

#ifndef LATENT_LENS_CORPUS_HPP_
#define LATENT_LENS_CORPUS_HPP_

#include <cstdint>
#include <random>
#include <vector>

#include "latent_lens/melody.hpp"

namespace latent_lens {

using Rng = std::mt19937_64;

struct RandomSeqConfig {
  int n_notes_min = 2;
  int n_notes_max = 32;
  int pitch_min = 30;
  int pitch_max = 100;
  int duration_s_min = 1;
  int duration_s_max = 8;
  int bars = 2;

  void validate() const;
};

// Exactly one note sounds at every step: k onsets (step 0 always among them,
// the rest drawn without replacement), each note held until the next onset.
// The tempo is chosen so the whole sequence lasts an integer number of seconds.
Melody gen_random_sequence(const RandomSeqConfig& cfg, Rng& rng);

struct SyntheticConfig {
  int key_root = 0;                                  // pitch class
  std::vector<int> scale{0, 2, 4, 5, 7, 9, 11};      // semitone offsets within an octave
  double step_bias = 0.95;                           // P(next interval is one scale step)
  double direction_persistence = 0.95;               // P(next interval keeps the previous direction)
  std::vector<int> rhythm_grid{1, 2, 2, 4, 4, 8};    // allowed durations, in steps
  double rhythm_consistency = 0.95;                  // P(a note reuses the melody's base duration)
  double rest_probability = 0.0;
  int register_low = 48;
  int register_high = 84;
  int ambitus_degrees = 5;                           // widest span of one melody, in scale degrees
  int bars = 2;
  double tempo_qpm = 120.0;
  std::uint64_t seed = 42;

  void validate() const;
};

// One melody: an in-scale random walk (single scale steps with probability
// step_bias, otherwise leaps of 2..4 degrees; the direction persists with
// probability direction_persistence and reflects at the bounds of a window of
// ambitus_degrees placed uniformly in the register) starting from a random
// degree in that window, with durations drawn around a per-melody base duration.
Melody gen_musical_melody(const SyntheticConfig& cfg, Rng& rng);

// Deterministic corpora. Melody i uses its own stream seeded from (seed, i),
// so corpora can be generated in parallel and prefixes are stable.
std::vector<Melody> gen_random_corpus(const RandomSeqConfig& cfg, std::size_t n, std::uint64_t seed);
std::vector<Melody> gen_musical_corpus(const SyntheticConfig& cfg, std::size_t n);

Rng stream_rng(std::uint64_t root_seed, std::uint64_t stream);

}  // namespace latent_lens

#endif  // LATENT_LENS_CORPUS_HPP_

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

#include "latent_lens/corpus.hpp"

#include <algorithm>
#include <numeric>

#include "latent_lens/error.hpp"
#include "latent_lens/parallel.hpp"

namespace latent_lens {

void RandomSeqConfig::validate() const {
  const int steps = GridSpec::steps_for_bars(bars);
  if (bars < 1) throw ConfigError("bars must be >= 1");
  if (n_notes_min < 2 || n_notes_min > n_notes_max || n_notes_max > steps) {
    throw ConfigError("need 2 <= n_notes_min <= n_notes_max <= 16 * bars");
  }
  if (pitch_min < 0 || pitch_min > pitch_max || pitch_max > 127) {
    throw ConfigError("need 0 <= pitch_min <= pitch_max <= 127");
  }
  if (duration_s_min < 1 || duration_s_min > duration_s_max) {
    throw ConfigError("need 1 <= duration_s_min <= duration_s_max");
  }
}

Melody gen_random_sequence(const RandomSeqConfig& cfg, Rng& rng) {
  const int steps = GridSpec::steps_for_bars(cfg.bars);
  std::uniform_int_distribution<int> count_dist(cfg.n_notes_min, cfg.n_notes_max);
  std::uniform_int_distribution<int> pitch_dist(cfg.pitch_min, cfg.pitch_max);
  std::uniform_int_distribution<int> seconds_dist(cfg.duration_s_min, cfg.duration_s_max);

  const int k = count_dist(rng);
  // Partial Fisher-Yates over steps 1..steps-1.
  std::vector<int> candidates(static_cast<std::size_t>(steps - 1));
  std::iota(candidates.begin(), candidates.end(), 1);
  for (int i = 0; i < k - 1; ++i) {
    std::uniform_int_distribution<int> pick(i, steps - 2);
    std::swap(candidates[i], candidates[pick(rng)]);
  }
  std::vector<int> onsets{0};
  onsets.insert(onsets.end(), candidates.begin(), candidates.begin() + (k - 1));
  std::sort(onsets.begin(), onsets.end());

  Melody m;
  m.bars = cfg.bars;
  for (int i = 0; i < k; ++i) {
    const int end = i + 1 < k ? onsets[i + 1] : steps;
    m.spans.push_back({Pitch(pitch_dist(rng)), onsets[i], end - onsets[i]});
  }
  const int seconds = seconds_dist(rng);
  m.tempo_qpm = cfg.bars * GridSpec::kQuartersPerBar * 60.0 / seconds;
  return m;
}

void SyntheticConfig::validate() const {
  if (scale.empty()) throw ConfigError("scale must be non-empty");
  for (int s : scale) {
    if (s < 0 || s > 11) throw ConfigError("scale offsets must lie in 0..11");
  }
  if (rhythm_grid.empty()) throw ConfigError("rhythm_grid must be non-empty");
  for (int d : rhythm_grid) {
    if (d < 1) throw ConfigError("rhythm_grid durations must be positive");
  }
  if (step_bias < 0.0 || step_bias > 1.0) throw ConfigError("step_bias must lie in [0, 1]");
  if (direction_persistence < 0.0 || direction_persistence > 1.0) {
    throw ConfigError("direction_persistence must lie in [0, 1]");
  }
  if (rhythm_consistency < 0.0 || rhythm_consistency > 1.0) {
    throw ConfigError("rhythm_consistency must lie in [0, 1]");
  }
  if (rest_probability < 0.0 || rest_probability >= 1.0) {
    throw ConfigError("rest_probability must lie in [0, 1)");
  }
  if (register_low < 0 || register_high > 127 || register_high - register_low < 12) {
    throw ConfigError("register must span at least an octave inside 0..127");
  }
  if (ambitus_degrees < 1) throw ConfigError("ambitus_degrees must be >= 1");
  if (bars < 1) throw ConfigError("bars must be >= 1");
  if (!(tempo_qpm > 0.0)) throw ConfigError("tempo_qpm must be positive");
}

Melody gen_musical_melody(const SyntheticConfig& cfg, Rng& rng) {
  // Scale degrees available inside the register, ascending.
  std::vector<int> pitches;
  for (int p = cfg.register_low; p <= cfg.register_high; ++p) {
    const int pc = ((p - cfg.key_root) % 12 + 12) % 12;
    if (std::find(cfg.scale.begin(), cfg.scale.end(), pc) != cfg.scale.end()) pitches.push_back(p);
  }
  const int n_degrees = static_cast<int>(pitches.size());
  const int steps = GridSpec::steps_for_bars(cfg.bars);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> grid_pick(0, cfg.rhythm_grid.size() - 1);
  const int span = std::min(cfg.ambitus_degrees, n_degrees - 1);
  std::uniform_int_distribution<int> window_pick(0, n_degrees - 1 - span);
  std::uniform_int_distribution<int> leap_pick(2, 4);

  const int base = cfg.rhythm_grid[grid_pick(rng)];
  const int lo = window_pick(rng);
  const int hi = lo + span;
  int degree = std::uniform_int_distribution<int>(lo, hi)(rng);
  int dir = unit(rng) < 0.5 ? -1 : 1;

  Melody m;
  m.bars = cfg.bars;
  m.tempo_qpm = cfg.tempo_qpm;
  int t = 0;
  bool first = true;
  while (t < steps) {
    const int dur = unit(rng) < cfg.rhythm_consistency ? base : cfg.rhythm_grid[grid_pick(rng)];
    if (!first && unit(rng) < cfg.rest_probability) {
      t += dur;
      continue;
    }
    if (!first) {
      const int size = unit(rng) < cfg.step_bias ? 1 : leap_pick(rng);
      if (unit(rng) >= cfg.direction_persistence) dir = -dir;
      if (degree + dir * size < lo || degree + dir * size > hi) dir = -dir;
      degree = std::clamp(degree + dir * size, lo, hi);
    }
    first = false;
    m.spans.push_back({Pitch(pitches[degree]), t, std::min(dur, steps - t)});
    t += dur;
  }
  return m;
}

Rng stream_rng(std::uint64_t root_seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(root_seed), static_cast<std::uint32_t>(root_seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

std::vector<Melody> gen_random_corpus(const RandomSeqConfig& cfg, std::size_t n, std::uint64_t seed) {
  cfg.validate();
  std::vector<Melody> out(n);
  parallel_for(n, [&](std::size_t i) {
    Rng rng = stream_rng(seed, i);
    out[i] = gen_random_sequence(cfg, rng);
  });
  return out;
}

std::vector<Melody> gen_musical_corpus(const SyntheticConfig& cfg, std::size_t n) {
  cfg.validate();
  std::vector<Melody> out(n);
  parallel_for(n, [&](std::size_t i) {
    Rng rng = stream_rng(cfg.seed, i);
    out[i] = gen_musical_melody(cfg, rng);
  });
  return out;
}

}  // namespace latent_lens

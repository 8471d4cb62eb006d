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

#include "latent_lens/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

#include "latent_lens/parallel.hpp"

namespace latent_lens {
namespace {

enum Index : std::size_t {
  kR1, kR2, kR3, kR4, kR5, kR6, kR7,
  kP1, kP2, kP3, kP4, kP5, kP6,
  kM1, kM2, kM3, kM4, kM5, kM6, kM7,
};

// Most frequent key; `better(a, b)` breaks ties.
template <class Map, class Tie>
std::pair<typename Map::key_type, int> mode(const Map& counts, Tie better) {
  std::pair<typename Map::key_type, int> best = *counts.begin();
  for (const auto& kv : counts) {
    if (kv.second > best.second || (kv.second == best.second && better(kv.first, best.first))) best = {kv.first, kv.second};
  }
  return best;
}

bool is_arpeggio_interval(int a) {
  switch (a) {
    case 0: case 3: case 4: case 7: case 10: case 11: case 12: case 15: case 16:
      return true;
    default:
      return false;
  }
}

}  // namespace

FeatureBlock feature_block(std::size_t index) {
  if (index <= kR7) return FeatureBlock::kRhythm;
  if (index <= kP6) return FeatureBlock::kPitch;
  return FeatureBlock::kMelody;
}

std::optional<std::size_t> feature_index(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (kFeatureNames[i] == name) return i;
  }
  return std::nullopt;
}

double FeatureVector::at(std::string_view name) const {
  const auto i = feature_index(name);
  if (!i) throw std::out_of_range("unknown feature " + std::string(name));
  return values[*i];
}

FeatureVector extract_features(const Melody& m) {
  FeatureVector f;
  auto& v = f.values;
  const auto& spans = m.spans;
  const std::size_t n = spans.size();
  const double seconds_per_step = 60.0 / (m.tempo_qpm * GridSpec::kStepsPerQuarter);
  const double total_seconds = m.bars * GridSpec::kQuartersPerBar * 60.0 / m.tempo_qpm;
  const int total_steps = m.total_steps();

  int sounding = 0;
  for (const auto& s : spans) sounding += s.duration_steps;
  v[kR6] = static_cast<double>(total_steps - sounding) / total_steps;
  v[kR1] = static_cast<double>(n) / total_seconds;
  f.degenerate = n < 2;

  if (n > 0) {
    std::vector<double> secs(n);
    for (std::size_t i = 0; i < n; ++i) secs[i] = spans[i].duration_steps * seconds_per_step;
    double sum = 0.0;
    for (double s : secs) sum += s;
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double s : secs) ss += (s - mean) * (s - mean);
    v[kR2] = mean;
    v[kR3] = std::sqrt(ss / static_cast<double>(n));
    v[kR4] = *std::min_element(secs.begin(), secs.end());
    v[kR5] = *std::max_element(secs.begin(), secs.end());

    std::map<int, int> pitch_counts;
    std::set<int> classes;
    int lo = 127, hi = 0;
    long pitch_sum = 0;
    for (const auto& s : spans) {
      const int p = s.pitch.value();
      ++pitch_counts[p];
      classes.insert(p % 12);
      lo = std::min(lo, p);
      hi = std::max(hi, p);
      pitch_sum += p;
    }
    v[kP1] = hi - lo;
    v[kP2] = static_cast<double>(pitch_sum) / static_cast<double>(n);
    v[kP3] = static_cast<double>(pitch_counts.size());
    v[kP4] = static_cast<double>(classes.size());
    const auto [top_pitch, top_count] = mode(pitch_counts, [](int a, int b) { return a < b; });
    v[kP5] = top_pitch;
    v[kP6] = static_cast<double>(top_count) / static_cast<double>(n);
  }

  if (n >= 2) {
    v[kR7] = static_cast<double>(spans.back().onset_step - spans.front().onset_step) / static_cast<double>(n - 1);
    std::map<int, int> interval_counts;
    int abs_sum = 0, rising = 0, nonzero = 0, stepwise = 0, chromatic = 0, repeated = 0, arpeggio = 0;
    for (std::size_t i = 1; i < n; ++i) {
      const int d = spans[i].pitch.value() - spans[i - 1].pitch.value();
      const int a = std::abs(d);
      ++interval_counts[d];
      abs_sum += a;
      if (d != 0) ++nonzero;
      if (d > 0) ++rising;
      if (a == 1 || a == 2) ++stepwise;
      if (a == 1) ++chromatic;
      if (d == 0) ++repeated;
      if (is_arpeggio_interval(a)) ++arpeggio;
    }
    const double k = static_cast<double>(n - 1);
    v[kM1] = abs_sum / k;
    v[kM2] = mode(interval_counts, [](int a, int b) {
               return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : a < b;
             }).first;
    v[kM3] = nonzero > 0 ? rising / static_cast<double>(nonzero) : 0.0;
    v[kM4] = stepwise / k;
    v[kM5] = chromatic / k;
    v[kM6] = repeated / k;
    v[kM7] = arpeggio / k;
  }
  return f;
}

Eigen::MatrixXd extract_corpus_features(const std::vector<Melody>& corpus) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(corpus.size()), static_cast<Eigen::Index>(kFeatureCount));
  parallel_for(corpus.size(), [&](std::size_t i) {
    const FeatureVector f = extract_features(corpus[i]);
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f.values[j];
    }
  });
  return out;
}

}  // namespace latent_lens

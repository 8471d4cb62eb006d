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


#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <map>
#include <set>

#include "doctest.h"
#include "latent_lens/corpus.hpp"
#include "latent_lens/error.hpp"
#include "latent_lens/features.hpp"

namespace ll = latent_lens;

namespace {

double uniform_chi2_pvalue(const std::map<int, int>& counts, int lo, int hi, int n) {
  const double expected = static_cast<double>(n) / (hi - lo + 1);
  double stat = 0.0;
  for (int v = lo; v <= hi; ++v) {
    auto it = counts.find(v);
    const double o = it == counts.end() ? 0.0 : it->second;
    stat += (o - expected) * (o - expected) / expected;
  }
  boost::math::chi_squared dist(hi - lo);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace

TEST_CASE("random config validation") {
  ll::RandomSeqConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.n_notes_max = 33;
  CHECK_THROWS_AS(cfg.validate(), ll::ConfigError);
  cfg = {};
  cfg.n_notes_min = 1;
  CHECK_THROWS_AS(cfg.validate(), ll::ConfigError);
  cfg = {};
  cfg.pitch_max = 128;
  CHECK_THROWS_AS(cfg.validate(), ll::ConfigError);
}

TEST_CASE("two forced notes split the sequence at the second onset") {
  ll::RandomSeqConfig cfg;
  cfg.n_notes_min = cfg.n_notes_max = 2;
  bool saw_sixteen = false;
  for (std::uint64_t seed = 0; seed < 500 && !saw_sixteen; ++seed) {
    ll::Rng rng(seed);
    const auto m = ll::gen_random_sequence(cfg, rng);
    REQUIRE(m.spans.size() == 2);
    CHECK(m.spans[0].onset_step == 0);
    CHECK(m.spans[0].end_step() == m.spans[1].onset_step);
    CHECK(m.spans[1].end_step() == 32);
    if (m.spans[1].onset_step == 16) {
      saw_sixteen = true;
      CHECK(m.spans[0].duration_steps == 16);
      CHECK(m.spans[1].duration_steps == 16);
    }
  }
  CHECK(saw_sixteen);
}

TEST_CASE("random sequences cover every step with one note") {
  const auto corpus = ll::gen_random_corpus({}, 5000, 21);
  for (const auto& m : corpus) {
    int t = 0;
    for (const auto& s : m.spans) {
      CHECK(s.onset_step == t);
      t = s.end_step();
    }
    CHECK(t == 32);
    const double seconds = 8.0 * 60.0 / m.tempo_qpm;
    CHECK(seconds == doctest::Approx(std::round(seconds)));
    CHECK(std::round(seconds) >= 1.0);
    CHECK(std::round(seconds) <= 8.0);
  }
}

TEST_CASE("random marginals are uniform") {
  const int n = 20000;
  const auto corpus = ll::gen_random_corpus({}, n, 99);
  std::map<int, int> note_counts, pitch_counts, seconds;
  int n_pitches = 0;
  for (const auto& m : corpus) {
    ++note_counts[static_cast<int>(m.spans.size())];
    ++seconds[static_cast<int>(std::lround(8.0 * 60.0 / m.tempo_qpm))];
    for (const auto& s : m.spans) {
      ++pitch_counts[s.pitch.value()];
      ++n_pitches;
    }
  }
  CHECK(uniform_chi2_pvalue(note_counts, 2, 32, n) > 0.001);
  CHECK(uniform_chi2_pvalue(pitch_counts, 30, 100, n_pitches) > 0.001);
  CHECK(uniform_chi2_pvalue(seconds, 1, 8, n) > 0.001);
  CHECK(note_counts.begin()->first == 2);
  CHECK(note_counts.rbegin()->first == 32);
}

TEST_CASE("chi-square oracle rejects a skewed sample") {
  std::map<int, int> skewed{{1, 700}, {2, 300}};
  CHECK(uniform_chi2_pvalue(skewed, 1, 2, 1000) < 0.001);
}

TEST_CASE("pure stepwise walk") {
  ll::SyntheticConfig cfg;
  cfg.step_bias = 1.0;
  cfg.rest_probability = 0.0;
  std::vector<int> in_scale;
  for (int p = cfg.register_low; p <= cfg.register_high; ++p)
    if (std::find(cfg.scale.begin(), cfg.scale.end(), p % 12) != cfg.scale.end()) in_scale.push_back(p);
  const auto degree = [&](int p) {
    auto it = std::find(in_scale.begin(), in_scale.end(), p);
    REQUIRE(it != in_scale.end());
    return static_cast<int>(it - in_scale.begin());
  };
  for (const auto& m : ll::gen_musical_corpus(cfg, 300)) {
    for (std::size_t i = 1; i < m.spans.size(); ++i) {
      CHECK(std::abs(degree(m.spans[i].pitch.value()) - degree(m.spans[i - 1].pitch.value())) == 1);
    }
  }

  // Every melody stays inside a window of ambitus_degrees scale degrees.
  for (int ambitus : {1, 3, 5, 7}) {
    cfg.ambitus_degrees = ambitus;
    cfg.step_bias = 0.5;
    cfg.rhythm_grid = {1};
    bool reached = false;
    for (const auto& m : ll::gen_musical_corpus(cfg, 200)) {
      int lo = 1000, hi = -1;
      for (const auto& s : m.spans) {
        lo = std::min(lo, degree(s.pitch.value()));
        hi = std::max(hi, degree(s.pitch.value()));
      }
      CHECK(hi - lo <= ambitus);
      reached = reached || hi - lo == ambitus;
    }
    CHECK(reached);
  }
}

TEST_CASE("synthetic melodies are valid, in key and on the rhythm grid") {
  ll::SyntheticConfig cfg;
  cfg.key_root = 2;
  cfg.rhythm_grid = {2, 4};
  const std::set<int> scale_pcs{2, 4, 6, 7, 9, 11, 1};
  for (const auto& m : ll::gen_musical_corpus(cfg, 300)) {
    ll::validate(m);
    REQUIRE(!m.spans.empty());
    CHECK(m.spans[0].onset_step == 0);
    for (const auto& s : m.spans) {
      CHECK(scale_pcs.count(s.pitch.value() % 12) == 1);
      CHECK(s.pitch.value() >= cfg.register_low);
      CHECK(s.pitch.value() <= cfg.register_high);
      const bool on_grid = s.duration_steps == 2 || s.duration_steps == 4 || s.end_step() == 32;
      CHECK(on_grid);
    }
  }
}

TEST_CASE("synthetic config validation") {
  ll::SyntheticConfig cfg;
  cfg.scale.clear();
  CHECK_THROWS_AS(cfg.validate(), ll::ConfigError);
  cfg = {};
  cfg.rhythm_grid = {0};
  CHECK_THROWS_AS(cfg.validate(), ll::ConfigError);
  cfg = {};
  cfg.step_bias = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ll::ConfigError);
  cfg = {};
  cfg.ambitus_degrees = 0;
  CHECK_THROWS_AS(cfg.validate(), ll::ConfigError);
}

TEST_CASE("generators are deterministic under seed") {
  ll::SyntheticConfig cfg;
  cfg.seed = 42;
  const auto a = ll::to_records(ll::gen_musical_corpus(cfg, 200));
  const auto b = ll::to_records(ll::gen_musical_corpus(cfg, 200));
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(ll::to_jsonl(a[i]) == ll::to_jsonl(b[i]));
  cfg.seed = 43;
  const auto c = ll::gen_musical_corpus(cfg, 200);
  CHECK(ll::gen_musical_corpus(ll::SyntheticConfig{}, 200) != c);
  CHECK(ll::gen_random_corpus({}, 100, 7) == ll::gen_random_corpus({}, 100, 7));
  CHECK(ll::gen_random_corpus({}, 100, 7) != ll::gen_random_corpus({}, 100, 8));
  // Prefix stability: item i depends only on (seed, i).
  const auto long_corpus = ll::gen_random_corpus({}, 150, 7);
  const auto short_corpus = ll::gen_random_corpus({}, 100, 7);
  CHECK(std::equal(short_corpus.begin(), short_corpus.end(), long_corpus.begin()));
}

TEST_CASE("synthetic pitch range is narrower than random") {
  const auto pitch_range = *ll::feature_index("P1_pitch_range");
  const auto mean_range = [&](const std::vector<ll::Melody>& corpus) {
    double sum = 0.0;
    for (const auto& m : corpus) sum += ll::extract_features(m).values[pitch_range];
    return sum / static_cast<double>(corpus.size());
  };
  CHECK(mean_range(ll::gen_musical_corpus({}, 1000)) < mean_range(ll::gen_random_corpus({}, 1000, 1)));
}

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
#include <numeric>
#include <random>

#include "doctest.h"
#include "latent_lens/analysis.hpp"
#include "latent_lens/corpus.hpp"

namespace ll = latent_lens;

namespace {

ll::LatentMatrix random_latents(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  ll::Rng rng(seed);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.05, 1.2);
  ll::LatentMatrix lm;
  lm.mus.resize(n, d);
  lm.sigmas.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      lm.mus(i, j) = z(rng);
      lm.sigmas(i, j) = u(rng);
    }
  }
  return lm;
}

ll::LatentMatrix permute_dims(const ll::LatentMatrix& lm, const std::vector<int>& perm) {
  ll::LatentMatrix out = lm;
  for (std::size_t j = 0; j < perm.size(); ++j) {
    out.mus.col(static_cast<Eigen::Index>(j)) = lm.mus.col(perm[j]);
    out.sigmas.col(static_cast<Eigen::Index>(j)) = lm.sigmas.col(perm[j]);
  }
  return out;
}

}  // namespace

TEST_CASE("order by sigma") {
  ll::LatentMatrix lm;
  lm.mus = Eigen::RowVector3d::Zero();
  lm.sigmas = Eigen::RowVector3d(1.0, 0.2, 0.9);
  CHECK(ll::order_by_sigma(lm) == std::vector<int>{1, 2, 0});
  CHECK(ll::order_by_sigma(lm, 0) == std::vector<int>{1, 2, 0});
  CHECK_THROWS_AS(ll::order_by_sigma(lm, 1), ll::ShapeError);
}

TEST_CASE("median statistics") {
  ll::LatentMatrix lm;
  lm.mus.resize(3, 2);
  lm.mus << -3.0, 0.1, 1.0, -0.2, 2.0, 0.3;
  lm.sigmas.resize(3, 2);
  lm.sigmas << 0.1, 0.9, 0.5, 1.0, 0.3, 1.1;
  CHECK(ll::median_sigma(lm) == std::vector<double>{0.3, 1.0});
  CHECK(ll::median_abs_mu(lm) == std::vector<double>{2.0, 0.2});
  const auto part = ll::partition_neurons(lm);
  CHECK(part.music == std::vector<int>{0});
  CHECK(part.noise == std::vector<int>{1});
}

TEST_CASE("activation counts") {
  ll::LatentMatrix lm;
  lm.mus = Eigen::RowVector4d(0.5, -0.05, -0.2, 0.0);
  lm.sigmas = Eigen::RowVector4d(0.2, 0.3, 0.4, 1.0);
  const auto part = ll::partition_neurons(lm);
  REQUIRE(part.music.size() == 3);
  const auto r = ll::activation_counts(lm, part);
  CHECK(r.music == std::vector<int>{2});
  CHECK(r.noise == std::vector<int>{0});
}

TEST_CASE("music set grows with the threshold") {
  const auto lm = random_latents(50, 16, 3);
  std::size_t prev = 0;
  for (double t = 0.0; t <= 1.3; t += 0.05) {
    const auto part = ll::partition_neurons(lm, t);
    CHECK(part.music.size() + part.noise.size() == 16);
    CHECK(part.music.size() >= prev);
    for (std::size_t k = 0; k < part.music.size(); ++k) CHECK(part.order[k] == part.music[k]);
    prev = part.music.size();
  }
}

TEST_CASE("partition is equivariant under dimension permutation") {
  const auto lm = random_latents(40, 12, 5);
  std::vector<int> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), ll::Rng(9));
  const auto permuted = permute_dims(lm, perm);
  const auto a = ll::partition_neurons(lm, 0.6);
  const auto b = ll::partition_neurons(permuted, 0.6);
  REQUIRE(a.order.size() == b.order.size());
  for (std::size_t k = 0; k < a.order.size(); ++k) CHECK(perm[static_cast<std::size_t>(b.order[k])] == a.order[k]);
  CHECK(a.music.size() == b.music.size());

  const auto pa = ll::mu_pearson_matrix(lm, a.order, 12);
  const auto pb = ll::mu_pearson_matrix(permuted, b.order, 12);
  CHECK(pa.isApprox(pb, 1e-12));
  CHECK(pa.diagonal().isOnes(1e-12));
}

TEST_CASE("neuron by feature phik layout") {
  const auto lm = random_latents(200, 6, 8);
  Eigen::MatrixXd features = Eigen::MatrixXd::Zero(200, static_cast<Eigen::Index>(ll::kFeatureCount));
  ll::Rng rng(1);
  std::normal_distribution<double> z;
  for (Eigen::Index i = 0; i < 200; ++i) {
    for (Eigen::Index f = 1; f < features.cols(); ++f) features(i, f) = z(rng);
  }
  features.col(7) = lm.mus.col(2);  // P1 copies dim 2
  const auto order = ll::order_by_sigma(lm);
  const auto ph = ll::neuron_feature_phik(lm, features, order, 4);
  CHECK(ph.rows() == static_cast<Eigen::Index>(ll::kFeatureCount));
  CHECK(ph.cols() == 4);
  CHECK(std::isnan(ph(0, 0)));  // constant feature
  const auto pos = std::find(order.begin(), order.end(), 2) - order.begin();
  if (pos < 4) CHECK(ph(7, pos) == doctest::Approx(1.0));

  const auto pitch = ll::block_max(ph, ll::FeatureBlock::kPitch);
  REQUIRE(pitch.size() == 4);
  for (Eigen::Index j = 0; j < 4; ++j) {
    double m = 0.0;
    for (Eigen::Index f = 7; f <= 12; ++f) m = std::max(m, ph(f, j));
    CHECK(pitch[static_cast<std::size_t>(j)] == m);
  }
}

TEST_CASE("identical corpora give identical histograms") {
  const auto lm = random_latents(300, 8, 11);
  const auto part = ll::partition_neurons(lm, 0.6);
  const auto rep = ll::compare_real_vs_random(lm, lm, part);
  REQUIRE(rep.neurons.size() == 4);
  for (const auto& h : rep.neurons) {
    CHECK(h.real.edges == h.random.edges);
    CHECK(h.real.counts == h.random.counts);
  }
  CHECK(rep.real_music_counts.counts == rep.random_music_counts.counts);
  CHECK(rep.median_real_music == rep.median_random_music);
  CHECK(rep.median_real_noise == rep.median_random_noise);
  CHECK_THROWS_AS(ll::compare_real_vs_random(lm, random_latents(5, 7, 1), part), ll::ShapeError);
}

TEST_CASE("encode_corpus skips sequences of the wrong length") {
  ll::ModelConfig cfg;
  cfg.embed_dim = 4;
  cfg.hidden_dim = 8;
  cfg.latent_dim = 3;
  const auto p = ll::init_params(cfg, 0);
  ll::SyntheticConfig sc;
  std::vector<ll::TokenSequence> seqs;
  for (const auto& m : ll::gen_musical_corpus(sc, 5)) seqs.push_back(ll::tokenize(m));
  ll::Melody four;
  four.bars = 4;
  seqs.insert(seqs.begin() + 2, ll::tokenize(four));
  const auto lm = ll::encode_corpus(p, seqs);
  CHECK(lm.rows() == 5);
  CHECK(lm.dims() == 3);
  CHECK(lm.skipped == std::vector<std::size_t>{2});
  CHECK(lm.ids == std::vector<std::size_t>{0, 1, 3, 4, 5});
  const auto e = ll::encode(p, seqs[3]);
  CHECK(lm.mus.row(2).transpose().isApprox(e.mu, 1e-12));
}

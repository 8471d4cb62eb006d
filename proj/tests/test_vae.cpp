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


#include <cmath>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "doctest.h"
#include "grad_check.hpp"
#include "latent_lens/checkpoint.hpp"
#include "latent_lens/corpus.hpp"
#include "latent_lens/vae.hpp"

namespace ll = latent_lens;
namespace fs = std::filesystem;

namespace {

ll::ModelConfig small_config() {
  ll::ModelConfig c;
  c.embed_dim = 8;
  c.hidden_dim = 16;
  c.latent_dim = 8;
  return c;
}

std::vector<ll::TokenSequence> synthetic_tokens(std::size_t n, std::uint64_t seed) {
  ll::SyntheticConfig cfg;
  cfg.seed = seed;
  std::vector<ll::TokenSequence> out;
  for (const auto& m : ll::gen_musical_corpus(cfg, n)) out.push_back(ll::tokenize(m));
  return out;
}

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("latent_lens_test_" + std::to_string(::getpid()) + "_" + name);
}

}  // namespace

TEST_CASE("config validation") {
  ll::ModelConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(ll::ModelConfig::ForBars(16).seq_len == 256);
  CHECK(ll::ModelConfig::ForBars(16).bars() == 16);
  c.vocab = 129;
  CHECK_THROWS_AS(c.validate(), ll::ConfigError);
  c = {};
  c.latent_dim = 0;
  CHECK_THROWS_AS(c.validate(), ll::ConfigError);
  ll::TrainConfig t;
  t.lr = 0.0;
  CHECK_THROWS_AS(t.validate(), ll::ConfigError);
  t = {};
  t.beta_max = -0.1;
  CHECK_THROWS_AS(t.validate(), ll::ConfigError);
}

TEST_CASE("beta schedule and held-out slice") {
  ll::TrainConfig t;
  CHECK(t.beta_at(0) == 0.0);
  CHECK(t.beta_at(1000) == doctest::Approx(0.1));
  CHECK(t.beta_at(2000) == doctest::Approx(0.2));
  CHECK(t.beta_at(50000) == doctest::Approx(0.2));
  t.beta_anneal_steps = 0;
  CHECK(t.beta_at(0) == doctest::Approx(0.2));
  CHECK(ll::held_out_count(19) == 0);
  CHECK(ll::held_out_count(20) == 1);
  CHECK(ll::held_out_count(2000) == 100);
}

TEST_CASE("init shapes, determinism and variance") {
  const ll::ModelConfig cfg;
  const auto a = ll::init_params(cfg, 7);
  const auto b = ll::init_params(cfg, 7);
  const auto c = ll::init_params(cfg, 8);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  CHECK(a.embedding.rows() == 64);
  CHECK(a.embedding.cols() == 130);
  CHECK(a.encoder.w_input.rows() == 384);
  CHECK(a.encoder.w_hidden.cols() == 128);
  CHECK(a.w_mu.rows() == 32);
  CHECK(a.w_init.cols() == 32);
  CHECK(a.decoder.w_input.cols() == 64 + 32);
  CHECK(a.w_out.rows() == 130);
  CHECK(a.all_finite());
  for (const auto& t : ll::tensors(a)) {
    const Eigen::Map<const Eigen::VectorXd> v(t.data, t.size());
    if (t.cols == 1) {
      CHECK(v.isZero());
      continue;
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(t.rows + t.cols));
    const double var = (v.array() - v.mean()).square().mean();
    CHECK_MESSAGE(std::abs(var - bound * bound / 3.0) < 0.1 * bound * bound / 3.0, t.name);
    CHECK(v.cwiseAbs().maxCoeff() <= bound);
  }
}

TEST_CASE("kl divergence closed form") {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(4), one = Eigen::VectorXd::Ones(4);
  CHECK(ll::kl_divergence(zero, one) == doctest::Approx(0.0));
  Eigen::VectorXd mu = zero;
  mu[0] = 1.0;
  CHECK(ll::kl_divergence(mu, one) == doctest::Approx(0.5));
  ll::Rng rng(5);
  std::normal_distribution<double> z;
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd m(6), s(6);
    for (int k = 0; k < 6; ++k) {
      m[k] = 2.0 * z(rng);
      s[k] = std::exp(z(rng));
    }
    CHECK(ll::kl_divergence(m, s) >= 0.0);
  }
}

TEST_CASE("encode is pure and validates length") {
  const auto p = ll::init_params(small_config(), 1);
  const auto seqs = synthetic_tokens(3, 2);
  const auto e1 = ll::encode(p, seqs[0]);
  const auto e2 = ll::encode(p, seqs[0]);
  CHECK(e1.mu.size() == 8);
  CHECK(e1.mu == e2.mu);
  CHECK(e1.sigma == e2.sigma);
  CHECK(e1.mu.allFinite());
  CHECK((e1.sigma.array() > 0.0).all());
  const auto batch = ll::encode_batch(p, seqs);
  for (int b = 0; b < 3; ++b) {
    const auto e = ll::encode(p, seqs[static_cast<std::size_t>(b)]);
    CHECK(batch.mu.col(b).isApprox(e.mu, 1e-12));
    CHECK(batch.sigma.col(b).isApprox(e.sigma, 1e-12));
  }
  ll::Melody sixteen;
  sixteen.bars = 16;
  CHECK_THROWS_AS(ll::encode(p, ll::tokenize(sixteen)), ll::ShapeError);
}

TEST_CASE("sample_latent") {
  ll::LatentEncoding enc{Eigen::VectorXd::LinSpaced(4, -1.0, 1.0), Eigen::VectorXd::Zero(4)};
  ll::Rng rng(3);
  CHECK(ll::sample_latent(enc, rng) == enc.mu);
  enc.sigma = Eigen::VectorXd::Constant(4, 0.5);
  const int n = 10000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(4);
  for (int i = 0; i < n; ++i) sum += ll::sample_latent(enc, rng);
  const Eigen::VectorXd mean = sum / n;
  for (int k = 0; k < 4; ++k) CHECK(std::abs(mean[k] - enc.mu[k]) < 4.0 * 0.5 / std::sqrt(double(n)));
  ll::Rng r1(9), r2(9);
  CHECK(ll::sample_latent(enc, r1) == ll::sample_latent(enc, r2));
}

TEST_CASE("decode respects the token invariants") {
  const auto p = ll::init_params(small_config(), 4);
  ll::Rng rng(1);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd v(8);
    for (auto& x : v) x = 3.0 * z(rng);
    const auto g1 = ll::decode(p, v, ll::DecodeOptions::Greedy());
    const auto g2 = ll::decode(p, v, ll::DecodeOptions::Greedy());
    CHECK(g1 == g2);
    CHECK(g1.size() == 32);
    CHECK(g1[0].kind() != ll::Token::Kind::kHold);
    ll::Rng a(trial), b(trial);
    const auto s1 = ll::decode(p, v, ll::DecodeOptions::Sample(1.0), &a);
    const auto s2 = ll::decode(p, v, ll::DecodeOptions::Sample(1.0), &b);
    CHECK(s1 == s2);
    CHECK(s1[0].kind() != ll::Token::Kind::kHold);
  }
}

TEST_CASE("loss reductions") {
  const auto p = ll::init_params(small_config(), 2);
  const auto batch = synthetic_tokens(4, 3);
  ll::Rng rng(0);
  std::normal_distribution<double> z;
  Eigen::MatrixXd eps(8, 4);
  for (auto& x : eps.reshaped()) x = z(rng);
  const auto tok = ll::elbo_loss_with_noise(p, batch, 0.3, eps, nullptr, ll::ReconReduction::kPerToken);
  const auto seq = ll::elbo_loss_with_noise(p, batch, 0.3, eps, nullptr, ll::ReconReduction::kPerSequence);
  CHECK(tok.recon_ce == doctest::Approx(seq.recon_ce));
  CHECK(tok.kl == doctest::Approx(seq.kl));
  CHECK(tok.loss == doctest::Approx(tok.recon_ce + 0.3 * tok.kl));
  CHECK(seq.loss == doctest::Approx(32.0 * seq.recon_ce + 0.3 * seq.kl));
  // An untrained model is close to uniform over the vocabulary.
  CHECK(tok.recon_ce == doctest::Approx(std::log(130.0)).epsilon(0.1));
  CHECK(tok.kl >= 0.0);
  ll::Rng r1(4), r2(4);
  CHECK(ll::elbo_loss(p, batch, 0.2, r1).loss == ll::elbo_loss(p, batch, 0.2, r2).loss);
}

TEST_CASE("gradients match central finite differences") {
  ll::Rng rng(12);
  std::normal_distribution<double> z;
  for (const auto reduction : {ll::ReconReduction::kPerToken, ll::ReconReduction::kPerSequence}) {
    const auto p = ll::init_params(small_config(), 21);
    const auto batch = synthetic_tokens(3, 5);
    Eigen::MatrixXd eps(8, 3);
    for (auto& x : eps.reshaped()) x = z(rng);
    const auto errors = gradcheck::compare(p, batch, 0.7, eps, reduction);
    for (const auto& e : errors) CHECK_MESSAGE(e.rel_error < 1e-4, e.name << " " << e.rel_error);
  }
}

TEST_CASE("training is deterministic and makes progress") {
  const auto corpus = synthetic_tokens(64, 8);
  ll::TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch = 16;
  cfg.lr = 3e-3;
  const auto p = ll::init_params(small_config(), 0);
  std::vector<int> seen;
  const auto a = ll::train(p, corpus, cfg, {}, [&](const ll::EpochStats& s) { seen.push_back(s.epoch); });
  const auto b = ll::train(p, corpus, cfg);
  CHECK(seen == std::vector<int>{1, 2, 3, 4});
  CHECK(a.params == b.params);
  REQUIRE(a.history.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(a.history[i].loss == b.history[i].loss);
  CHECK(a.history.back().recon_ce < a.history.front().recon_ce);
  CHECK(a.history.back().median_sigma.size() == 8);
  CHECK(a.state.epochs_done == 4);
  CHECK(a.state.step == 4 * 4);  // 61 training items (3 held out) in batches of 16

  // Resuming continues epoch and step numbering.
  cfg.epochs = 2;
  const auto r = ll::train(a.params, corpus, cfg, a.state);
  REQUIRE(r.history.size() == 2);
  CHECK(r.history[0].epoch == 5);
  CHECK(r.state.epochs_done == 6);
  CHECK(r.state.step == 6 * 4);
}

TEST_CASE("divergence raises a training error with the last good parameters") {
  const auto corpus = synthetic_tokens(32, 1);
  ll::TrainConfig cfg;
  cfg.epochs = 3;
  cfg.lr = 1e200;
  try {
    ll::train(ll::init_params(small_config(), 0), corpus, cfg);
    FAIL("expected divergence");
  } catch (const ll::TrainingError& e) {
    CHECK(e.last_good().all_finite());
    CHECK(e.batch_index() >= 0);
  }
}

TEST_CASE("checkpoint round trip and errors") {
  const auto p = ll::init_params(small_config(), 6);
  const auto path = temp_path("ckpt.bin");
  ll::save_checkpoint(p, path, ll::TrainState{3, 77});
  const auto back = ll::load_checkpoint(path);
  CHECK(back.params == p);
  CHECK(back.state == ll::TrainState{3, 77});
  CHECK(ll::load_checkpoint(path, small_config()).params == p);

  ll::ModelConfig wider = small_config();
  wider.latent_dim = 16;
  CHECK_THROWS_AS(ll::load_checkpoint(path, wider), ll::ShapeError);

  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("BADMAGIC", 8);
  }
  CHECK_THROWS_AS(ll::load_checkpoint(path), ll::CheckpointError);

  ll::save_checkpoint(p, path);
  fs::resize_file(path, fs::file_size(path) - 8);
  CHECK_THROWS_AS(ll::load_checkpoint(path), ll::CheckpointError);
  CHECK_THROWS_AS(ll::load_checkpoint(temp_path("missing.bin")), ll::CheckpointError);
  fs::remove(path);
}

TEST_CASE("default-size checkpoint rejects a wider latent space") {
  const auto path = temp_path("d32.bin");
  ll::save_checkpoint(ll::init_params(ll::ModelConfig{}, 0), path);
  ll::ModelConfig d64;
  d64.latent_dim = 64;
  CHECK_THROWS_AS(ll::load_checkpoint(path, d64), ll::ShapeError);
  fs::remove(path);
}

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

// Flat recurrent sequence VAE over 130-symbol melody tokens.
//
//   tokens -> embedding -> GRU encoder -> (mu, logvar) heads -> z
//   z -> tanh affine -> initial decoder state
//   decoder GRU input at step t: [embedding(token t-1); z]   (zeros at t = 0)
//   decoder state -> affine -> logits over the vocabulary
//
// Gradients are computed by hand (backpropagation through time) in double
// precision; see elbo_loss_with_noise.

#ifndef LATENT_LENS_VAE_HPP_
#define LATENT_LENS_VAE_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "latent_lens/corpus.hpp"
#include "latent_lens/error.hpp"
#include "latent_lens/melody.hpp"

namespace latent_lens {

inline constexpr std::string_view kCellType = "gru";

struct ModelConfig {
  int vocab = kVocabSize;
  int embed_dim = 64;
  int hidden_dim = 128;
  int latent_dim = 32;
  int seq_len = 32;

  static ModelConfig ForBars(int bars) {
    ModelConfig c;
    c.seq_len = GridSpec::steps_for_bars(bars);
    return c;
  }
  int bars() const { return seq_len / GridSpec::kStepsPerBar; }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Gates stacked row-wise as [reset; update; candidate]:
//   r = sigmoid(Wx_r x + Wh_r h + b_r)
//   u = sigmoid(Wx_u x + Wh_u h + b_u)
//   n = tanh(Wx_n x + Wh_n (r * h) + b_n)
//   h' = u * h + (1 - u) * n
struct GruCell {
  Eigen::MatrixXd w_input;   // 3H x in
  Eigen::MatrixXd w_hidden;  // 3H x H
  Eigen::VectorXd bias;      // 3H
};

struct Params {
  ModelConfig config;
  Eigen::MatrixXd embedding;  // embed_dim x vocab, one column per token
  GruCell encoder;            // in = embed_dim
  Eigen::MatrixXd w_mu;       // d x H
  Eigen::VectorXd b_mu;
  Eigen::MatrixXd w_logvar;   // d x H
  Eigen::VectorXd b_logvar;
  Eigen::MatrixXd w_init;     // H x d
  Eigen::VectorXd b_init;
  GruCell decoder;            // in = embed_dim + d
  Eigen::MatrixXd w_out;      // vocab x H
  Eigen::VectorXd b_out;

  static Params Zeros(const ModelConfig& config);
  Eigen::Index parameter_count() const;
  bool all_finite() const;
  bool operator==(const Params& other) const;
};

struct TensorRef {
  std::string_view name;
  double* data;
  Eigen::Index rows;
  Eigen::Index cols;
  Eigen::Index size() const { return rows * cols; }
};

struct ConstTensorRef {
  std::string_view name;
  const double* data;
  Eigen::Index rows;
  Eigen::Index cols;
  Eigen::Index size() const { return rows * cols; }
};

// Every tensor of the model, in a fixed order (the checkpoint order).
std::vector<TensorRef> tensors(Params& p);
std::vector<ConstTensorRef> tensors(const Params& p);

// Glorot-uniform weights, zero biases.
Params init_params(const ModelConfig& cfg, std::uint64_t seed);

struct LatentEncoding {
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma;  // exp(logvar / 2)
};

// Column b of mu/sigma encodes sequence b.
struct BatchEncoding {
  Eigen::MatrixXd mu;     // d x n
  Eigen::MatrixXd sigma;  // d x n
};

// Throws ShapeError when a sequence length differs from config.seq_len.
LatentEncoding encode(const Params& p, const TokenSequence& seq);
BatchEncoding encode_batch(const Params& p, std::span<const TokenSequence> seqs);

Eigen::VectorXd sample_latent(const LatentEncoding& enc, Rng& rng);

struct DecodeOptions {
  bool greedy = true;
  double temperature = 1.0;

  static DecodeOptions Greedy() { return {}; }
  static DecodeOptions Sample(double temperature) { return {false, temperature}; }
};

// Autoregressive generation of config.seq_len tokens. Hold is never emitted at
// step 0. rng is only used when sampling.
TokenSequence decode(const Params& p, const Eigen::VectorXd& z, const DecodeOptions& opts,
                     Rng* rng = nullptr);

// How the reconstruction term enters the optimized loss. recon_ce is always
// reported as the per-token mean.
enum class ReconReduction {
  kPerToken,     // loss = recon_ce + beta * kl
  kPerSequence,  // loss = seq_len * recon_ce + beta * kl
};

struct LossParts {
  double loss = 0.0;
  double recon_ce = 0.0;  // mean cross-entropy per token
  double kl = 0.0;        // mean over the batch of the summed per-dim KL
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// ELBO with reparameterized z = mu + sigma * eps, eps drawn from rng.
LossParts elbo_loss(const Params& p, std::span<const TokenSequence> batch, double beta, Rng& rng,
                    ReconReduction reduction = ReconReduction::kPerSequence);

// Same loss with explicit noise eps (d x batch). When grad is non-null it is
// overwritten with dloss/dparams. Throws NumericalError on a non-finite loss.
LossParts elbo_loss_with_noise(const Params& p, std::span<const TokenSequence> batch, double beta,
                               const Eigen::MatrixXd& eps, Params* grad,
                               ReconReduction reduction = ReconReduction::kPerSequence);

// Closed-form KL(N(mu, sigma^2) || N(0, 1)) summed over dimensions.
double kl_divergence(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma);

struct TrainConfig {
  double lr = 1e-3;
  int batch = 32;
  int epochs = 100;
  double beta_max = 0.2;
  int beta_anneal_steps = 2000;
  double grad_clip_norm = 1.0;
  std::uint64_t seed = 0;
  ReconReduction reduction = ReconReduction::kPerSequence;

  void validate() const;
  // Linear ramp from 0 to beta_max over beta_anneal_steps optimizer steps.
  double beta_at(std::int64_t step) const;
};

struct EpochStats {
  int epoch = 0;  // 1-based, continues across resumes
  double loss = 0.0;
  double recon_ce = 0.0;
  double kl = 0.0;
  std::vector<double> median_sigma;  // per latent dim, on the held-out slice
};

struct TrainState {
  int epochs_done = 0;
  std::int64_t step = 0;
  bool operator==(const TrainState&) const = default;
};

struct TrainResult {
  Params params;
  std::vector<EpochStats> history;
  TrainState state;
};

// Loss went non-finite. Carries the parameters from before the failing step.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, Params last_good, std::vector<EpochStats> history,
                TrainState state, int batch_index)
      : Error(what),
        last_good_(std::move(last_good)),
        history_(std::move(history)),
        state_(state),
        batch_index_(batch_index) {}
  const Params& last_good() const { return last_good_; }
  const std::vector<EpochStats>& history() const { return history_; }
  const TrainState& state() const { return state_; }
  int batch_index() const { return batch_index_; }

 private:
  Params last_good_;
  std::vector<EpochStats> history_;
  TrainState state_;
  int batch_index_;
};

// Number of trailing corpus items used as the held-out slice for sigma
// medians (they are not trained on). Zero for corpora under 20 items, in
// which case the training set is used.
std::size_t held_out_count(std::size_t corpus_size);

using EpochCallback = std::function<void(const EpochStats&)>;

// Adam with global-norm gradient clipping. Epoch e shuffles with a stream
// derived from (cfg.seed, e), so a resumed run sees the same batches as an
// uninterrupted one (optimizer moments restart from zero).
TrainResult train(Params p, std::span<const TokenSequence> corpus, const TrainConfig& cfg,
                  TrainState start = {}, const EpochCallback& on_epoch = {});

}  // namespace latent_lens

#endif  // LATENT_LENS_VAE_HPP_

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

#include "latent_lens/vae.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace latent_lens {

using Eigen::ArrayXXd;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void ModelConfig::validate() const {
  if (vocab != kVocabSize) throw ConfigError("vocab must be 130");
  if (embed_dim < 1 || hidden_dim < 1 || latent_dim < 1) {
    throw ConfigError("model dimensions must be >= 1");
  }
  if (seq_len < GridSpec::kStepsPerBar || seq_len % GridSpec::kStepsPerBar != 0) {
    throw ConfigError("seq_len must be a positive multiple of 16");
  }
}

namespace {

GruCell zero_cell(Index in, Index hidden) {
  return {MatrixXd::Zero(3 * hidden, in), MatrixXd::Zero(3 * hidden, hidden), VectorXd::Zero(3 * hidden)};
}

template <class P, class Ref>
std::vector<Ref> collect(P& p) {
  auto m = [](std::string_view name, auto& t) { return Ref{name, t.data(), t.rows(), t.cols()}; };
  return {m("embedding", p.embedding),
          m("encoder.w_input", p.encoder.w_input),
          m("encoder.w_hidden", p.encoder.w_hidden),
          m("encoder.bias", p.encoder.bias),
          m("w_mu", p.w_mu),
          m("b_mu", p.b_mu),
          m("w_logvar", p.w_logvar),
          m("b_logvar", p.b_logvar),
          m("w_init", p.w_init),
          m("b_init", p.b_init),
          m("decoder.w_input", p.decoder.w_input),
          m("decoder.w_hidden", p.decoder.w_hidden),
          m("decoder.bias", p.decoder.bias),
          m("w_out", p.w_out),
          m("b_out", p.b_out)};
}

inline ArrayXXd sigmoid(const ArrayXXd& x) { return 1.0 / (1.0 + (-x).exp()); }

struct StepCache {
  MatrixXd h_prev, r, u, n;
};

// gx = W_input x + bias, precomputed by the caller.
MatrixXd gru_forward(const GruCell& cell, const MatrixXd& gx, const MatrixXd& h_prev, StepCache* cache) {
  const Index H = h_prev.rows();
  MatrixXd ru = gx.topRows(2 * H);
  ru.noalias() += cell.w_hidden.topRows(2 * H) * h_prev;
  const ArrayXXd gates = sigmoid(ru.array());
  const ArrayXXd r = gates.topRows(H);
  const ArrayXXd u = gates.bottomRows(H);
  const MatrixXd rh = (r * h_prev.array()).matrix();
  MatrixXd an = gx.bottomRows(H);
  an.noalias() += cell.w_hidden.bottomRows(H) * rh;
  const ArrayXXd n = an.array().tanh();
  MatrixXd h = (u * h_prev.array() + (1.0 - u) * n).matrix();
  if (cache) {
    cache->h_prev = h_prev;
    cache->r = r.matrix();
    cache->u = u.matrix();
    cache->n = n.matrix();
  }
  return h;
}

// Given dL/dh', returns dL/dgx and writes dL/dh into dh_prev; accumulates the
// hidden-weight gradient.
MatrixXd gru_backward(const GruCell& cell, const StepCache& c, const MatrixXd& dh, MatrixXd& dh_prev,
                      MatrixXd& dw_hidden) {
  const Index H = dh.rows();
  const ArrayXXd r = c.r.array(), u = c.u.array(), n = c.n.array(), hp = c.h_prev.array();
  const ArrayXXd dha = dh.array();
  MatrixXd dgx(3 * H, dh.cols());
  dgx.bottomRows(H) = (dha * (1.0 - u) * (1.0 - n * n)).matrix();
  const ArrayXXd du = dha * (hp - n);
  dh_prev = (dha * u).matrix();

  const MatrixXd rh = (r * hp).matrix();
  dw_hidden.bottomRows(H).noalias() += dgx.bottomRows(H) * rh.transpose();
  const MatrixXd drh = cell.w_hidden.bottomRows(H).transpose() * dgx.bottomRows(H);
  dh_prev.array() += drh.array() * r;

  dgx.topRows(H) = (drh.array() * hp * r * (1.0 - r)).matrix();
  dgx.middleRows(H, H) = (du * u * (1.0 - u)).matrix();
  dw_hidden.topRows(2 * H).noalias() += dgx.topRows(2 * H) * c.h_prev.transpose();
  dh_prev.noalias() += cell.w_hidden.topRows(2 * H).transpose() * dgx.topRows(2 * H);
  return dgx;
}

// codes[t * B + b]
std::vector<int> gather_codes(const ModelConfig& cfg, std::span<const TokenSequence> batch) {
  const auto T = static_cast<std::size_t>(cfg.seq_len);
  std::vector<int> codes(T * batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (batch[b].size() != T) {
      throw ShapeError("sequence " + std::to_string(b) + " has length " + std::to_string(batch[b].size()) +
                       ", model expects " + std::to_string(T));
    }
    for (std::size_t t = 0; t < T; ++t) codes[t * batch.size() + b] = batch[b][t].code();
  }
  return codes;
}

MatrixXd embed(const MatrixXd& embedding, const int* codes, Index B) {
  MatrixXd x(embedding.rows(), B);
  for (Index b = 0; b < B; ++b) x.col(b) = embedding.col(codes[b]);
  return x;
}

struct EncoderPass {
  std::vector<StepCache> steps;
  MatrixXd h_last;
  MatrixXd mu, logvar;
};

EncoderPass run_encoder(const Params& p, const std::vector<int>& codes, Index B, bool keep_cache) {
  const Index T = p.config.seq_len;
  const Index H = p.config.hidden_dim;
  EncoderPass out;
  if (keep_cache) out.steps.resize(static_cast<std::size_t>(T));
  MatrixXd h = MatrixXd::Zero(H, B);
  for (Index t = 0; t < T; ++t) {
    const MatrixXd x = embed(p.embedding, codes.data() + t * B, B);
    MatrixXd gx = p.encoder.w_input * x;
    gx.colwise() += p.encoder.bias;
    h = gru_forward(p.encoder, gx, h, keep_cache ? &out.steps[static_cast<std::size_t>(t)] : nullptr);
  }
  out.mu = p.w_mu * h;
  out.mu.colwise() += p.b_mu;
  out.logvar = p.w_logvar * h;
  out.logvar.colwise() += p.b_logvar;
  out.h_last = std::move(h);
  return out;
}

double recon_weight(ReconReduction r, int seq_len) {
  return r == ReconReduction::kPerSequence ? static_cast<double>(seq_len) : 1.0;
}

}  // namespace

Params Params::Zeros(const ModelConfig& c) {
  c.validate();
  const Index E = c.embed_dim, H = c.hidden_dim, D = c.latent_dim, V = c.vocab;
  Params p;
  p.config = c;
  p.embedding = MatrixXd::Zero(E, V);
  p.encoder = zero_cell(E, H);
  p.w_mu = MatrixXd::Zero(D, H);
  p.b_mu = VectorXd::Zero(D);
  p.w_logvar = MatrixXd::Zero(D, H);
  p.b_logvar = VectorXd::Zero(D);
  p.w_init = MatrixXd::Zero(H, D);
  p.b_init = VectorXd::Zero(H);
  p.decoder = zero_cell(E + D, H);
  p.w_out = MatrixXd::Zero(V, H);
  p.b_out = VectorXd::Zero(V);
  return p;
}

std::vector<TensorRef> tensors(Params& p) { return collect<Params, TensorRef>(p); }
std::vector<ConstTensorRef> tensors(const Params& p) { return collect<const Params, ConstTensorRef>(p); }

Index Params::parameter_count() const {
  Index n = 0;
  for (const auto& t : tensors(*this)) n += t.size();
  return n;
}

bool Params::all_finite() const {
  for (const auto& t : tensors(*this)) {
    if (!Eigen::Map<const VectorXd>(t.data, t.size()).allFinite()) return false;
  }
  return true;
}

bool Params::operator==(const Params& other) const {
  if (!(config == other.config)) return false;
  const auto a = tensors(*this);
  const auto b = tensors(other);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].rows != b[i].rows || a[i].cols != b[i].cols) return false;
    if (!std::equal(a[i].data, a[i].data + a[i].size(), b[i].data)) return false;
  }
  return true;
}

Params init_params(const ModelConfig& cfg, std::uint64_t seed) {
  Params p = Params::Zeros(cfg);
  Rng rng(seed);
  for (auto& t : tensors(p)) {
    if (t.cols == 1) continue;  // biases stay zero
    const double a = std::sqrt(6.0 / static_cast<double>(t.rows + t.cols));
    std::uniform_real_distribution<double> dist(-a, a);
    for (Index i = 0; i < t.size(); ++i) t.data[i] = dist(rng);
  }
  return p;
}

LatentEncoding encode(const Params& p, const TokenSequence& seq) {
  const BatchEncoding b = encode_batch(p, std::span<const TokenSequence>(&seq, 1));
  return {b.mu.col(0), b.sigma.col(0)};
}

BatchEncoding encode_batch(const Params& p, std::span<const TokenSequence> seqs) {
  const auto codes = gather_codes(p.config, seqs);
  const auto B = static_cast<Index>(seqs.size());
  EncoderPass enc = run_encoder(p, codes, B, false);
  return {std::move(enc.mu), (0.5 * enc.logvar.array()).exp().matrix()};
}

Eigen::VectorXd sample_latent(const LatentEncoding& enc, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd z(enc.mu.size());
  for (Index i = 0; i < z.size(); ++i) z[i] = enc.mu[i] + enc.sigma[i] * normal(rng);
  return z;
}

TokenSequence decode(const Params& p, const Eigen::VectorXd& z, const DecodeOptions& opts, Rng* rng) {
  const auto& c = p.config;
  if (z.size() != c.latent_dim) throw ShapeError("latent vector has wrong dimension");
  if (!opts.greedy && rng == nullptr) throw ConfigError("sampling decode needs an rng");
  if (!opts.greedy && !(opts.temperature > 0.0)) throw ConfigError("temperature must be positive");
  const Index E = c.embed_dim;
  MatrixXd h = (p.w_init * z + p.b_init).array().tanh().matrix();
  VectorXd gz = p.decoder.w_input.rightCols(c.latent_dim) * z + p.decoder.bias;
  std::vector<Token> out;
  out.reserve(static_cast<std::size_t>(c.seq_len));
  VectorXd x_embed = VectorXd::Zero(E);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < c.seq_len; ++t) {
    MatrixXd gx = gz + p.decoder.w_input.leftCols(E) * x_embed;
    h = gru_forward(p.decoder, gx, h, nullptr);
    VectorXd logits = p.w_out * h.col(0) + p.b_out;
    if (t == 0) logits[kHoldCode] = -std::numeric_limits<double>::infinity();
    int code = 0;
    if (opts.greedy) {
      logits.maxCoeff(&code);
    } else {
      const VectorXd scaled = logits / opts.temperature;
      const VectorXd prob = (scaled.array() - scaled.maxCoeff()).exp().matrix();
      double u = unit(*rng) * prob.sum();
      code = static_cast<int>(prob.size()) - 1;
      for (Index k = 0; k < prob.size(); ++k) {
        u -= prob[k];
        if (u < 0.0) {
          code = static_cast<int>(k);
          break;
        }
      }
      if (t == 0 && code == kHoldCode) code = kRestStartCode;
    }
    out.push_back(Token::FromCode(code));
    x_embed = p.embedding.col(code);
  }
  return TokenSequence(std::move(out), c.bars());
}

double kl_divergence(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma) {
  const Eigen::ArrayXd s2 = sigma.array().square();
  return 0.5 * (mu.array().square() + s2 - 1.0 - s2.log()).sum();
}

LossParts elbo_loss(const Params& p, std::span<const TokenSequence> batch, double beta, Rng& rng,
                    ReconReduction reduction) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd eps(p.config.latent_dim, static_cast<Index>(batch.size()));
  for (Index j = 0; j < eps.cols(); ++j) {
    for (Index i = 0; i < eps.rows(); ++i) eps(i, j) = normal(rng);
  }
  return elbo_loss_with_noise(p, batch, beta, eps, nullptr, reduction);
}

LossParts elbo_loss_with_noise(const Params& p, std::span<const TokenSequence> batch, double beta,
                               const Eigen::MatrixXd& eps, Params* grad, ReconReduction reduction) {
  if (batch.empty()) throw ShapeError("empty batch");
  const auto& c = p.config;
  const Index B = static_cast<Index>(batch.size());
  const Index T = c.seq_len, H = c.hidden_dim, E = c.embed_dim, D = c.latent_dim;
  if (eps.rows() != D || eps.cols() != B) throw ShapeError("noise matrix must be latent_dim x batch");
  const bool backward = grad != nullptr;
  const auto codes = gather_codes(c, batch);

  // Encoder and latent sample.
  EncoderPass enc = run_encoder(p, codes, B, backward);
  const MatrixXd sigma = (0.5 * enc.logvar.array()).exp().matrix();
  const MatrixXd z = (enc.mu.array() + sigma.array() * eps.array()).matrix();

  // Decoder with teacher forcing.
  const MatrixXd s0 = ((p.w_init * z).colwise() + p.b_init).array().tanh().matrix();
  MatrixXd gz = p.decoder.w_input.rightCols(D) * z;
  gz.colwise() += p.decoder.bias;
  std::vector<StepCache> dec_steps(backward ? static_cast<std::size_t>(T) : 0);
  MatrixXd states(H, T * B);
  MatrixXd h = s0;
  for (Index t = 0; t < T; ++t) {
    MatrixXd gx = gz;
    if (t > 0) gx.noalias() += p.decoder.w_input.leftCols(E) * embed(p.embedding, codes.data() + (t - 1) * B, B);
    h = gru_forward(p.decoder, gx, h, backward ? &dec_steps[static_cast<std::size_t>(t)] : nullptr);
    states.middleCols(t * B, B) = h;
  }

  MatrixXd logits = p.w_out * states;
  logits.colwise() += p.b_out;
  // Column-wise softmax; logits becomes the probability matrix.
  double ce_sum = 0.0;
  for (Index col = 0; col < T * B; ++col) {
    auto l = logits.col(col);
    const double m = l.maxCoeff();
    l.array() = (l.array() - m).exp();
    const double s = l.sum();
    const int target = codes[static_cast<std::size_t>(col)];
    ce_sum += -(std::log(l[target] / s));
    l /= s;
  }

  LossParts parts;
  parts.recon_ce = ce_sum / static_cast<double>(T * B);
  const ArrayXXd var = sigma.array().square();
  parts.kl = 0.5 * (enc.mu.array().square() + var - 1.0 - enc.logvar.array()).sum() / static_cast<double>(B);
  const double rw = recon_weight(reduction, c.seq_len);
  parts.loss = rw * parts.recon_ce + beta * parts.kl;
  if (!std::isfinite(parts.loss)) throw NumericalError("non-finite ELBO loss");
  if (!backward) return parts;

  Params& g = *grad;
  g = Params::Zeros(c);

  // Output layer.
  MatrixXd& dlogits = logits;
  for (Index col = 0; col < T * B; ++col) dlogits(codes[static_cast<std::size_t>(col)], col) -= 1.0;
  dlogits *= rw / static_cast<double>(T * B);
  g.w_out.noalias() = dlogits * states.transpose();
  g.b_out = dlogits.rowwise().sum();
  const MatrixXd dstates = p.w_out.transpose() * dlogits;

  // Decoder BPTT.
  MatrixXd dz = MatrixXd::Zero(D, B);
  MatrixXd dgz = MatrixXd::Zero(3 * H, B);
  MatrixXd dh = MatrixXd::Zero(H, B);
  MatrixXd dh_prev;
  for (Index t = T - 1; t >= 0; --t) {
    dh += dstates.middleCols(t * B, B);
    const MatrixXd dgx = gru_backward(p.decoder, dec_steps[static_cast<std::size_t>(t)], dh, dh_prev,
                                      g.decoder.w_hidden);
    dgz += dgx;
    if (t > 0) {
      const int* step_codes = codes.data() + (t - 1) * B;
      g.decoder.w_input.leftCols(E).noalias() += dgx * embed(p.embedding, step_codes, B).transpose();
      const MatrixXd dx = p.decoder.w_input.leftCols(E).transpose() * dgx;
      for (Index b = 0; b < B; ++b) g.embedding.col(step_codes[b]) += dx.col(b);
    }
    dh = dh_prev;
  }
  g.decoder.w_input.rightCols(D).noalias() = dgz * z.transpose();
  g.decoder.bias = dgz.rowwise().sum();
  dz.noalias() += p.decoder.w_input.rightCols(D).transpose() * dgz;
  const MatrixXd da0 = (dh.array() * (1.0 - s0.array().square())).matrix();
  g.w_init.noalias() = da0 * z.transpose();
  g.b_init = da0.rowwise().sum();
  dz.noalias() += p.w_init.transpose() * da0;

  // Reparameterization and KL.
  const double kl_scale = beta / static_cast<double>(B);
  const MatrixXd dmu = dz + kl_scale * enc.mu;
  const MatrixXd dlogvar =
      (0.5 * dz.array() * eps.array() * sigma.array() + 0.5 * kl_scale * (var - 1.0)).matrix();

  // Heads.
  g.w_mu.noalias() = dmu * enc.h_last.transpose();
  g.b_mu = dmu.rowwise().sum();
  g.w_logvar.noalias() = dlogvar * enc.h_last.transpose();
  g.b_logvar = dlogvar.rowwise().sum();
  dh.noalias() = p.w_mu.transpose() * dmu;
  dh.noalias() += p.w_logvar.transpose() * dlogvar;

  // Encoder BPTT.
  for (Index t = T - 1; t >= 0; --t) {
    const MatrixXd dgx = gru_backward(p.encoder, enc.steps[static_cast<std::size_t>(t)], dh, dh_prev,
                                      g.encoder.w_hidden);
    const int* step_codes = codes.data() + t * B;
    g.encoder.w_input.noalias() += dgx * embed(p.embedding, step_codes, B).transpose();
    g.encoder.bias += dgx.rowwise().sum();
    const MatrixXd dx = p.encoder.w_input.transpose() * dgx;
    for (Index b = 0; b < B; ++b) g.embedding.col(step_codes[b]) += dx.col(b);
    dh = dh_prev;
  }
  return parts;
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (batch < 1) throw ConfigError("batch must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(beta_max >= 0.0)) throw ConfigError("beta_max must be >= 0");
  if (beta_anneal_steps < 0) throw ConfigError("beta_anneal_steps must be >= 0");
  if (!(grad_clip_norm > 0.0)) throw ConfigError("grad_clip_norm must be positive");
}

double TrainConfig::beta_at(std::int64_t step) const {
  if (beta_anneal_steps == 0) return beta_max;
  const double frac = static_cast<double>(step) / static_cast<double>(beta_anneal_steps);
  return beta_max * std::min(1.0, frac);
}

std::size_t held_out_count(std::size_t corpus_size) {
  if (corpus_size < 20) return 0;
  return std::max<std::size_t>(1, corpus_size / 20);
}

namespace {

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2), v.end());
  const double hi = v[n / 2];
  if (n % 2 == 1) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2)));
}

std::vector<double> median_sigma(const Params& p, std::span<const TokenSequence> seqs) {
  const BatchEncoding enc = encode_batch(p, seqs);
  std::vector<double> out(static_cast<std::size_t>(enc.sigma.rows()));
  for (Index i = 0; i < enc.sigma.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(enc.sigma.cols()));
    for (Index j = 0; j < enc.sigma.cols(); ++j) row[static_cast<std::size_t>(j)] = enc.sigma(i, j);
    out[static_cast<std::size_t>(i)] = median_of(std::move(row));
  }
  return out;
}

class Adam {
 public:
  explicit Adam(Index n, double lr) : m_(VectorXd::Zero(n)), v_(VectorXd::Zero(n)), lr_(lr) {}

  void step(Params& p, const Params& g, double clip_norm) {
    double sq = 0.0;
    for (const auto& t : tensors(g)) sq += Eigen::Map<const VectorXd>(t.data, t.size()).squaredNorm();
    const double norm = std::sqrt(sq);
    const double scale = norm > clip_norm ? clip_norm / norm : 1.0;
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    const auto gt = tensors(g);
    auto pt = tensors(p);
    Index off = 0;
    for (std::size_t k = 0; k < pt.size(); ++k) {
      const Index n = pt[k].size();
      Eigen::Map<VectorXd> w(pt[k].data, n);
      const auto gk = Eigen::Map<const VectorXd>(gt[k].data, n) * scale;
      auto m = m_.segment(off, n);
      auto v = v_.segment(off, n);
      m = kBeta1 * m + (1.0 - kBeta1) * gk;
      v = kBeta2 * v + (1.0 - kBeta2) * gk.cwiseProduct(gk);
      w.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + kEps);
      off += n;
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  VectorXd m_, v_;
  double lr_;
  std::int64_t t_ = 0;
};

}  // namespace

TrainResult train(Params p, std::span<const TokenSequence> corpus, const TrainConfig& cfg, TrainState start,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (corpus.empty()) throw ConfigError("training corpus is empty");
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (static_cast<int>(corpus[i].size()) != p.config.seq_len) {
      throw ShapeError("corpus item " + std::to_string(i) + " does not match model seq_len");
    }
  }
  const std::size_t held = held_out_count(corpus.size());
  const std::size_t n_train = corpus.size() - held;
  const auto train_set = corpus.first(n_train);
  const auto held_set = held > 0 ? corpus.last(held) : corpus;

  TrainResult result{std::move(p), {}, start};
  Adam adam(result.params.parameter_count(), cfg.lr);
  std::vector<std::size_t> order(n_train);
  std::vector<TokenSequence> batch;
  Params grad = Params::Zeros(result.params.config);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index D = result.params.config.latent_dim;

  for (int e = 0; e < cfg.epochs; ++e) {
    const int epoch = result.state.epochs_done + 1;
    Rng rng = stream_rng(cfg.seed, static_cast<std::uint64_t>(epoch));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    EpochStats stats;
    stats.epoch = epoch;
    int n_batches = 0;
    for (std::size_t start_i = 0; start_i < n_train; start_i += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t stop = std::min(n_train, start_i + static_cast<std::size_t>(cfg.batch));
      batch.clear();
      for (std::size_t k = start_i; k < stop; ++k) batch.push_back(train_set[order[k]]);
      MatrixXd eps(D, static_cast<Index>(batch.size()));
      for (Index j = 0; j < eps.cols(); ++j) {
        for (Index i = 0; i < D; ++i) eps(i, j) = normal(rng);
      }
      const double beta = cfg.beta_at(result.state.step);
      LossParts parts;
      try {
        parts = elbo_loss_with_noise(result.params, batch, beta, eps, &grad, cfg.reduction);
        if (!grad.all_finite()) throw NumericalError("non-finite gradient");
      } catch (const NumericalError& err) {
        throw TrainingError(std::string(err.what()) + " in epoch " + std::to_string(epoch) + ", batch " +
                                std::to_string(n_batches),
                            result.params, result.history, result.state, n_batches);
      }
      adam.step(result.params, grad, cfg.grad_clip_norm);
      ++result.state.step;
      stats.loss += parts.loss;
      stats.recon_ce += parts.recon_ce;
      stats.kl += parts.kl;
      ++n_batches;
    }
    if (n_batches > 0) {
      stats.loss /= n_batches;
      stats.recon_ce /= n_batches;
      stats.kl /= n_batches;
    }
    stats.median_sigma = median_sigma(result.params, held_set);
    result.state.epochs_done = epoch;
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return result;
}

}  // namespace latent_lens

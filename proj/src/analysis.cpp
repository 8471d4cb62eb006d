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

#include "latent_lens/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "latent_lens/parallel.hpp"

namespace latent_lens {
namespace {

constexpr std::size_t kEncodeChunk = 256;

std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index c) {
  return {m.col(c).data(), m.col(c).data() + m.rows()};
}

std::vector<double> counts_as_double(const std::vector<int>& v) { return {v.begin(), v.end()}; }

Histogram integer_histogram(const std::vector<int>& counts, int max_value) {
  return histogram(counts_as_double(counts), max_value + 1, -0.5, max_value + 0.5);
}

}  // namespace

LatentMatrix encode_corpus(const Params& p, const std::vector<TokenSequence>& corpus) {
  LatentMatrix lm;
  std::vector<TokenSequence> usable;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (static_cast<int>(corpus[i].size()) == p.config.seq_len) {
      lm.ids.push_back(i);
      usable.push_back(corpus[i]);
    } else {
      lm.skipped.push_back(i);
    }
  }
  const auto n = static_cast<Eigen::Index>(usable.size());
  const Eigen::Index d = p.config.latent_dim;
  lm.mus.resize(n, d);
  lm.sigmas.resize(n, d);
  const std::size_t chunks = (usable.size() + kEncodeChunk - 1) / kEncodeChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t start = c * kEncodeChunk;
    const std::size_t len = std::min(kEncodeChunk, usable.size() - start);
    const BatchEncoding enc = encode_batch(p, std::span<const TokenSequence>(usable).subspan(start, len));
    const auto row = static_cast<Eigen::Index>(start);
    lm.mus.middleRows(row, static_cast<Eigen::Index>(len)) = enc.mu.transpose();
    lm.sigmas.middleRows(row, static_cast<Eigen::Index>(len)) = enc.sigma.transpose();
  });
  return lm;
}

std::vector<double> median_sigma(const LatentMatrix& lm) {
  std::vector<double> out(static_cast<std::size_t>(lm.dims()));
  for (Eigen::Index i = 0; i < lm.dims(); ++i) out[static_cast<std::size_t>(i)] = median(column(lm.sigmas, i));
  return out;
}

std::vector<double> median_abs_mu(const LatentMatrix& lm) {
  std::vector<double> out(static_cast<std::size_t>(lm.dims()));
  const Eigen::MatrixXd a = lm.mus.cwiseAbs();
  for (Eigen::Index i = 0; i < lm.dims(); ++i) out[static_cast<std::size_t>(i)] = median(column(a, i));
  return out;
}

namespace {

std::vector<int> argsort_stable(const std::vector<double>& key) {
  std::vector<int> order(key.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return key[static_cast<std::size_t>(a)] < key[static_cast<std::size_t>(b)];
  });
  return order;
}

}  // namespace

std::vector<int> order_by_sigma(const LatentMatrix& lm) {
  if (lm.rows() < 1) throw ShapeError("order_by_sigma needs at least one encoded melody");
  return argsort_stable(median_sigma(lm));
}

std::vector<int> order_by_sigma(const LatentMatrix& lm, Eigen::Index row) {
  if (row < 0 || row >= lm.rows()) throw ShapeError("row out of range");
  const Eigen::RowVectorXd r = lm.sigmas.row(row);
  return argsort_stable(std::vector<double>(r.data(), r.data() + r.size()));
}

NeuronPartition partition_neurons(const LatentMatrix& lm, double sigma_threshold) {
  NeuronPartition part;
  part.sigma_threshold = sigma_threshold;
  const auto med = median_sigma(lm);
  part.order = argsort_stable(med);
  for (int dim : part.order) {
    (med[static_cast<std::size_t>(dim)] < sigma_threshold ? part.music : part.noise).push_back(dim);
  }
  return part;
}

CentralValueStats central_value_stats(const LatentMatrix& lm, const NeuronPartition& partition) {
  CentralValueStats s;
  s.order = partition.order;
  for (int dim : partition.order) {
    s.sigma.push_back(boxplot_summary(column(lm.sigmas, dim)));
    s.mu.push_back(boxplot_summary(column(lm.mus, dim)));
  }
  return s;
}

int default_shown_dims(const LatentMatrix& lm) { return static_cast<int>(std::min<Eigen::Index>(lm.dims(), 100)); }

Eigen::MatrixXd mu_pearson_matrix(const LatentMatrix& lm, const std::vector<int>& order, int shown) {
  if (lm.rows() < 3) throw ShapeError("mu_pearson_matrix needs at least 3 melodies");
  shown = std::min<int>(shown, static_cast<int>(order.size()));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXd out(shown, shown);
  for (int a = 0; a < shown; ++a) {
    const auto x = column(lm.mus, order[static_cast<std::size_t>(a)]);
    for (int b = a; b < shown; ++b) {
      const auto y = column(lm.mus, order[static_cast<std::size_t>(b)]);
      double r = nan;
      try {
        r = pearson(x, y);
      } catch (const DegenerateError&) {
      }
      out(a, b) = out(b, a) = r;
    }
  }
  return out;
}

Eigen::MatrixXd neuron_feature_phik(const LatentMatrix& lm, const Eigen::MatrixXd& features,
                                    const std::vector<int>& order, int shown, const PhikConfig& cfg) {
  if (features.rows() != lm.rows()) throw ShapeError("feature matrix and latent matrix row counts differ");
  shown = std::min<int>(shown, static_cast<int>(order.size()));
  Eigen::MatrixXd mus(lm.rows(), shown);
  for (int k = 0; k < shown; ++k) mus.col(k) = lm.mus.col(order[static_cast<std::size_t>(k)]);
  return phik_matrix(features, mus, cfg);
}

ScatterSeries neuron_feature_scatter(const LatentMatrix& lm, const Eigen::MatrixXd& features, int neuron,
                                     std::size_t feature, double lowess_frac) {
  if (features.rows() != lm.rows()) throw ShapeError("feature matrix and latent matrix row counts differ");
  if (neuron < 0 || neuron >= lm.dims()) throw ShapeError("neuron index out of range");
  if (feature >= static_cast<std::size_t>(features.cols())) throw ShapeError("feature index out of range");
  ScatterSeries s;
  s.neuron = neuron;
  s.feature = feature;
  s.feature_values = column(features, static_cast<Eigen::Index>(feature));
  s.activations = column(lm.mus, neuron);
  s.fit = lowess(s.feature_values, s.activations, lowess_frac);
  return s;
}

ActivationReport activation_counts(const LatentMatrix& lm, const NeuronPartition& partition, double threshold) {
  ActivationReport r;
  r.threshold = threshold;
  r.music.resize(static_cast<std::size_t>(lm.rows()));
  r.noise.resize(static_cast<std::size_t>(lm.rows()));
  for (Eigen::Index i = 0; i < lm.rows(); ++i) {
    int m = 0, z = 0;
    for (int dim : partition.music) m += std::abs(lm.mus(i, dim)) > threshold;
    for (int dim : partition.noise) z += std::abs(lm.mus(i, dim)) > threshold;
    r.music[static_cast<std::size_t>(i)] = m;
    r.noise[static_cast<std::size_t>(i)] = z;
  }
  return r;
}

RealVsRandomReport compare_real_vs_random(const LatentMatrix& real, const LatentMatrix& random,
                                          const NeuronPartition& partition, int top, int n_bins, double threshold) {
  if (real.dims() != random.dims()) throw ShapeError("latent dimensions differ between corpora");
  if (real.rows() < 1 || random.rows() < 1) throw ShapeError("both corpora must be non-empty");
  RealVsRandomReport rep;
  const int shown = std::min<int>(top, static_cast<int>(partition.order.size()));
  for (int k = 0; k < shown; ++k) {
    const int dim = partition.order[static_cast<std::size_t>(k)];
    const auto a = column(real.mus, dim);
    const auto b = column(random.mus, dim);
    const double lo = std::min(*std::min_element(a.begin(), a.end()), *std::min_element(b.begin(), b.end()));
    const double hi = std::max(*std::max_element(a.begin(), a.end()), *std::max_element(b.begin(), b.end()));
    rep.neurons.push_back({dim, histogram(a, n_bins, lo, hi), histogram(b, n_bins, lo, hi)});
  }
  rep.real_activations = activation_counts(real, partition, threshold);
  rep.random_activations = activation_counts(random, partition, threshold);
  const int n_music = static_cast<int>(partition.music.size());
  const int n_noise = static_cast<int>(partition.noise.size());
  rep.real_music_counts = integer_histogram(rep.real_activations.music, n_music);
  rep.random_music_counts = integer_histogram(rep.random_activations.music, n_music);
  rep.real_noise_counts = integer_histogram(rep.real_activations.noise, n_noise);
  rep.random_noise_counts = integer_histogram(rep.random_activations.noise, n_noise);
  rep.median_real_music = median(counts_as_double(rep.real_activations.music));
  rep.median_random_music = median(counts_as_double(rep.random_activations.music));
  rep.median_real_noise = median(counts_as_double(rep.real_activations.noise));
  rep.median_random_noise = median(counts_as_double(rep.random_activations.noise));
  return rep;
}

RealVsRandomReport compare_real_vs_random(const Params& p, const std::vector<TokenSequence>& real,
                                          const std::vector<TokenSequence>& random,
                                          const NeuronPartition& partition, int top, int n_bins, double threshold) {
  return compare_real_vs_random(encode_corpus(p, real), encode_corpus(p, random), partition, top, n_bins,
                                threshold);
}

std::vector<double> block_max(const Eigen::MatrixXd& feature_phik, FeatureBlock block) {
  std::vector<double> out(static_cast<std::size_t>(feature_phik.cols()), 0.0);
  for (Eigen::Index j = 0; j < feature_phik.cols(); ++j) {
    for (Eigen::Index f = 0; f < feature_phik.rows(); ++f) {
      if (feature_block(static_cast<std::size_t>(f)) != block) continue;
      const double v = feature_phik(f, j);
      if (!std::isnan(v)) out[static_cast<std::size_t>(j)] = std::max(out[static_cast<std::size_t>(j)], v);
    }
  }
  return out;
}

}  // namespace latent_lens

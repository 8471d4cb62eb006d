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

// Latent-space experiments on a trained model: sigma ordering, the
// music/noise neuron partition, central-value statistics, neuron-feature
// correlations and activation counts.

#ifndef LATENT_LENS_ANALYSIS_HPP_
#define LATENT_LENS_ANALYSIS_HPP_

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "latent_lens/features.hpp"
#include "latent_lens/stats.hpp"
#include "latent_lens/vae.hpp"

namespace latent_lens {

// Row i holds the encoding of corpus item ids[i].
struct LatentMatrix {
  Eigen::MatrixXd mus;     // n x d
  Eigen::MatrixXd sigmas;  // n x d
  std::vector<std::size_t> ids;
  std::vector<std::size_t> skipped;  // corpus items whose length did not match the model

  Eigen::Index rows() const { return mus.rows(); }
  Eigen::Index dims() const { return mus.cols(); }
};

// Items whose length differs from the model's seq_len are recorded in
// `skipped` rather than aborting the run.
LatentMatrix encode_corpus(const Params& p, const std::vector<TokenSequence>& corpus);

std::vector<double> median_sigma(const LatentMatrix& lm);
std::vector<double> median_abs_mu(const LatentMatrix& lm);

// Dims by ascending corpus-median sigma; ties by index.
std::vector<int> order_by_sigma(const LatentMatrix& lm);
// Dims by ascending sigma of a single row (per-melody ordering).
std::vector<int> order_by_sigma(const LatentMatrix& lm, Eigen::Index row);

struct NeuronPartition {
  std::vector<int> order;  // ascending median sigma
  std::vector<int> music;  // median sigma < threshold, in `order` order
  std::vector<int> noise;
  double sigma_threshold = 0.9;
};

inline constexpr double kDefaultSigmaThreshold = 0.9;
inline constexpr double kDefaultActivationThreshold = 0.1;

NeuronPartition partition_neurons(const LatentMatrix& lm, double sigma_threshold = kDefaultSigmaThreshold);

struct CentralValueStats {
  std::vector<int> order;
  std::vector<BoxplotSummary> sigma;  // one per dim, in partition order
  std::vector<BoxplotSummary> mu;
};

CentralValueStats central_value_stats(const LatentMatrix& lm, const NeuronPartition& partition);

// min(d, 100) by default.
int default_shown_dims(const LatentMatrix& lm);

// Pearson correlation between mu columns, over the first `shown` dims in
// sigma order. NaN where a column is constant.
Eigen::MatrixXd mu_pearson_matrix(const LatentMatrix& lm, const std::vector<int>& order, int shown);

// 20 x shown matrix of phik(feature, mu column) with columns in sigma order.
Eigen::MatrixXd neuron_feature_phik(const LatentMatrix& lm, const Eigen::MatrixXd& features,
                                    const std::vector<int>& order, int shown, const PhikConfig& cfg = {});

struct ScatterSeries {
  int neuron = 0;
  std::size_t feature = 0;
  std::vector<double> feature_values;
  std::vector<double> activations;
  std::vector<double> fit;  // LOWESS of activation on feature value
};

ScatterSeries neuron_feature_scatter(const LatentMatrix& lm, const Eigen::MatrixXd& features, int neuron,
                                     std::size_t feature, double lowess_frac = 0.3);

struct ActivationReport {
  std::vector<int> music;  // per melody: #music dims with |mu| > threshold
  std::vector<int> noise;
  double threshold = kDefaultActivationThreshold;
};

ActivationReport activation_counts(const LatentMatrix& lm, const NeuronPartition& partition,
                                   double threshold = kDefaultActivationThreshold);

struct NeuronHistogram {
  int neuron = 0;
  Histogram real;
  Histogram random;  // same edges as `real`
};

struct RealVsRandomReport {
  std::vector<NeuronHistogram> neurons;  // first `top` dims in sigma order
  ActivationReport real_activations;
  ActivationReport random_activations;
  Histogram real_music_counts, random_music_counts;  // integer bins 0..|music|
  Histogram real_noise_counts, random_noise_counts;  // integer bins 0..|noise|
  double median_real_music = 0.0, median_random_music = 0.0;
  double median_real_noise = 0.0, median_random_noise = 0.0;
};

RealVsRandomReport compare_real_vs_random(const LatentMatrix& real, const LatentMatrix& random,
                                          const NeuronPartition& partition, int top = 4, int n_bins = 30,
                                          double threshold = kDefaultActivationThreshold);
RealVsRandomReport compare_real_vs_random(const Params& p, const std::vector<TokenSequence>& real,
                                          const std::vector<TokenSequence>& random,
                                          const NeuronPartition& partition, int top = 4, int n_bins = 30,
                                          double threshold = kDefaultActivationThreshold);

// Strongest phik per neuron over one feature block (NaN entries ignored).
std::vector<double> block_max(const Eigen::MatrixXd& feature_phik, FeatureBlock block);

}  // namespace latent_lens

#endif  // LATENT_LENS_ANALYSIS_HPP_

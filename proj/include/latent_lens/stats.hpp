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

// Correlation and smoothing statistics.
//
// phik follows the construction of the Python phik package: the Pearson
// chi-square of a binned 2-D histogram is matched against the chi-square of a
// standard bivariate normal with correlation rho, binned with the same
// marginal frequencies, and the matching rho is the coefficient.

#ifndef LATENT_LENS_STATS_HPP_
#define LATENT_LENS_STATS_HPP_

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace latent_lens {

// Sample Pearson correlation. Throws ShapeError for unequal or < 2 lengths,
// DegenerateError when either series is constant.
double pearson(std::span<const double> x, std::span<const double> y);

enum class Binning { kEqualWidth, kEqualFrequency };

struct PhikConfig {
  int n_bins = 10;
  Binning binning = Binning::kEqualWidth;
  double bvn_quadrature_tol = 1e-6;
  double rho_tol = 1e-4;
  // Subtract the expected chi-square of an independent table, (r-1)(c-1),
  // before inverting (phik's noise pedestal).
  bool noise_correction = true;
  // Occupied marginal bins holding fewer than sqrt(min_expected_count * n)
  // samples are merged into their smaller adjacent neighbour, so every cell of
  // the independence table expects at least this many counts. 0 disables.
  double min_expected_count = 5.0;

  void validate() const;
};

struct ContingencyTable {
  Eigen::MatrixXd counts;  // r x c, non-negative integers
  // Value range covered by each kept (non-empty) row / column bin.
  std::vector<double> row_lower, row_upper;
  std::vector<double> col_lower, col_upper;

  double total() const { return counts.sum(); }
};

// Bins x into rows and y into columns over their observed ranges. Empty
// marginal bins are dropped and sparse ones merged (see min_expected_count).
// Throws DegenerateError when fewer than two non-empty bins remain on either
// axis (e.g. a constant series).
ContingencyTable contingency(std::span<const double> x, std::span<const double> y, const PhikConfig& cfg);

// Pearson chi-square against the independence table built from the margins.
// Cells with zero expected count are skipped.
double chi2(const Eigen::MatrixXd& counts);
inline double chi2(const ContingencyTable& t) { return chi2(t.counts); }

// Probability mass of a standard bivariate normal with correlation rho over
// each rectangle [row_edges[i], row_edges[i+1]) x [col_edges[j], col_edges[j+1]).
// Edges may start/end at +-infinity. Throws DomainError for |rho| >= 1.
Eigen::MatrixXd bvn_cell_probs(double rho, std::span<const double> row_edges, std::span<const double> col_edges,
                               double tol = 1e-6);

// Chi-square of the expected table n * bvn_cell_probs(rho, ...) against
// independence.
double bvn_chi2(double rho, std::span<const double> row_edges, std::span<const double> col_edges, double n,
                double tol = 1e-6);

// Standard-normal quantile edges reproducing the table's marginal frequencies.
std::vector<double> normal_edges_from_margin(const Eigen::VectorXd& margin);

double phik_from_table(const ContingencyTable& table, const PhikConfig& cfg);
double phik(std::span<const double> x, std::span<const double> y, const PhikConfig& cfg = {});

// Entry (i, j) = phik(A.col(i), B.col(j)); NaN marks a degenerate pair.
Eigen::MatrixXd phik_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const PhikConfig& cfg = {});

// Robust locally weighted linear regression (tricube kernel, bisquare
// robustness weights). Returns the fitted value at every x, in input order.
std::vector<double> lowess(std::span<const double> x, std::span<const double> y, double frac = 0.3, int iters = 2);

struct BoxplotSummary {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double lower_whisker = 0.0;  // smallest value >= q1 - 1.5 IQR
  double upper_whisker = 0.0;  // largest value <= q3 + 1.5 IQR
  std::size_t outliers = 0;
};

// Linear-interpolation quantile of sorted data (numpy's default).
double quantile_sorted(std::span<const double> sorted, double q);
double median(std::span<const double> values);

BoxplotSummary boxplot_summary(std::span<const double> values);

struct Histogram {
  std::vector<double> edges;  // n_bins + 1
  std::vector<long> counts;   // right-open bins, last bin closed
};

// Bins over [min, max] of the data.
Histogram histogram(std::span<const double> values, int n_bins);
// Bins over an explicit range; values outside it are not counted.
Histogram histogram(std::span<const double> values, int n_bins, double lo, double hi);

}  // namespace latent_lens

#endif  // LATENT_LENS_STATS_HPP_

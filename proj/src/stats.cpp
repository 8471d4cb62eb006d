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

#include "latent_lens/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <numeric>

#include "latent_lens/error.hpp"
#include "latent_lens/parallel.hpp"

namespace latent_lens {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Integration limit standing in for +-infinity; the normal tail beyond is < 1e-18.
constexpr double kTail = 9.0;

double norm_cdf(double t) {
  if (t == kInf) return 1.0;
  if (t == -kInf) return 0.0;
  return 0.5 * std::erfc(-t / std::sqrt(2.0));
}

double norm_pdf(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); }

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("series lengths differ");
  if (x.size() < 2) throw ShapeError("need at least two observations");
}

// Adaptive Simpson with absolute tolerance.
template <class F>
double simpson_rec(const F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                   int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol) {
  if (!(b > a)) return 0.0;
  // Start from a few panels so narrow features are not stepped over.
  constexpr int kPanels = 8;
  const double h = (b - a) / kPanels;
  double sum = 0.0;
  for (int k = 0; k < kPanels; ++k) {
    const double lo = a + k * h, hi = (k + 1 == kPanels) ? b : lo + h;
    const double flo = f(lo), fhi = f(hi), fmid = f(0.5 * (lo + hi));
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    sum += simpson_rec(f, lo, hi, flo, fmid, fhi, whole, tol / kPanels, 40);
  }
  return sum;
}

std::vector<int> bin_equal_width(std::span<const double> v, int n_bins, std::vector<double>& lower,
                                 std::vector<double>& upper) {
  const auto [mn_it, mx_it] = std::minmax_element(v.begin(), v.end());
  const double mn = *mn_it, mx = *mx_it;
  if (!(mx > mn)) throw DegenerateError("constant series cannot be binned");
  const double w = (mx - mn) / n_bins;
  std::vector<int> bins(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    bins[i] = std::min(n_bins - 1, static_cast<int>((v[i] - mn) / w));
  }
  lower.resize(static_cast<std::size_t>(n_bins));
  upper.resize(static_cast<std::size_t>(n_bins));
  for (int b = 0; b < n_bins; ++b) {
    lower[static_cast<std::size_t>(b)] = mn + b * w;
    upper[static_cast<std::size_t>(b)] = b + 1 == n_bins ? mx : mn + (b + 1) * w;
  }
  return bins;
}

// Rank-based: the k-th smallest value (ties by position) goes to bin
// floor(k * n_bins / n), so bin sizes differ by at most one.
std::vector<int> bin_equal_frequency(std::span<const double> v, int n_bins, std::vector<double>& lower,
                                     std::vector<double>& upper) {
  const auto [mn_it, mx_it] = std::minmax_element(v.begin(), v.end());
  if (!(*mx_it > *mn_it)) throw DegenerateError("constant series cannot be binned");
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<int> bins(n);
  lower.assign(static_cast<std::size_t>(n_bins), kInf);
  upper.assign(static_cast<std::size_t>(n_bins), -kInf);
  for (std::size_t k = 0; k < n; ++k) {
    const int b = static_cast<int>(k * static_cast<std::size_t>(n_bins) / n);
    const std::size_t i = order[k];
    bins[i] = b;
    lower[static_cast<std::size_t>(b)] = std::min(lower[static_cast<std::size_t>(b)], v[i]);
    upper[static_cast<std::size_t>(b)] = std::max(upper[static_cast<std::size_t>(b)], v[i]);
  }
  return bins;
}

// Drops empty bins, then folds any bin below min_count into its smaller
// neighbour. Returns the kept bins as [first, last] ranges of original bins
// and rewrites `bins` to index them.
std::vector<std::pair<int, int>> merge_sparse_bins(std::vector<int>& bins, int n_bins, double min_count) {
  std::vector<double> count(static_cast<std::size_t>(n_bins), 0.0);
  for (int b : bins) count[static_cast<std::size_t>(b)] += 1.0;
  std::vector<std::pair<int, int>> groups;
  std::vector<double> sizes;
  for (int b = 0; b < n_bins; ++b) {
    if (count[static_cast<std::size_t>(b)] > 0.0) {
      groups.emplace_back(b, b);
      sizes.push_back(count[static_cast<std::size_t>(b)]);
    }
  }
  while (groups.size() > 2) {
    const auto smallest = std::min_element(sizes.begin(), sizes.end()) - sizes.begin();
    if (sizes[static_cast<std::size_t>(smallest)] >= min_count) break;
    const auto k = static_cast<std::size_t>(smallest);
    std::size_t into;
    if (k == 0) {
      into = 1;
    } else if (k + 1 == groups.size()) {
      into = k - 1;
    } else {
      into = sizes[k - 1] <= sizes[k + 1] ? k - 1 : k + 1;
    }
    groups[into] = {std::min(groups[into].first, groups[k].first), std::max(groups[into].second, groups[k].second)};
    sizes[into] += sizes[k];
    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(k));
    sizes.erase(sizes.begin() + static_cast<std::ptrdiff_t>(k));
  }
  std::vector<int> remap(static_cast<std::size_t>(n_bins), -1);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (int b = groups[g].first; b <= groups[g].second; ++b) remap[static_cast<std::size_t>(b)] = static_cast<int>(g);
  }
  for (int& b : bins) b = remap[static_cast<std::size_t>(b)];
  return groups;
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw DegenerateError("correlation undefined for a constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

void PhikConfig::validate() const {
  if (n_bins < 2) throw ConfigError("n_bins must be >= 2");
  if (!(bvn_quadrature_tol > 0.0) || !(rho_tol > 0.0) || rho_tol >= 1.0) {
    throw ConfigError("phik tolerances must be positive");
  }
  if (!(min_expected_count >= 0.0)) throw ConfigError("min_expected_count must be >= 0");
}

ContingencyTable contingency(std::span<const double> x, std::span<const double> y, const PhikConfig& cfg) {
  check_pair(x, y);
  cfg.validate();
  std::vector<double> xl, xu, yl, yu;
  const bool eq = cfg.binning == Binning::kEqualFrequency;
  auto bx = eq ? bin_equal_frequency(x, cfg.n_bins, xl, xu) : bin_equal_width(x, cfg.n_bins, xl, xu);
  auto by = eq ? bin_equal_frequency(y, cfg.n_bins, yl, yu) : bin_equal_width(y, cfg.n_bins, yl, yu);
  const double min_count = std::sqrt(cfg.min_expected_count * static_cast<double>(x.size()));
  const auto rows = merge_sparse_bins(bx, cfg.n_bins, min_count);
  const auto cols = merge_sparse_bins(by, cfg.n_bins, min_count);
  if (rows.size() < 2 || cols.size() < 2) throw DegenerateError("fewer than two occupied bins on an axis");

  ContingencyTable t;
  t.counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < x.size(); ++i) t.counts(bx[i], by[i]) += 1.0;
  for (const auto& [first, last] : rows) {
    t.row_lower.push_back(xl[static_cast<std::size_t>(first)]);
    t.row_upper.push_back(xu[static_cast<std::size_t>(last)]);
  }
  for (const auto& [first, last] : cols) {
    t.col_lower.push_back(yl[static_cast<std::size_t>(first)]);
    t.col_upper.push_back(yu[static_cast<std::size_t>(last)]);
  }
  return t;
}

double chi2(const Eigen::MatrixXd& counts) {
  const double n = counts.sum();
  if (!(n > 0.0)) return 0.0;
  const Eigen::VectorXd rs = counts.rowwise().sum();
  const Eigen::RowVectorXd cs = counts.colwise().sum();
  double total = 0.0;
  for (Eigen::Index i = 0; i < counts.rows(); ++i) {
    for (Eigen::Index j = 0; j < counts.cols(); ++j) {
      const double e = rs[i] * cs[j] / n;
      if (e <= 0.0) continue;
      const double d = counts(i, j) - e;
      total += d * d / e;
    }
  }
  return total;
}

Eigen::MatrixXd bvn_cell_probs(double rho, std::span<const double> row_edges, std::span<const double> col_edges,
                               double tol) {
  if (!(std::abs(rho) < 1.0)) throw DomainError("bivariate normal needs |rho| < 1");
  if (row_edges.size() < 2 || col_edges.size() < 2) throw ShapeError("need at least two edges per axis");
  for (std::size_t i = 1; i < row_edges.size(); ++i) {
    if (!(row_edges[i] > row_edges[i - 1])) throw DomainError("row edges must be strictly increasing");
  }
  for (std::size_t j = 1; j < col_edges.size(); ++j) {
    if (!(col_edges[j] > col_edges[j - 1])) throw DomainError("column edges must be strictly increasing");
  }
  const auto r = static_cast<Eigen::Index>(row_edges.size() - 1);
  const auto c = static_cast<Eigen::Index>(col_edges.size() - 1);
  const double s = std::sqrt(1.0 - rho * rho);
  Eigen::MatrixXd p(r, c);

  // P(a <= X < b, Y < e) = int_a^b phi(x) Phi((e - rho x) / s) dx; cells are
  // differences over consecutive column edges, so each row sums exactly to
  // its marginal mass.
  for (Eigen::Index i = 0; i < r; ++i) {
    const double a = row_edges[static_cast<std::size_t>(i)];
    const double b = row_edges[static_cast<std::size_t>(i) + 1];
    const double mass = norm_cdf(b) - norm_cdf(a);
    const double lo = std::max(a, -kTail), hi = std::min(b, kTail);
    double prev = 0.0;
    for (Eigen::Index j = 0; j < c; ++j) {
      const double e = col_edges[static_cast<std::size_t>(j) + 1];
      double below;
      if (j + 1 == c || e == kInf) {
        below = mass;
      } else if (e == -kInf) {
        below = 0.0;
      } else {
        below = adaptive_simpson([&](double x) { return norm_pdf(x) * norm_cdf((e - rho * x) / s); }, lo, hi, tol);
      }
      p(i, j) = below - prev;
      prev = below;
    }
  }
  return p;
}

double bvn_chi2(double rho, std::span<const double> row_edges, std::span<const double> col_edges, double n,
                double tol) {
  const Eigen::MatrixXd p = bvn_cell_probs(rho, row_edges, col_edges, tol);
  const Eigen::VectorXd rs = p.rowwise().sum();
  const Eigen::RowVectorXd cs = p.colwise().sum();
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const double e = rs[i] * cs[j];
      if (e <= 0.0) continue;
      const double d = p(i, j) - e;
      total += d * d / e;
    }
  }
  return n * total;
}

std::vector<double> normal_edges_from_margin(const Eigen::VectorXd& margin) {
  const double n = margin.sum();
  const boost::math::normal_distribution<double> normal;
  std::vector<double> edges{-kInf};
  double cum = 0.0;
  for (Eigen::Index k = 0; k + 1 < margin.size(); ++k) {
    cum += margin[k];
    edges.push_back(boost::math::quantile(normal, cum / n));
  }
  edges.push_back(kInf);
  return edges;
}

double phik_from_table(const ContingencyTable& table, const PhikConfig& cfg) {
  cfg.validate();
  const double n = table.total();
  const double observed = chi2(table);
  const double pedestal =
      cfg.noise_correction ? static_cast<double>((table.counts.rows() - 1) * (table.counts.cols() - 1)) : 0.0;
  if (observed <= pedestal) return 0.0;

  const auto row_edges = normal_edges_from_margin(table.counts.rowwise().sum());
  const auto col_edges = normal_edges_from_margin(table.counts.colwise().sum().transpose());
  auto model = [&](double rho) {
    return bvn_chi2(rho, row_edges, col_edges, n, cfg.bvn_quadrature_tol) + pedestal;
  };

  double lo = 0.0, hi = 1.0 - cfg.rho_tol;
  if (observed >= model(hi)) return 1.0;
  // model() is increasing in rho on [0, 1).
  while (hi - lo > cfg.rho_tol) {
    const double mid = 0.5 * (lo + hi);
    (model(mid) < observed ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double phik(std::span<const double> x, std::span<const double> y, const PhikConfig& cfg) {
  return phik_from_table(contingency(x, y, cfg), cfg);
}

Eigen::MatrixXd phik_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const PhikConfig& cfg) {
  if (a.rows() != b.rows()) throw ShapeError("phik_matrix inputs need equal row counts");
  cfg.validate();
  const Eigen::Index p = a.cols(), q = b.cols();
  Eigen::MatrixXd out(p, q);
  parallel_for(static_cast<std::size_t>(p * q), [&](std::size_t k) {
    const Eigen::Index i = static_cast<Eigen::Index>(k) / q, j = static_cast<Eigen::Index>(k) % q;
    const std::span<const double> x(a.col(i).data(), static_cast<std::size_t>(a.rows()));
    const std::span<const double> y(b.col(j).data(), static_cast<std::size_t>(b.rows()));
    try {
      out(i, j) = phik(x, y, cfg);
    } catch (const DegenerateError&) {
      out(i, j) = std::numeric_limits<double>::quiet_NaN();
    }
  });
  return out;
}

std::vector<double> lowess(std::span<const double> x, std::span<const double> y, double frac, int iters) {
  check_pair(x, y);
  const std::size_t n = x.size();
  if (n < 5) throw ShapeError("lowess needs at least 5 points");
  if (!(frac > 0.0 && frac <= 1.0)) throw DomainError("lowess frac must lie in (0, 1]");
  if (iters < 0) throw DomainError("lowess iters must be >= 0");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x[order[i]];
    ys[i] = y[order[i]];
  }
  const std::size_t k = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(frac * static_cast<double>(n))), 2, n);

  std::vector<double> fit(n), robust(n, 1.0), w(n);
  for (int pass = 0; pass <= iters; ++pass) {
    std::size_t lo = 0;
    for (std::size_t i = 0; i < n; ++i) {
      // Slide the k-point window to the k nearest neighbours of xs[i].
      while (lo + k < n && xs[i] - xs[lo] > xs[lo + k] - xs[i]) ++lo;
      const double h = std::max(xs[i] - xs[lo], xs[lo + k - 1] - xs[i]);
      double sw = 0.0, sx = 0.0, sy = 0.0;
      for (std::size_t j = lo; j < lo + k; ++j) {
        double wt = 1.0;
        if (h > 0.0) {
          const double u = std::abs(xs[j] - xs[i]) / h;
          wt = u < 1.0 ? std::pow(1.0 - u * u * u, 3) : 0.0;
        }
        w[j] = wt * robust[j];
        sw += w[j];
        sx += w[j] * xs[j];
        sy += w[j] * ys[j];
      }
      if (!(sw > 0.0)) {
        fit[i] = ys[i];
        continue;
      }
      const double mx = sx / sw, my = sy / sw;
      double sxx = 0.0, sxy = 0.0;
      for (std::size_t j = lo; j < lo + k; ++j) {
        sxx += w[j] * (xs[j] - mx) * (xs[j] - mx);
        sxy += w[j] * (xs[j] - mx) * (ys[j] - my);
      }
      const double range = xs[lo + k - 1] - xs[lo];
      const double slope = sxx > 1e-12 * (range * range) * sw ? sxy / sxx : 0.0;
      fit[i] = my + slope * (xs[i] - mx);
    }
    if (pass == iters) break;

    std::vector<double> resid(n);
    for (std::size_t i = 0; i < n; ++i) resid[i] = std::abs(ys[i] - fit[i]);
    const double s = median(resid);
    if (!(s > 0.0)) break;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = resid[i] / (6.0 * s);
      robust[i] = u < 1.0 ? (1.0 - u * u) * (1.0 - u * u) : 0.0;
    }
  }

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[order[i]] = fit[i];
  return out;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ShapeError("quantile of empty data");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

double median(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, 0.5);
}

BoxplotSummary boxplot_summary(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  if (v.empty()) throw ShapeError("boxplot of empty data");
  std::sort(v.begin(), v.end());
  BoxplotSummary b;
  b.q1 = quantile_sorted(v, 0.25);
  b.median = quantile_sorted(v, 0.5);
  b.q3 = quantile_sorted(v, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo_fence = b.q1 - 1.5 * iqr, hi_fence = b.q3 + 1.5 * iqr;
  b.lower_whisker = b.q1;
  b.upper_whisker = b.q3;
  for (double x : v) {
    if (x < lo_fence || x > hi_fence) {
      ++b.outliers;
      continue;
    }
    b.lower_whisker = std::min(b.lower_whisker, x);
    b.upper_whisker = std::max(b.upper_whisker, x);
  }
  return b;
}

Histogram histogram(std::span<const double> values, int n_bins) {
  if (values.empty()) throw ShapeError("histogram of empty data");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  return histogram(values, n_bins, *mn, *mx);
}

Histogram histogram(std::span<const double> values, int n_bins, double lo, double hi) {
  if (n_bins < 1) throw DomainError("histogram needs at least one bin");
  if (hi < lo) throw DomainError("histogram range is inverted");
  Histogram h;
  h.counts.assign(static_cast<std::size_t>(n_bins), 0);
  const double w = (hi - lo) / n_bins;
  for (int b = 0; b <= n_bins; ++b) h.edges.push_back(b == n_bins ? hi : lo + b * w);
  for (double v : values) {
    if (v < lo || v > hi) continue;
    int b = w > 0.0 ? static_cast<int>((v - lo) / w) : 0;
    b = std::clamp(b, 0, n_bins - 1);
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

}  // namespace latent_lens

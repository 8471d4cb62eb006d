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

// CSV/SVG/JSON report output. SVGs use only rect, line and text elements and
// are derived from the same data written to CSV.

#ifndef LATENT_LENS_REPORT_HPP_
#define LATENT_LENS_REPORT_HPP_

#include <Eigen/Dense>
#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "latent_lens/stats.hpp"

namespace latent_lens {

inline constexpr std::string_view kToolVersion = "0.1.0";

std::string xml_escape(std::string_view s);

class SvgDocument {
 public:
  SvgDocument(double width, double height);

  void rect(double x, double y, double w, double h, std::string_view fill, std::string_view css_class = {},
            std::string_view stroke = {});
  void line(double x1, double y1, double x2, double y2, std::string_view stroke, double width = 1.0,
            bool dashed = false);
  void text(double x, double y, std::string_view s, double size = 11.0, std::string_view anchor = "start",
            double rotate = 0.0);

  std::string str() const;
  void save(const std::filesystem::path& path) const;

 private:
  double width_, height_;
  std::string body_;
};

// Boxes in the given order; a dashed divider is drawn after `divider` boxes.
SvgDocument boxplot_chart(const std::vector<BoxplotSummary>& boxes, const std::vector<std::string>& labels,
                          std::string_view title, std::optional<std::size_t> divider = std::nullopt);

// One <rect class="cell"> per matrix entry, colored on [lo, hi]; NaN is grey.
SvgDocument heatmap_chart(const Eigen::MatrixXd& m, const std::vector<std::string>& row_labels,
                          const std::vector<std::string>& col_labels, std::string_view title, double lo,
                          double hi);

SvgDocument scatter_chart(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& fit, std::string_view x_label, std::string_view y_label,
                          std::string_view title);

struct HistogramSeries {
  std::string name;
  Histogram hist;
  std::string color;
};

// Overlaid histograms sharing edges.
SvgDocument histogram_chart(const std::vector<HistogramSeries>& series, std::string_view x_label,
                            std::string_view title);

// Doubles are written with round-trip precision; NaN as an empty field.
std::string csv_number(double v);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& row_labels, const std::vector<std::string>& col_labels,
                      std::string_view corner = "");

// 64-bit FNV-1a, lowercase hex.
std::string content_hash(std::string_view bytes);
std::string file_hash(const std::filesystem::path& path);

// Writes `text` to a sibling temp file then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

class RunManifest {
 public:
  RunManifest(std::string command, nlohmann::json config);

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  void add_timing(const std::string& phase, double seconds);
  nlohmann::json& extra() { return extra_; }

  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::string command_;
  nlohmann::json config_;
  std::map<std::string, std::string> inputs_;
  std::vector<std::string> outputs_;
  std::map<std::string, double> timings_;
  nlohmann::json extra_ = nlohmann::json::object();
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace latent_lens

#endif  // LATENT_LENS_REPORT_HPP_

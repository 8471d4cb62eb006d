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

#include "latent_lens/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "latent_lens/error.hpp"

namespace latent_lens {
namespace {

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), std::round(v * 100.0) / 100.0);
  return std::string(buf, res.ptr);
}

// Linear axis mapping [lo, hi] onto [a, b].
struct Scale {
  double lo, hi, a, b;
  double operator()(double v) const { return hi > lo ? a + (v - lo) / (hi - lo) * (b - a) : 0.5 * (a + b); }
};

// Blue (lo) - white - red (hi).
std::string diverging_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  int r, g, b;
  if (t < 0.5) {
    const double s = t / 0.5;
    r = static_cast<int>(49 + s * (255 - 49));
    g = static_cast<int>(54 + s * (255 - 54));
    b = static_cast<int>(149 + s * (255 - 149));
  } else {
    const double s = (t - 0.5) / 0.5;
    r = static_cast<int>(255 - s * (255 - 165));
    g = static_cast<int>(255 - s * 255);
    b = static_cast<int>(255 - s * (255 - 38));
  }
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

constexpr double kMargin = 60.0;

void frame(SvgDocument& svg, double w, double h, std::string_view title) {
  svg.rect(0, 0, w, h, "#ffffff");
  svg.text(w / 2, 20, title, 14, "middle");
}

void y_axis(SvgDocument& svg, const Scale& y, double x0, double x1) {
  for (int k = 0; k <= 4; ++k) {
    const double v = y.lo + (y.hi - y.lo) * k / 4.0;
    svg.line(x0, y(v), x1, y(v), "#e0e0e0");
    svg.text(x0 - 4, y(v) + 4, num(v), 10, "end");
  }
}

}  // namespace

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

SvgDocument::SvgDocument(double width, double height) : width_(width), height_(height) {}

void SvgDocument::rect(double x, double y, double w, double h, std::string_view fill, std::string_view css_class,
                       std::string_view stroke) {
  body_ += "<rect";
  if (!css_class.empty()) body_ += " class=\"" + std::string(css_class) + "\"";
  body_ += " x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(std::max(0.0, w)) + "\" height=\"" +
           num(std::max(0.0, h)) + "\" fill=\"" + std::string(fill) + "\"";
  if (!stroke.empty()) body_ += " stroke=\"" + std::string(stroke) + "\"";
  body_ += "/>\n";
}

void SvgDocument::line(double x1, double y1, double x2, double y2, std::string_view stroke, double width,
                       bool dashed) {
  body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
           "\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"" + num(width) + "\"";
  if (dashed) body_ += " stroke-dasharray=\"4 3\"";
  body_ += "/>\n";
}

void SvgDocument::text(double x, double y, std::string_view s, double size, std::string_view anchor, double rotate) {
  body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) + "\" text-anchor=\"" +
           std::string(anchor) + "\" font-family=\"sans-serif\"";
  if (rotate != 0.0) body_ += " transform=\"rotate(" + num(rotate) + " " + num(x) + " " + num(y) + ")\"";
  body_ += ">" + xml_escape(s) + "</text>\n";
}

std::string SvgDocument::str() const {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         num(width_) + "\" height=\"" + num(height_) + "\" viewBox=\"0 0 " + num(width_) + " " + num(height_) +
         "\">\n" + body_ + "</svg>\n";
}

void SvgDocument::save(const std::filesystem::path& path) const { write_file_atomic(path, str()); }

SvgDocument boxplot_chart(const std::vector<BoxplotSummary>& boxes, const std::vector<std::string>& labels,
                          std::string_view title, std::optional<std::size_t> divider) {
  const double slot = 14.0;
  const double w = 2 * kMargin + slot * static_cast<double>(std::max<std::size_t>(boxes.size(), 1));
  const double h = 360.0;
  SvgDocument svg(w, h);
  frame(svg, w, h, title);
  double lo = 0.0, hi = 1.0;
  if (!boxes.empty()) {
    lo = boxes[0].lower_whisker;
    hi = boxes[0].upper_whisker;
    for (const auto& b : boxes) {
      lo = std::min(lo, b.lower_whisker);
      hi = std::max(hi, b.upper_whisker);
    }
  }
  const Scale y{lo, hi, h - kMargin, 40.0};
  y_axis(svg, y, kMargin, w - kMargin);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    const double cx = kMargin + slot * (static_cast<double>(i) + 0.5);
    svg.line(cx, y(b.lower_whisker), cx, y(b.upper_whisker), "#555555");
    svg.rect(cx - slot * 0.35, y(b.q3), slot * 0.7, y(b.q1) - y(b.q3), "#9ecae1", "box", "#3182bd");
    svg.line(cx - slot * 0.35, y(b.median), cx + slot * 0.35, y(b.median), "#08306b", 1.5);
    if (i < labels.size() && (boxes.size() <= 40 || i % 5 == 0)) {
      svg.text(cx, h - kMargin + 14, labels[i], 9, "end", -60);
    }
  }
  if (divider && *divider <= boxes.size()) {
    const double x = kMargin + slot * static_cast<double>(*divider);
    svg.line(x, 35.0, x, h - kMargin, "#d62728", 1.5, true);
  }
  return svg;
}

SvgDocument heatmap_chart(const Eigen::MatrixXd& m, const std::vector<std::string>& row_labels,
                          const std::vector<std::string>& col_labels, std::string_view title, double lo, double hi) {
  const double cell = 12.0;
  const double left = 190.0, top = 40.0;
  const double w = left + cell * static_cast<double>(m.cols()) + 20.0;
  const double h = top + cell * static_cast<double>(m.rows()) + 70.0;
  SvgDocument svg(w, h);
  frame(svg, w, h, title);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      const std::string color = std::isnan(v) ? "#bdbdbd" : diverging_color((v - lo) / (hi - lo));
      svg.rect(left + cell * static_cast<double>(j), top + cell * static_cast<double>(i), cell, cell, color, "cell");
    }
    if (static_cast<std::size_t>(i) < row_labels.size()) {
      svg.text(left - 4, top + cell * (static_cast<double>(i) + 0.8), row_labels[static_cast<std::size_t>(i)], 9, "end");
    }
  }
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (static_cast<std::size_t>(j) < col_labels.size() && (m.cols() <= 40 || j % 5 == 0)) {
      const double x = left + cell * (static_cast<double>(j) + 0.7);
      svg.text(x, top + cell * static_cast<double>(m.rows()) + 6, col_labels[static_cast<std::size_t>(j)], 9, "end", -60);
    }
  }
  return svg;
}

SvgDocument scatter_chart(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& fit,
                          std::string_view x_label, std::string_view y_label, std::string_view title) {
  const double w = 520.0, h = 400.0;
  SvgDocument svg(w, h);
  frame(svg, w, h, title);
  if (x.empty()) return svg;
  const auto [xl, xh] = std::minmax_element(x.begin(), x.end());
  double yl = *std::min_element(y.begin(), y.end()), yh = *std::max_element(y.begin(), y.end());
  for (double f : fit) {
    yl = std::min(yl, f);
    yh = std::max(yh, f);
  }
  const Scale sx{*xl, *xh, kMargin, w - 20.0};
  const Scale sy{yl, yh, h - kMargin, 40.0};
  y_axis(svg, sy, kMargin, w - 20.0);
  for (std::size_t i = 0; i < x.size(); ++i) svg.rect(sx(x[i]) - 1.5, sy(y[i]) - 1.5, 3, 3, "#6baed6", "point");
  std::vector<std::size_t> order(x.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  for (std::size_t k = 1; k < order.size() && fit.size() == x.size(); ++k) {
    const auto a = order[k - 1], b = order[k];
    svg.line(sx(x[a]), sy(fit[a]), sx(x[b]), sy(fit[b]), "#d62728", 2.0);
  }
  svg.text(w / 2, h - 15, x_label, 11, "middle");
  svg.text(15, h / 2, y_label, 11, "middle", -90);
  svg.text(kMargin, h - kMargin + 14, num(*xl), 10, "start");
  svg.text(w - 20.0, h - kMargin + 14, num(*xh), 10, "end");
  return svg;
}

SvgDocument histogram_chart(const std::vector<HistogramSeries>& series, std::string_view x_label,
                            std::string_view title) {
  const double w = 520.0, h = 360.0;
  SvgDocument svg(w, h);
  frame(svg, w, h, title);
  if (series.empty() || series[0].hist.counts.empty()) return svg;
  const auto& edges = series[0].hist.edges;
  long top = 1;
  for (const auto& s : series) {
    for (long c : s.hist.counts) top = std::max(top, c);
  }
  const Scale sx{edges.front(), edges.back(), kMargin, w - 20.0};
  const Scale sy{0.0, static_cast<double>(top), h - kMargin, 40.0};
  y_axis(svg, sy, kMargin, w - 20.0);
  const double band = 1.0 / static_cast<double>(series.size());
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& hs = series[s];
    for (std::size_t b = 0; b < hs.hist.counts.size(); ++b) {
      const double x0 = sx(hs.hist.edges[b]), x1 = sx(hs.hist.edges[b + 1]);
      const double bw = (x1 - x0) * band;
      const double y0 = sy(static_cast<double>(hs.hist.counts[b]));
      svg.rect(x0 + bw * static_cast<double>(s), y0, bw, sy(0.0) - y0, hs.color, "bar");
    }
    svg.rect(w - 150, 30.0 + 16.0 * static_cast<double>(s), 10, 10, hs.color);
    svg.text(w - 135, 39.0 + 16.0 * static_cast<double>(s), hs.name, 10);
  }
  svg.text(w / 2, h - 15, x_label, 11, "middle");
  svg.text(kMargin, h - kMargin + 14, num(edges.front()), 10, "start");
  svg.text(w - 20.0, h - kMargin + 14, num(edges.back()), 10, "end");
  return svg;
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out << ',';
      out << fields[i];
    }
    out << '\n';
  };
  emit(header);
  for (const auto& r : rows) emit(r);
  write_file_atomic(path, out.str());
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& row_labels, const std::vector<std::string>& col_labels,
                      std::string_view corner) {
  std::vector<std::string> header{std::string(corner)};
  header.insert(header.end(), col_labels.begin(), col_labels.end());
  std::vector<std::vector<std::string>> rows;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<std::string> r{static_cast<std::size_t>(i) < row_labels.size() ? row_labels[static_cast<std::size_t>(i)]
                                                                                : std::to_string(i)};
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(csv_number(m(i, j)));
    rows.push_back(std::move(r));
  }
  write_csv(path, header, rows);
}

std::string content_hash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return content_hash(ss.str());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw ConfigError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

RunManifest::RunManifest(std::string command, nlohmann::json config)
    : command_(std::move(command)), config_(std::move(config)) {}

void RunManifest::add_input(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(path)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) inputs_[f.string()] = file_hash(f);
    return;
  }
  inputs_[path.string()] = file_hash(path);
}

void RunManifest::add_output(const std::filesystem::path& path) { outputs_.push_back(path.filename().string()); }

void RunManifest::add_timing(const std::string& phase, double seconds) { timings_[phase] = seconds; }

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["tool"] = "latent-lens";
  j["tool_version"] = kToolVersion;
  j["command"] = command_;
  j["config"] = config_;
  j["config_hash"] = content_hash(config_.dump());
  j["inputs"] = inputs_;
  j["outputs"] = outputs_;
  j["timings_s"] = timings_;
  for (const auto& [k, v] : extra_.items()) j[k] = v;
  return j;
}

void RunManifest::write(const std::filesystem::path& path) const { write_file_atomic(path, to_json().dump(2) + "\n"); }

}  // namespace latent_lens

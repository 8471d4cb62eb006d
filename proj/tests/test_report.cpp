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
#include <limits>
#include <sstream>
#include <unistd.h>

#include "doctest.h"
#include "latent_lens/report.hpp"

namespace ll = latent_lens;
namespace fs = std::filesystem;

namespace {

// Checks that every element is closed in order. Attribute values are
// assumed to contain no '>' (xml_escape guarantees this for text).
bool balanced(const std::string& svg) {
  std::vector<std::string> stack;
  std::size_t pos = 0;
  while ((pos = svg.find('<', pos)) != std::string::npos) {
    const auto end = svg.find('>', pos);
    if (end == std::string::npos) return false;
    const std::string tag = svg.substr(pos + 1, end - pos - 1);
    pos = end + 1;
    if (tag.empty() || tag[0] == '?') continue;
    if (tag[0] == '/') {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
    } else if (tag.back() != '/') {
      stack.push_back(tag.substr(0, tag.find_first_of(" \n")));
    }
  }
  return stack.empty();
}

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("xml escaping") {
  CHECK(ll::xml_escape("a<b & \"c\">") == "a&lt;b &amp; &quot;c&quot;&gt;");
  ll::SvgDocument svg(10, 10);
  svg.text(1, 1, "<script>");
  CHECK(svg.str().find("<script>") == std::string::npos);
  CHECK(balanced(svg.str()));
}

TEST_CASE("charts are well formed") {
  std::vector<ll::BoxplotSummary> boxes(3);
  boxes[1] = {0.1, 0.2, 0.3, 0.0, 0.5, 2};
  const auto box = ll::boxplot_chart(boxes, {"a", "b", "c"}, "sigma", 1).str();
  CHECK(box.rfind("<?xml", 0) == 0);
  CHECK(balanced(box));

  Eigen::MatrixXd m(3, 4);
  m << 0, 0.5, 1, std::numeric_limits<double>::quiet_NaN(), 0.1, 0.2, 0.3, 0.4, -1, 1, 0, 0;
  const auto heat = ll::heatmap_chart(m, {"r0", "r1", "r2"}, {"c0", "c1", "c2", "c3"}, "phik", 0, 1).str();
  CHECK(balanced(heat));
  CHECK(count(heat, "class=\"cell\"") == 12);

  const auto sc = ll::scatter_chart({1, 2, 3}, {2, 4, 6}, {2, 4, 6}, "x", "y", "fit").str();
  CHECK(balanced(sc));

  ll::HistogramSeries h{"real", {{0, 1, 2}, {3, 4}}, "#1f77b4"};
  const auto hist = ll::histogram_chart({h}, "count", "<hist>").str();
  CHECK(balanced(hist));
  CHECK(hist.find("&lt;hist&gt;") != std::string::npos);
}

TEST_CASE("csv numbers round trip") {
  CHECK(ll::csv_number(std::numeric_limits<double>::quiet_NaN()).empty());
  CHECK(ll::csv_number(0.5) == "0.5");
  CHECK(ll::csv_number(-3) == "-3");
  for (double v : {0.1, 1.0 / 3.0, 6.02e23, -1e-300}) CHECK(std::stod(ll::csv_number(v)) == v);
}

TEST_CASE("content hash is 64-bit FNV-1a") {
  CHECK(ll::content_hash("") == "cbf29ce484222325");
  CHECK(ll::content_hash("a") == "af63dc4c8601ec8c");
  CHECK(ll::content_hash("foobar") == "85944171f73967e8");
}

TEST_CASE("csv files and manifests") {
  const fs::path dir = fs::temp_directory_path() / ("latent_lens_report_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  Eigen::Matrix2d m;
  m << 1, 0.5, std::numeric_limits<double>::quiet_NaN(), 2;
  ll::write_matrix_csv(dir / "m.csv", m, {"a", "b"}, {"x", "y"}, "row");
  CHECK(slurp(dir / "m.csv") == "row,x,y\na,1,0.5\nb,,2\n");
  CHECK_FALSE(fs::exists(dir / "m.csv.tmp"));

  ll::RunManifest man("analyze", {{"bars", 2}});
  man.add_input(dir / "m.csv");
  man.add_output(dir / "m.csv");
  man.add_timing("encode", 1.5);
  man.extra()["n"] = 3;
  const auto j = man.to_json();
  CHECK(j["command"] == "analyze");
  CHECK(j["tool_version"] == std::string(ll::kToolVersion));
  CHECK(j["outputs"][0] == "m.csv");
  CHECK(j["inputs"][(dir / "m.csv").string()] == ll::file_hash(dir / "m.csv"));
  CHECK(j["config_hash"] == ll::content_hash(nlohmann::json({{"bars", 2}}).dump()));
  CHECK(j["n"] == 3);
  fs::remove_all(dir);
}

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


// latent-lens <ingest|gen|train|analyze|roundtrip> [flags]
//
// Every subcommand accepts --config FILE with flat `key = value` lines named
// after its long flags; flags given on the command line win. Exit codes: 0
// success, 1 input error, 2 numerical failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "latent_lens/analysis.hpp"
#include "latent_lens/checkpoint.hpp"
#include "latent_lens/corpus.hpp"
#include "latent_lens/features.hpp"
#include "latent_lens/melody.hpp"
#include "latent_lens/midi.hpp"
#include "latent_lens/report.hpp"
#include "latent_lens/stats.hpp"
#include "latent_lens/vae.hpp"

namespace fs = std::filesystem;
namespace ll = latent_lens;
using nlohmann::json;

namespace {

constexpr int kExitInput = 1;
constexpr int kExitNumerical = 2;

// Thrown for failures that should exit with a given code after a message.
struct ExitRequest {
  int code;
  std::string message;
};

void warn(const std::string& msg) { std::cerr << "latent-lens: warning: " << msg << "\n"; }
void info(const std::string& msg) { std::cerr << "latent-lens: " << msg << "\n"; }

// Applies a flat key=value file to the options of `app` that were not given
// on the command line.
void apply_config_file(CLI::App* app, const std::string& path) {
  if (path.empty()) return;
  if (!fs::exists(path)) throw ll::ConfigError("config file not found: " + path);
  for (const auto& item : CLI::ConfigINI().from_file(path)) {
    if (!item.parents.empty()) throw ll::ConfigError("config file must be flat, found section in " + path);
    if (item.name == "config") continue;
    CLI::Option* opt = app->get_option_no_throw("--" + item.name);
    if (opt == nullptr) throw ll::ConfigError("unknown config key '" + item.name + "' for " + app->get_name());
    if (opt->count() == 0) {
      opt->add_result(item.inputs);
      opt->run_callback();
    }
  }
}

// Snapshot of every option of `app` for manifests.
json config_snapshot(const CLI::App* app) {
  json j = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_lnames().empty() ? opt->get_name() : opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    const auto results = opt->reduced_results();
    if (results.empty()) {
      j[name] = opt->get_default_str();
    } else if (results.size() == 1) {
      j[name] = results.front();
    } else {
      j[name] = results;
    }
  }
  return j;
}

std::vector<ll::TokenSequence> tokens_of(const std::vector<ll::CorpusRecord>& records) {
  std::vector<ll::TokenSequence> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.tokens);
  return out;
}

std::vector<ll::Melody> melodies_of(const std::vector<ll::CorpusRecord>& records) {
  std::vector<ll::Melody> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.melody());
  return out;
}

int corpus_bars(const std::vector<ll::CorpusRecord>& records, const std::string& path) {
  if (records.empty()) throw ll::StructuralInputError("corpus is empty: " + path);
  const int bars = records.front().tokens.bars();
  for (const auto& r : records) {
    if (r.tokens.bars() != bars) throw ll::ShapeError("corpus mixes sequence lengths: " + path);
  }
  return bars;
}

void write_corpus_file(const fs::path& path, const std::vector<ll::CorpusRecord>& records) {
  std::ostringstream out;
  ll::write_corpus(out, records);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  ll::write_file_atomic(path, out.str());
}

fs::path manifest_path_for(const fs::path& output_file) { return fs::path(output_file.string() + ".manifest.json"); }

// ---------------------------------------------------------------------------
// ingest

struct IngestOptions {
  std::string midi_dir;
  std::string out;
  ll::ExtractionConfig extraction;
  bool any_meter = false;
};

int cmd_ingest(const IngestOptions& o, const CLI::App* app) {
  const ll::Stopwatch clock;
  if (!fs::is_directory(o.midi_dir)) throw ll::ConfigError("not a readable directory: " + o.midi_dir);
  ll::ExtractionConfig cfg = o.extraction;
  cfg.require_four_four = !o.any_meter;
  cfg.validate();

  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(o.midi_dir)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".mid" || ext == ".midi") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  ll::RunManifest manifest("ingest", config_snapshot(app));
  std::vector<ll::CorpusRecord> records;
  int skipped = 0;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (!in.good() && !in.eof()) {
      warn("cannot read " + f.string());
      ++skipped;
      continue;
    }
    try {
      const auto melodies = ll::extract_melodies(ll::parse_midi(bytes), cfg);
      info(f.filename().string() + ": " + std::to_string(melodies.size()) + " melodies");
      for (const auto& m : melodies) records.push_back({ll::tokenize(m), m.tempo_qpm});
      manifest.add_input(f);
    } catch (const ll::Error& e) {
      warn("skipping " + f.string() + ": " + e.what());
      ++skipped;
    }
  }
  if (records.empty()) {
    throw ExitRequest{kExitInput, "no melodies extracted from " + o.midi_dir + " (" + std::to_string(files.size()) +
                                      " MIDI files, " + std::to_string(skipped) + " skipped)"};
  }
  write_corpus_file(o.out, records);
  manifest.add_output(o.out);
  manifest.extra()["files"] = files.size();
  manifest.extra()["files_skipped"] = skipped;
  manifest.extra()["melodies"] = records.size();
  manifest.add_timing("total", clock.seconds());
  manifest.write(manifest_path_for(o.out));
  info("wrote " + std::to_string(records.size()) + " melodies to " + o.out);
  return 0;
}

// ---------------------------------------------------------------------------
// gen

struct GenOptions {
  std::string kind = "musical";
  std::size_t n = 2000;
  std::uint64_t seed = 0;
  std::string out;
  int bars = 2;
  ll::RandomSeqConfig random;
  ll::SyntheticConfig musical;
};

int cmd_gen(GenOptions o, const CLI::App* app) {
  const ll::Stopwatch clock;
  if (o.n < 1) throw ll::ConfigError("n must be >= 1");
  std::vector<ll::Melody> melodies;
  if (o.kind == "random") {
    o.random.bars = o.bars;
    melodies = ll::gen_random_corpus(o.random, o.n, o.seed);
  } else {
    o.musical.bars = o.bars;
    o.musical.seed = o.seed;
    melodies = ll::gen_musical_corpus(o.musical, o.n);
  }
  std::vector<ll::CorpusRecord> records;
  records.reserve(melodies.size());
  for (const auto& m : melodies) records.push_back({ll::tokenize(m), m.tempo_qpm});
  write_corpus_file(o.out, records);

  ll::RunManifest manifest("gen", config_snapshot(app));
  manifest.add_output(o.out);
  manifest.extra()["melodies"] = records.size();
  manifest.add_timing("total", clock.seconds());
  manifest.write(manifest_path_for(o.out));
  info("wrote " + std::to_string(records.size()) + " " + o.kind + " melodies to " + o.out);
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  std::string corpus;
  std::string out_dir;
  std::string resume;
  ll::ModelConfig model;
  ll::TrainConfig train;
  std::uint64_t init_seed = 0;
  bool per_token = false;
};

// Rows of an earlier history.csv up to and including `last_epoch`.
std::vector<std::vector<std::string>> earlier_history(const fs::path& path, int last_epoch) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(path);
  std::string line;
  if (!std::getline(in, line)) return rows;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.empty() || std::stoi(fields.front()) > last_epoch) break;
    rows.push_back(std::move(fields));
  }
  return rows;
}

void write_history(const fs::path& path, std::vector<std::vector<std::string>> rows,
                   const std::vector<ll::EpochStats>& history, int latent_dim) {
  std::vector<std::string> header{"epoch", "loss", "recon_ce", "kl", "dims_sigma_below_0.5", "dims_sigma_0.9_1.1"};
  for (int i = 0; i < latent_dim; ++i) header.push_back("median_sigma_" + std::to_string(i));
  for (const auto& s : history) {
    int sharp = 0, wide = 0;
    for (double v : s.median_sigma) {
      sharp += v < 0.5;
      wide += v >= 0.9 && v <= 1.1;
    }
    std::vector<std::string> r{std::to_string(s.epoch), ll::csv_number(s.loss), ll::csv_number(s.recon_ce),
                               ll::csv_number(s.kl), std::to_string(sharp), std::to_string(wide)};
    for (int i = 0; i < latent_dim; ++i) {
      r.push_back(static_cast<std::size_t>(i) < s.median_sigma.size() ? ll::csv_number(s.median_sigma[static_cast<std::size_t>(i)])
                                                                        : "");
    }
    rows.push_back(std::move(r));
  }
  ll::write_csv(path, header, rows);
}

int cmd_train(TrainOptions o, const CLI::App* app) {
  const ll::Stopwatch clock;
  const auto records = ll::read_corpus(fs::path(o.corpus));
  const int bars = corpus_bars(records, o.corpus);
  o.model.seq_len = ll::GridSpec::steps_for_bars(bars);
  o.model.validate();
  if (o.per_token) o.train.reduction = ll::ReconReduction::kPerToken;
  o.train.validate();
  const auto tokens = tokens_of(records);

  ll::Params start;
  ll::TrainState state;
  std::vector<std::vector<std::string>> prior;
  const fs::path out(o.out_dir);
  fs::create_directories(out);
  if (!o.resume.empty()) {
    auto ck = ll::load_checkpoint(o.resume, o.model);
    start = std::move(ck.params);
    state = ck.state;
    // Carry the earlier rows so history.csv covers the whole run.
    const fs::path old_history = fs::path(o.resume).parent_path() / "history.csv";
    if (fs::exists(old_history)) prior = earlier_history(old_history, state.epochs_done);
    info("resuming after epoch " + std::to_string(state.epochs_done));
  } else {
    start = ll::init_params(o.model, o.init_seed);
  }

  ll::RunManifest manifest("train", config_snapshot(app));
  manifest.add_input(o.corpus);
  if (!o.resume.empty()) manifest.add_input(o.resume);

  std::vector<ll::EpochStats> history;
  auto on_epoch = [&](const ll::EpochStats& s) {
    history.push_back(s);
    int sharp = 0, wide = 0;
    for (double v : s.median_sigma) {
      sharp += v < 0.5;
      wide += v >= 0.9 && v <= 1.1;
    }
    char line[160];
    std::snprintf(line, sizeof(line), "epoch %d loss %.4f recon_ce %.4f kl %.4f sigma<0.5 %d sigma~1 %d", s.epoch,
                  s.loss, s.recon_ce, s.kl, sharp, wide);
    info(line);
  };

  const fs::path ckpt = out / "model.ckpt";
  try {
    const auto result = ll::train(std::move(start), tokens, o.train, state, on_epoch);
    ll::save_checkpoint(result.params, ckpt, result.state);
    write_history(out / "history.csv", prior, result.history, o.model.latent_dim);
  } catch (const ll::TrainingError& e) {
    ll::save_checkpoint(e.last_good(), ckpt, e.state());
    write_history(out / "history.csv", prior, e.history(), o.model.latent_dim);
    manifest.add_output(ckpt);
    manifest.add_output(out / "history.csv");
    manifest.extra()["error"] = e.what();
    manifest.add_timing("total", clock.seconds());
    manifest.write(out / "manifest.json");
    throw ExitRequest{kExitNumerical, std::string(e.what()) + "; last good parameters saved to " + ckpt.string()};
  }
  manifest.add_output(ckpt);
  manifest.add_output(out / "history.csv");
  manifest.extra()["melodies"] = records.size();
  manifest.extra()["held_out"] = ll::held_out_count(records.size());
  manifest.add_timing("train", clock.seconds());
  manifest.write(out / "manifest.json");
  info("wrote " + ckpt.string());
  return 0;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeOptions {
  std::string checkpoint;
  std::string corpus;
  std::string random_corpus;
  std::string out_dir;
  double sigma_threshold = ll::kDefaultSigmaThreshold;
  double activation_threshold = ll::kDefaultActivationThreshold;
  int shown = 0;
  int top_neurons = 4;
  int hist_bins = 30;
  double lowess_frac = 0.3;
  std::vector<std::string> scatter;
  ll::PhikConfig phik;
  std::string binning = "width";
};

std::vector<std::string> dim_labels(const std::vector<int>& order, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n && i < order.size(); ++i) out.push_back("z" + std::to_string(order[i]));
  return out;
}

void write_boxplots(const fs::path& dir, const std::string& stem, const std::vector<ll::BoxplotSummary>& boxes,
                    const ll::NeuronPartition& part, const std::string& title, ll::RunManifest& manifest) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    const auto& b = boxes[k];
    rows.push_back({std::to_string(k), std::to_string(part.order[k]), k < part.music.size() ? "music" : "noise",
                    ll::csv_number(b.q1), ll::csv_number(b.median), ll::csv_number(b.q3),
                    ll::csv_number(b.lower_whisker), ll::csv_number(b.upper_whisker), std::to_string(b.outliers)});
  }
  ll::write_csv(dir / (stem + ".csv"),
                {"rank", "dim", "partition", "q1", "median", "q3", "lower_whisker", "upper_whisker", "outliers"}, rows);
  ll::boxplot_chart(boxes, dim_labels(part.order, boxes.size()), title, part.music.size()).save(dir / (stem + ".svg"));
  manifest.add_output(dir / (stem + ".csv"));
  manifest.add_output(dir / (stem + ".svg"));
}

std::pair<int, std::size_t> parse_scatter_spec(const std::string& spec, int dims) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw ll::ConfigError("scatter spec must be NEURON:FEATURE, got " + spec);
  int neuron = -1;
  try {
    neuron = std::stoi(spec.substr(0, colon));
  } catch (const std::exception&) {
    throw ll::ConfigError("bad neuron index in " + spec);
  }
  if (neuron < 0 || neuron >= dims) throw ll::ConfigError("neuron index out of range in " + spec);
  const auto feature = ll::feature_index(spec.substr(colon + 1));
  if (!feature) throw ll::ConfigError("unknown feature in " + spec);
  return {neuron, *feature};
}

json median_json(const std::vector<double>& v) {
  json j = json::array();
  for (double x : v) j.push_back(x);
  return j;
}

int cmd_analyze(AnalyzeOptions o, const CLI::App* app) {
  const ll::Stopwatch clock;
  if (o.binning == "frequency") {
    o.phik.binning = ll::Binning::kEqualFrequency;
  } else if (o.binning != "width") {
    throw ll::ConfigError("phik-binning must be width or frequency");
  }
  o.phik.validate();
  const fs::path out(o.out_dir);
  fs::create_directories(out);
  ll::RunManifest manifest("analyze", config_snapshot(app));
  manifest.add_input(o.checkpoint);
  manifest.add_input(o.corpus);

  const auto ck = ll::load_checkpoint(o.checkpoint);
  const auto& p = ck.params;
  const auto records = ll::read_corpus(fs::path(o.corpus));
  const int bars = corpus_bars(records, o.corpus);
  if (ll::GridSpec::steps_for_bars(bars) != p.config.seq_len) {
    throw ll::ConfigError("corpus has " + std::to_string(bars) + "-bar melodies but the model expects " +
                          std::to_string(p.config.bars()));
  }
  const auto tokens = tokens_of(records);
  const auto melodies = melodies_of(records);

  const auto lm = ll::encode_corpus(p, tokens);
  manifest.add_timing("encode", clock.seconds());
  const auto part = ll::partition_neurons(lm, o.sigma_threshold);
  const int shown = o.shown > 0 ? std::min<int>(o.shown, static_cast<int>(lm.dims())) : ll::default_shown_dims(lm);

  // Central values.
  const auto cv = ll::central_value_stats(lm, part);
  write_boxplots(out, "sigma_boxplot", cv.sigma, part, "sigma per latent dim (ascending median)", manifest);
  write_boxplots(out, "mu_boxplot", cv.mu, part, "mu per latent dim (sigma order)", manifest);

  const auto labels = dim_labels(part.order, static_cast<std::size_t>(shown));
  const auto pearson = ll::mu_pearson_matrix(lm, part.order, shown);
  ll::write_matrix_csv(out / "pearson_matrix.csv", pearson, labels, labels, "dim");
  ll::heatmap_chart(pearson, labels, labels, "Pearson correlation of mu", -1.0, 1.0).save(out / "pearson_matrix.svg");
  manifest.add_output(out / "pearson_matrix.csv");
  manifest.add_output(out / "pearson_matrix.svg");

  // Neuron-feature correlations.
  const auto features = ll::extract_corpus_features(melodies);
  const auto ph = ll::neuron_feature_phik(lm, features, part.order, shown, o.phik);
  std::vector<std::string> feature_labels(ll::kFeatureNames.begin(), ll::kFeatureNames.end());
  ll::write_matrix_csv(out / "feature_phik.csv", ph, feature_labels, labels, "feature");
  ll::heatmap_chart(ph, feature_labels, labels, "phik: features x latent dims", 0.0, 1.0).save(out / "feature_phik.svg");
  manifest.add_output(out / "feature_phik.csv");
  manifest.add_output(out / "feature_phik.svg");
  manifest.add_timing("phik", clock.seconds());

  // Scatter plots: requested pairs, else the first two music dims against
  // their strongest feature.
  std::vector<std::pair<int, std::size_t>> pairs;
  for (const auto& s : o.scatter) pairs.push_back(parse_scatter_spec(s, static_cast<int>(lm.dims())));
  if (o.scatter.empty()) {
    for (std::size_t k = 0; k < std::min<std::size_t>(2, part.music.size()) && static_cast<int>(k) < shown; ++k) {
      Eigen::Index best = -1;
      double best_v = -1.0;
      for (Eigen::Index f = 0; f < ph.rows(); ++f) {
        const double v = ph(f, static_cast<Eigen::Index>(k));
        if (!std::isnan(v) && v > best_v) {
          best_v = v;
          best = f;
        }
      }
      if (best >= 0) pairs.emplace_back(part.order[k], static_cast<std::size_t>(best));
    }
  }
  for (const auto& [neuron, feature] : pairs) {
    const auto s = ll::neuron_feature_scatter(lm, features, neuron, feature, o.lowess_frac);
    const std::string fname(ll::kFeatureNames[feature]);
    const std::string stem = "scatter_" + std::to_string(neuron) + "_" + fname;
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < s.feature_values.size(); ++i) {
      rows.push_back({ll::csv_number(s.feature_values[i]), ll::csv_number(s.activations[i]), ll::csv_number(s.fit[i])});
    }
    ll::write_csv(out / (stem + ".csv"), {fname, "mu_" + std::to_string(neuron), "lowess"}, rows);
    ll::scatter_chart(s.feature_values, s.activations, s.fit, fname, "mu of z" + std::to_string(neuron),
                      "z" + std::to_string(neuron) + " vs " + fname)
        .save(out / (stem + ".svg"));
    manifest.add_output(out / (stem + ".csv"));
    manifest.add_output(out / (stem + ".svg"));
  }

  // Activation counts, optionally against a random corpus.
  json partition_json;
  std::vector<std::string> header{"count", "corpus_music", "corpus_noise"};
  std::vector<ll::HistogramSeries> series;
  const int max_count = static_cast<int>(lm.dims());
  auto integer_hist = [&](const std::vector<int>& v) {
    std::vector<double> d(v.begin(), v.end());
    return ll::histogram(d, max_count + 1, -0.5, max_count + 0.5);
  };
  const auto real = ll::activation_counts(lm, part, o.activation_threshold);
  std::vector<ll::Histogram> hists{integer_hist(real.music), integer_hist(real.noise)};
  series.push_back({"corpus music", hists[0], "#1f77b4"});
  series.push_back({"corpus noise", hists[1], "#aec7e8"});
  auto median_of = [](const std::vector<int>& v) {
    std::vector<double> d(v.begin(), v.end());
    return d.empty() ? 0.0 : ll::median(d);
  };
  partition_json["activation_medians"] = {{"corpus_music", median_of(real.music)},
                                          {"corpus_noise", median_of(real.noise)}};
  if (!o.random_corpus.empty()) {
    manifest.add_input(o.random_corpus);
    const auto random_records = ll::read_corpus(fs::path(o.random_corpus));
    const auto rep = ll::compare_real_vs_random(lm, ll::encode_corpus(p, tokens_of(random_records)), part,
                                                o.top_neurons, o.hist_bins, o.activation_threshold);
    hists.push_back(integer_hist(rep.random_activations.music));
    hists.push_back(integer_hist(rep.random_activations.noise));
    header.insert(header.end(), {"random_music", "random_noise"});
    series.push_back({"random music", hists[2], "#d62728"});
    series.push_back({"random noise", hists[3], "#ff9896"});
    partition_json["activation_medians"]["random_music"] = rep.median_random_music;
    partition_json["activation_medians"]["random_noise"] = rep.median_random_noise;

    std::vector<std::vector<std::string>> rows;
    for (const auto& nh : rep.neurons) {
      for (std::size_t b = 0; b < nh.real.counts.size(); ++b) {
        rows.push_back({std::to_string(nh.neuron), ll::csv_number(nh.real.edges[b]), ll::csv_number(nh.real.edges[b + 1]),
                        std::to_string(nh.real.counts[b]), std::to_string(nh.random.counts[b])});
      }
    }
    ll::write_csv(out / "neuron_hist.csv", {"dim", "lo", "hi", "corpus", "random"}, rows);
    manifest.add_output(out / "neuron_hist.csv");
  }
  std::vector<std::vector<std::string>> rows;
  for (int c = 0; c <= max_count; ++c) {
    std::vector<std::string> r{std::to_string(c)};
    for (const auto& h : hists) r.push_back(std::to_string(h.counts[static_cast<std::size_t>(c)]));
    rows.push_back(std::move(r));
  }
  ll::write_csv(out / "activation_hist.csv", header, rows);
  ll::histogram_chart(series, "dims with |mu| > " + ll::csv_number(o.activation_threshold), "activation counts")
      .save(out / "activation_hist.svg");
  manifest.add_output(out / "activation_hist.csv");
  manifest.add_output(out / "activation_hist.svg");

  partition_json["order"] = part.order;
  partition_json["music"] = part.music;
  partition_json["noise"] = part.noise;
  partition_json["sigma_threshold"] = part.sigma_threshold;
  partition_json["activation_threshold"] = o.activation_threshold;
  partition_json["median_sigma"] = median_json(ll::median_sigma(lm));
  partition_json["median_abs_mu"] = median_json(ll::median_abs_mu(lm));
  partition_json["corpus"] = o.corpus;
  partition_json["melodies"] = lm.rows();
  partition_json["skipped"] = lm.skipped;
  ll::write_file_atomic(out / "partition.json", partition_json.dump(2) + "\n");
  manifest.add_output(out / "partition.json");
  manifest.add_timing("total", clock.seconds());
  manifest.write(out / "manifest.json");
  info(std::to_string(part.music.size()) + " music dims, " + std::to_string(part.noise.size()) + " noise dims; report in " +
       out.string());
  return 0;
}

// ---------------------------------------------------------------------------
// roundtrip

struct RoundtripOptions {
  std::string checkpoint;
  std::string melody;
  std::string out_dir;
  int k = 3;
  std::uint64_t seed = 0;
  double temperature = 0.0;
};

int cmd_roundtrip(const RoundtripOptions& o, const CLI::App* app) {
  const ll::Stopwatch clock;
  if (o.k < 0) throw ll::ConfigError("k must be >= 0");
  if (o.temperature < 0.0) throw ll::ConfigError("temperature must be >= 0");
  const auto ck = ll::load_checkpoint(o.checkpoint);
  const auto records = ll::read_corpus(fs::path(o.melody));
  if (records.size() != 1) throw ll::StructuralInputError("expected exactly one melody in " + o.melody);
  const auto& input = records.front();
  if (static_cast<int>(input.tokens.size()) != ck.params.config.seq_len) {
    throw ll::ConfigError("melody length does not match the model's sequence length");
  }

  const fs::path out(o.out_dir);
  fs::create_directories(out);
  ll::RunManifest manifest("roundtrip", config_snapshot(app));
  manifest.add_input(o.checkpoint);
  manifest.add_input(o.melody);

  ll::Rng rng(o.seed);
  const auto enc = ll::encode(ck.params, input.tokens);
  const auto opts = o.temperature > 0.0 ? ll::DecodeOptions::Sample(o.temperature) : ll::DecodeOptions::Greedy();
  std::vector<ll::CorpusRecord> outputs{{ll::decode(ck.params, enc.mu, ll::DecodeOptions::Greedy()), input.tempo_qpm}};
  for (int i = 0; i < o.k; ++i) {
    const auto z = ll::sample_latent(enc, rng);
    outputs.push_back({ll::decode(ck.params, z, opts, &rng), input.tempo_qpm});
  }
  write_corpus_file(out / "roundtrip.jsonl", outputs);
  manifest.add_output(out / "roundtrip.jsonl");
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const auto bytes = ll::write_midi(outputs[i].melody());
    const fs::path mid = out / (i == 0 ? std::string("reconstruction.mid") : "variation_" + std::to_string(i) + ".mid");
    ll::write_file_atomic(mid, std::string(bytes.begin(), bytes.end()));
    manifest.add_output(mid);
  }
  const auto& a = input.tokens.tokens();
  const auto& b = outputs.front().tokens.tokens();
  int same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  manifest.extra()["greedy_token_accuracy"] = static_cast<double>(same) / static_cast<double>(a.size());
  manifest.add_timing("total", clock.seconds());
  manifest.write(out / "manifest.json");
  info("greedy reconstruction matches " + std::to_string(same) + "/" + std::to_string(a.size()) + " tokens");
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"latent-lens: train a melody VAE and study its latent space"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ll::kToolVersion));

  std::map<CLI::App*, std::string> config_paths;
  auto add_config = [&](CLI::App* sub) { sub->add_option("--config", config_paths[sub], "flat key=value config file"); };

  IngestOptions ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "extract melodies from a directory of MIDI files");
  ingest_cmd->add_option("--midi-dir", ingest.midi_dir, "directory searched recursively for .mid files")->required();
  ingest_cmd->add_option("--out", ingest.out, "output JSONL corpus")->required();
  ingest_cmd->add_option("--bars", ingest.extraction.bars, "window length in bars")->capture_default_str();
  ingest_cmd->add_option("--max-per-file", ingest.extraction.max_melodies_per_file)->capture_default_str();
  ingest_cmd->add_option("--min-notes", ingest.extraction.min_notes)->capture_default_str();
  ingest_cmd->add_flag("--any-meter", ingest.any_meter, "accept files that are not in 4/4");
  add_config(ingest_cmd);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a random or synthetic musical corpus");
  gen_cmd->add_option("--kind", gen.kind)->check(CLI::IsMember({"random", "musical"}))->capture_default_str();
  gen_cmd->add_option("--n", gen.n)->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed)->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "output JSONL corpus")->required();
  gen_cmd->add_option("--bars", gen.bars)->capture_default_str();
  gen_cmd->add_option("--notes-min", gen.random.n_notes_min)->capture_default_str();
  gen_cmd->add_option("--notes-max", gen.random.n_notes_max)->capture_default_str();
  gen_cmd->add_option("--pitch-min", gen.random.pitch_min)->capture_default_str();
  gen_cmd->add_option("--pitch-max", gen.random.pitch_max)->capture_default_str();
  gen_cmd->add_option("--seconds-min", gen.random.duration_s_min)->capture_default_str();
  gen_cmd->add_option("--seconds-max", gen.random.duration_s_max)->capture_default_str();
  gen_cmd->add_option("--key-root", gen.musical.key_root)->capture_default_str();
  gen_cmd->add_option("--scale", gen.musical.scale, "semitone offsets")->capture_default_str();
  gen_cmd->add_option("--step-bias", gen.musical.step_bias)->capture_default_str();
  gen_cmd->add_option("--direction-persistence", gen.musical.direction_persistence)->capture_default_str();
  gen_cmd->add_option("--rhythm-grid", gen.musical.rhythm_grid, "durations in steps")->capture_default_str();
  gen_cmd->add_option("--rhythm-consistency", gen.musical.rhythm_consistency)->capture_default_str();
  gen_cmd->add_option("--rest-probability", gen.musical.rest_probability)->capture_default_str();
  gen_cmd->add_option("--register-low", gen.musical.register_low)->capture_default_str();
  gen_cmd->add_option("--register-high", gen.musical.register_high)->capture_default_str();
  gen_cmd->add_option("--ambitus", gen.musical.ambitus_degrees, "scale degrees")->capture_default_str();
  gen_cmd->add_option("--tempo", gen.musical.tempo_qpm)->capture_default_str();
  add_config(gen_cmd);

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "train the VAE on a corpus");
  train_cmd->add_option("--corpus", train.corpus)->required();
  train_cmd->add_option("--out-dir", train.out_dir, "run directory")->required();
  train_cmd->add_option("--resume", train.resume, "checkpoint to continue from");
  train_cmd->add_option("--embed-dim", train.model.embed_dim)->capture_default_str();
  train_cmd->add_option("--hidden-dim", train.model.hidden_dim)->capture_default_str();
  train_cmd->add_option("--latent-dim", train.model.latent_dim)->capture_default_str();
  train_cmd->add_option("--lr", train.train.lr)->capture_default_str();
  train_cmd->add_option("--batch", train.train.batch)->capture_default_str();
  train_cmd->add_option("--epochs", train.train.epochs, "epochs to run (added to a resumed run)")->capture_default_str();
  train_cmd->add_option("--beta-max", train.train.beta_max)->capture_default_str();
  train_cmd->add_option("--beta-anneal-steps", train.train.beta_anneal_steps)->capture_default_str();
  train_cmd->add_option("--grad-clip", train.train.grad_clip_norm)->capture_default_str();
  train_cmd->add_option("--seed", train.train.seed, "shuffling and sampling seed")->capture_default_str();
  train_cmd->add_option("--init-seed", train.init_seed)->capture_default_str();
  train_cmd->add_flag("--per-token-loss", train.per_token, "weight beta against the per-token cross-entropy");
  add_config(train_cmd);

  AnalyzeOptions analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "write the latent-space report bundle");
  analyze_cmd->add_option("--checkpoint", analyze.checkpoint)->required();
  analyze_cmd->add_option("--corpus", analyze.corpus)->required();
  analyze_cmd->add_option("--random-corpus", analyze.random_corpus);
  analyze_cmd->add_option("--out-dir", analyze.out_dir, "report directory")->required();
  analyze_cmd->add_option("--sigma-threshold", analyze.sigma_threshold)->capture_default_str();
  analyze_cmd->add_option("--activation-threshold", analyze.activation_threshold)->capture_default_str();
  analyze_cmd->add_option("--shown", analyze.shown, "dims shown in matrices (0: min(d, 100))")->capture_default_str();
  analyze_cmd->add_option("--top-neurons", analyze.top_neurons)->capture_default_str();
  analyze_cmd->add_option("--hist-bins", analyze.hist_bins)->capture_default_str();
  analyze_cmd->add_option("--lowess-frac", analyze.lowess_frac)->capture_default_str();
  analyze_cmd->add_option("--scatter", analyze.scatter, "NEURON:FEATURE, repeatable");
  analyze_cmd->add_option("--phik-bins", analyze.phik.n_bins)->capture_default_str();
  analyze_cmd->add_option("--phik-binning", analyze.binning)->check(CLI::IsMember({"width", "frequency"}))
      ->capture_default_str();
  analyze_cmd->add_option("--phik-min-expected", analyze.phik.min_expected_count)->capture_default_str();
  analyze_cmd->add_flag("!--no-phik-noise-correction", analyze.phik.noise_correction);
  add_config(analyze_cmd);

  RoundtripOptions rt;
  auto* rt_cmd = app.add_subcommand("roundtrip", "reconstruct one melody and sample variations");
  rt_cmd->add_option("--checkpoint", rt.checkpoint)->required();
  rt_cmd->add_option("--melody", rt.melody, "JSONL file with one melody")->required();
  rt_cmd->add_option("--out-dir", rt.out_dir)->required();
  rt_cmd->add_option("--k", rt.k, "sampled variations")->capture_default_str();
  rt_cmd->add_option("--seed", rt.seed)->capture_default_str();
  rt_cmd->add_option("--temperature", rt.temperature, "0 decodes greedily")->capture_default_str();
  add_config(rt_cmd);

  // Required options may come from the config file, so check them after it is applied.
  std::vector<std::pair<CLI::App*, CLI::Option*>> required;
  for (CLI::App* sub : app.get_subcommands({})) {
    for (CLI::Option* opt : sub->get_options()) {
      if (opt->get_required()) {
        opt->required(false);
        required.emplace_back(sub, opt);
      }
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }
  CLI::App* sub = app.get_subcommands().front();
  try {
    apply_config_file(sub, config_paths[sub]);
  } catch (const CLI::Error& e) {
    throw ll::ConfigError(e.what());
  }
  for (const auto& [owner, opt] : required) {
    if (owner == sub && opt->count() == 0) throw ll::ConfigError(opt->get_name() + " is required");
  }

  if (sub == ingest_cmd) return cmd_ingest(ingest, sub);
  if (sub == gen_cmd) return cmd_gen(gen, sub);
  if (sub == train_cmd) return cmd_train(train, sub);
  if (sub == analyze_cmd) return cmd_analyze(analyze, sub);
  return cmd_roundtrip(rt, sub);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ExitRequest& e) {
    std::cerr << "latent-lens: error: " << e.message << "\n";
    return e.code;
  } catch (const ll::NumericalError& e) {
    std::cerr << "latent-lens: numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ll::Error& e) {
    std::cerr << "latent-lens: error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "latent-lens: error: " << e.what() << "\n";
    return kExitInput;
  }
}

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


#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <vector>

#include "latent_lens/analysis.hpp"
#include "latent_lens/checkpoint.hpp"
#include "latent_lens/corpus.hpp"
#include "latent_lens/error.hpp"
#include "latent_lens/features.hpp"
#include "latent_lens/melody.hpp"
#include "latent_lens/midi.hpp"
#include "latent_lens/stats.hpp"
#include "latent_lens/vae.hpp"

namespace py = pybind11;
namespace ll = latent_lens;

namespace {

// Bar count follows the code length so a length mismatch surfaces as the
// model's ShapeError rather than a tokenization error.
ll::TokenSequence to_sequence(const std::vector<int>& codes) {
  const int bars = static_cast<int>(codes.size()) / ll::GridSpec::kStepsPerBar;
  return ll::TokenSequence::FromCodes(codes, bars);
}

std::vector<ll::TokenSequence> to_sequences(const std::vector<std::vector<int>>& codes) {
  std::vector<ll::TokenSequence> out;
  out.reserve(codes.size());
  for (const auto& c : codes) out.push_back(to_sequence(c));
  return out;
}

void bind_errors(py::module_& m) {
  // Translators run newest first, so bases are registered before subclasses.
  auto error = py::register_exception<ll::Error>(m, "Error");
  auto numerical = py::register_exception<ll::NumericalError>(m, "NumericalError", error);
  py::register_exception<ll::TrainingError>(m, "TrainingError", numerical);
  py::register_exception<ll::StructuralInputError>(m, "StructuralInputError", error);
  py::register_exception<ll::ParseError>(m, "ParseError", error);
  py::register_exception<ll::DomainError>(m, "DomainError", error);
  py::register_exception<ll::ShapeError>(m, "ShapeError", error);
  py::register_exception<ll::DegenerateError>(m, "DegenerateError", error);
  py::register_exception<ll::CheckpointError>(m, "CheckpointError", error);
  py::register_exception<ll::ConfigError>(m, "ConfigError", error);
}

void bind_melody(py::module_& m) {
  m.attr("VOCAB_SIZE") = ll::kVocabSize;
  m.attr("REST_CODE") = ll::kRestStartCode;
  m.attr("HOLD_CODE") = ll::kHoldCode;
  m.attr("STEPS_PER_BAR") = ll::GridSpec::kStepsPerBar;

  py::class_<ll::NoteSpan>(m, "NoteSpan")
      .def(py::init([](int pitch, int onset, int duration) {
             return ll::NoteSpan{ll::Pitch(pitch), onset, duration};
           }),
           py::arg("pitch"), py::arg("onset_step"), py::arg("duration_steps"))
      .def_property(
          "pitch", [](const ll::NoteSpan& s) { return s.pitch.value(); },
          [](ll::NoteSpan& s, int v) { s.pitch = ll::Pitch(v); })
      .def_readwrite("onset_step", &ll::NoteSpan::onset_step)
      .def_readwrite("duration_steps", &ll::NoteSpan::duration_steps)
      .def_property_readonly("end_step", &ll::NoteSpan::end_step)
      .def(py::self == py::self)
      .def("__repr__", [](const ll::NoteSpan& s) {
        return "NoteSpan(pitch=" + std::to_string(s.pitch.value()) +
               ", onset_step=" + std::to_string(s.onset_step) +
               ", duration_steps=" + std::to_string(s.duration_steps) + ")";
      });

  py::class_<ll::Melody>(m, "Melody")
      .def(py::init([](std::vector<ll::NoteSpan> spans, int bars, double tempo) {
             return ll::Melody{std::move(spans), bars, tempo};
           }),
           py::arg("spans") = std::vector<ll::NoteSpan>{}, py::arg("bars") = 2,
           py::arg("tempo_qpm") = 120.0)
      .def_readwrite("spans", &ll::Melody::spans)
      .def_readwrite("bars", &ll::Melody::bars)
      .def_readwrite("tempo_qpm", &ll::Melody::tempo_qpm)
      .def_property_readonly("total_steps", &ll::Melody::total_steps)
      .def(py::self == py::self)
      .def("__len__", [](const ll::Melody& mel) { return mel.spans.size(); });

  m.def("validate", py::overload_cast<const ll::Melody&>(&ll::validate), py::arg("melody"));
  m.def(
      "tokenize", [](const ll::Melody& mel) { return ll::tokenize(mel).codes(); }, py::arg("melody"),
      "Token codes (0..127 NoteOn, 128 rest, 129 hold), 16 per bar.");
  m.def(
      "detokenize",
      [](const std::vector<int>& codes, int bars, double tempo) {
        return ll::detokenize(ll::TokenSequence::FromCodes(codes, bars), tempo);
      },
      py::arg("codes"), py::arg("bars") = 2, py::arg("tempo_qpm") = 120.0);
}

void bind_midi(py::module_& m) {
  m.def(
      "write_midi",
      [](const ll::Melody& mel) {
        auto bytes = ll::write_midi(mel);
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
      },
      py::arg("melody"));
  m.def(
      "extract_melodies",
      [](py::bytes data, int bars, int max_per_file, int min_notes, bool require_four_four) {
        std::string s = data;
        std::span<const std::uint8_t> view(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
        ll::ExtractionConfig cfg;
        cfg.bars = bars;
        cfg.max_melodies_per_file = max_per_file;
        cfg.min_notes = min_notes;
        cfg.require_four_four = require_four_four;
        return ll::extract_melodies(ll::parse_midi(view), cfg);
      },
      py::arg("data"), py::arg("bars") = 2, py::arg("max_melodies_per_file") = 5,
      py::arg("min_notes") = 3, py::arg("require_four_four") = true);
}

void bind_corpus(py::module_& m) {
  py::class_<ll::RandomSeqConfig>(m, "RandomSeqConfig")
      .def(py::init<>())
      .def_readwrite("n_notes_min", &ll::RandomSeqConfig::n_notes_min)
      .def_readwrite("n_notes_max", &ll::RandomSeqConfig::n_notes_max)
      .def_readwrite("pitch_min", &ll::RandomSeqConfig::pitch_min)
      .def_readwrite("pitch_max", &ll::RandomSeqConfig::pitch_max)
      .def_readwrite("duration_s_min", &ll::RandomSeqConfig::duration_s_min)
      .def_readwrite("duration_s_max", &ll::RandomSeqConfig::duration_s_max)
      .def_readwrite("bars", &ll::RandomSeqConfig::bars);

  py::class_<ll::SyntheticConfig>(m, "SyntheticConfig")
      .def(py::init<>())
      .def_readwrite("key_root", &ll::SyntheticConfig::key_root)
      .def_readwrite("scale", &ll::SyntheticConfig::scale)
      .def_readwrite("step_bias", &ll::SyntheticConfig::step_bias)
      .def_readwrite("direction_persistence", &ll::SyntheticConfig::direction_persistence)
      .def_readwrite("rhythm_grid", &ll::SyntheticConfig::rhythm_grid)
      .def_readwrite("rhythm_consistency", &ll::SyntheticConfig::rhythm_consistency)
      .def_readwrite("rest_probability", &ll::SyntheticConfig::rest_probability)
      .def_readwrite("register_low", &ll::SyntheticConfig::register_low)
      .def_readwrite("register_high", &ll::SyntheticConfig::register_high)
      .def_readwrite("ambitus_degrees", &ll::SyntheticConfig::ambitus_degrees)
      .def_readwrite("bars", &ll::SyntheticConfig::bars)
      .def_readwrite("tempo_qpm", &ll::SyntheticConfig::tempo_qpm)
      .def_readwrite("seed", &ll::SyntheticConfig::seed);

  m.def("gen_random_corpus", &ll::gen_random_corpus, py::arg("config"), py::arg("n"), py::arg("seed"));
  m.def("gen_musical_corpus", &ll::gen_musical_corpus, py::arg("config"), py::arg("n"));
}

void bind_features(py::module_& m) {
  std::vector<std::string> names(ll::kFeatureNames.begin(), ll::kFeatureNames.end());
  m.attr("FEATURE_NAMES") = py::tuple(py::cast(names));
  m.def(
      "extract_features",
      [](const ll::Melody& mel) {
        const auto f = ll::extract_features(mel);
        return std::vector<double>(f.values.begin(), f.values.end());
      },
      py::arg("melody"));
  m.def("extract_corpus_features", &ll::extract_corpus_features, py::arg("corpus"));
}

void bind_stats(py::module_& m) {
  py::enum_<ll::Binning>(m, "Binning")
      .value("EQUAL_WIDTH", ll::Binning::kEqualWidth)
      .value("EQUAL_FREQUENCY", ll::Binning::kEqualFrequency);

  py::class_<ll::PhikConfig>(m, "PhikConfig")
      .def(py::init<>())
      .def_readwrite("n_bins", &ll::PhikConfig::n_bins)
      .def_readwrite("binning", &ll::PhikConfig::binning)
      .def_readwrite("noise_correction", &ll::PhikConfig::noise_correction)
      .def_readwrite("min_expected_count", &ll::PhikConfig::min_expected_count);

  m.def(
      "pearson",
      [](const std::vector<double>& x, const std::vector<double>& y) { return ll::pearson(x, y); },
      py::arg("x"), py::arg("y"));
  m.def(
      "phik",
      [](const std::vector<double>& x, const std::vector<double>& y, const ll::PhikConfig& cfg) {
        return ll::phik(x, y, cfg);
      },
      py::arg("x"), py::arg("y"), py::arg("config") = ll::PhikConfig{});
  m.def("phik_matrix", &ll::phik_matrix, py::arg("a"), py::arg("b"), py::arg("config") = ll::PhikConfig{});
}

void bind_model(py::module_& m) {
  py::enum_<ll::ReconReduction>(m, "ReconReduction")
      .value("PER_TOKEN", ll::ReconReduction::kPerToken)
      .value("PER_SEQUENCE", ll::ReconReduction::kPerSequence);

  py::class_<ll::ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_static("for_bars", &ll::ModelConfig::ForBars, py::arg("bars"))
      .def_readwrite("embed_dim", &ll::ModelConfig::embed_dim)
      .def_readwrite("hidden_dim", &ll::ModelConfig::hidden_dim)
      .def_readwrite("latent_dim", &ll::ModelConfig::latent_dim)
      .def_readwrite("seq_len", &ll::ModelConfig::seq_len)
      .def_readonly("vocab", &ll::ModelConfig::vocab)
      .def_property_readonly("bars", &ll::ModelConfig::bars)
      .def(py::self == py::self);

  py::class_<ll::TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("lr", &ll::TrainConfig::lr)
      .def_readwrite("batch", &ll::TrainConfig::batch)
      .def_readwrite("epochs", &ll::TrainConfig::epochs)
      .def_readwrite("beta_max", &ll::TrainConfig::beta_max)
      .def_readwrite("beta_anneal_steps", &ll::TrainConfig::beta_anneal_steps)
      .def_readwrite("grad_clip_norm", &ll::TrainConfig::grad_clip_norm)
      .def_readwrite("seed", &ll::TrainConfig::seed)
      .def_readwrite("reduction", &ll::TrainConfig::reduction)
      .def("beta_at", &ll::TrainConfig::beta_at, py::arg("step"));

  py::class_<ll::EpochStats>(m, "EpochStats")
      .def_readonly("epoch", &ll::EpochStats::epoch)
      .def_readonly("loss", &ll::EpochStats::loss)
      .def_readonly("recon_ce", &ll::EpochStats::recon_ce)
      .def_readonly("kl", &ll::EpochStats::kl)
      .def_readonly("median_sigma", &ll::EpochStats::median_sigma);

  py::class_<ll::TrainState>(m, "TrainState")
      .def(py::init<>())
      .def_readwrite("epochs_done", &ll::TrainState::epochs_done)
      .def_readwrite("step", &ll::TrainState::step);

  py::class_<ll::Params>(m, "Model")
      .def(py::init([](const ll::ModelConfig& cfg, std::uint64_t seed) { return ll::init_params(cfg, seed); }),
           py::arg("config") = ll::ModelConfig{}, py::arg("seed") = 0)
      .def_readonly("config", &ll::Params::config)
      .def_static(
          "load",
          [](const std::filesystem::path& path) {
            auto ck = ll::load_checkpoint(path);
            return py::make_tuple(std::move(ck.params), ck.state);
          },
          py::arg("path"), "Returns (model, train_state).")
      .def(
          "save",
          [](const ll::Params& p, const std::filesystem::path& path, const ll::TrainState& state) {
            ll::save_checkpoint(p, path, state);
          },
          py::arg("path"), py::arg("state") = ll::TrainState{})
      .def(
          "encode",
          [](const ll::Params& p, const std::vector<int>& codes) {
            auto enc = ll::encode(p, to_sequence(codes));
            return py::make_tuple(enc.mu, enc.sigma);
          },
          py::arg("codes"), "Returns (mu, sigma).")
      .def(
          "decode",
          [](const ll::Params& p, const Eigen::VectorXd& z, bool greedy, double temperature,
             std::uint64_t seed) {
            ll::Rng rng(seed);
            ll::DecodeOptions opts{greedy, temperature};
            return ll::decode(p, z, opts, &rng).codes();
          },
          py::arg("z"), py::arg("greedy") = true, py::arg("temperature") = 1.0, py::arg("seed") = 0)
      .def(
          "encode_corpus",
          [](const ll::Params& p, const std::vector<std::vector<int>>& codes) {
            auto lm = ll::encode_corpus(p, to_sequences(codes));
            return py::make_tuple(lm.mus, lm.sigmas);
          },
          py::arg("corpus"), "Returns (mus, sigmas), each n x latent_dim.")
      .def(
          "train",
          [](const ll::Params& p, const std::vector<std::vector<int>>& codes, const ll::TrainConfig& cfg,
             const ll::TrainState& start, const ll::EpochCallback& on_epoch) {
            auto seqs = to_sequences(codes);
            ll::TrainResult res;
            {
              py::gil_scoped_release release;
              ll::EpochCallback cb;
              if (on_epoch) {
                cb = [&on_epoch](const ll::EpochStats& s) {
                  py::gil_scoped_acquire acquire;
                  on_epoch(s);
                };
              }
              res = ll::train(p, seqs, cfg, start, cb);
            }
            return py::make_tuple(std::move(res.params), std::move(res.history), res.state);
          },
          py::arg("corpus"), py::arg("config") = ll::TrainConfig{}, py::arg("start") = ll::TrainState{},
          py::arg("on_epoch") = ll::EpochCallback{}, "Returns (trained_model, history, train_state).");
}

}  // namespace

PYBIND11_MODULE(_latent_lens, m) {
  m.doc() = "Latent-space analysis of a melody VAE.";
  bind_errors(m);
  bind_melody(m);
  bind_midi(m);
  bind_corpus(m);
  bind_features(m);
  bind_stats(m);
  bind_model(m);
}

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

#include "latent_lens/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace latent_lens {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'L', 'A', 'T', 'L', 'E', 'N', 'S', '\n'};

nlohmann::json config_json(const ModelConfig& c) {
  return {{"vocab", c.vocab},         {"embed_dim", c.embed_dim}, {"hidden_dim", c.hidden_dim},
          {"latent_dim", c.latent_dim}, {"seq_len", c.seq_len}};
}

template <class T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_raw(std::istream& in, const char* what) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw CheckpointError(std::string("truncated ") + what);
  return v;
}

}  // namespace

void save_checkpoint(const Params& p, const std::filesystem::path& path, const TrainState& state) {
  nlohmann::json header;
  header["cell"] = std::string(kCellType);
  header["config"] = config_json(p.config);
  header["state"] = {{"epochs_done", state.epochs_done}, {"step", state.step}};
  auto& list = header["tensors"] = nlohmann::json::array();
  for (const auto& t : tensors(p)) list.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
  const std::string text = header.dump();

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write " + tmp.string());
    out.write(kMagic, sizeof(kMagic));
    write_raw(out, kCheckpointVersion);
    write_raw(out, static_cast<std::uint64_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& t : tensors(p)) {
      out.write(reinterpret_cast<const char*>(t.data), static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!out) throw CheckpointError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<ModelConfig>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("not a latent-lens checkpoint (bad magic): " + path.string());
  }
  const auto version = read_raw<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = read_raw<std::uint64_t>(in, "header length");
  if (header_len > (1u << 24)) throw CheckpointError("implausible header length");
  std::string text(header_len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(header_len))) throw CheckpointError("truncated header");

  nlohmann::json header;
  ModelConfig cfg;
  Checkpoint ck;
  try {
    header = nlohmann::json::parse(text);
    if (header.at("cell").get<std::string>() != kCellType) {
      throw CheckpointError("unsupported cell type " + header.at("cell").get<std::string>());
    }
    const auto& c = header.at("config");
    cfg.vocab = c.at("vocab").get<int>();
    cfg.embed_dim = c.at("embed_dim").get<int>();
    cfg.hidden_dim = c.at("hidden_dim").get<int>();
    cfg.latent_dim = c.at("latent_dim").get<int>();
    cfg.seq_len = c.at("seq_len").get<int>();
    ck.state.epochs_done = header.at("state").at("epochs_done").get<int>();
    ck.state.step = header.at("state").at("step").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("invalid model config in checkpoint: ") + e.what());
  }
  if (expected && !(*expected == cfg)) {
    throw ShapeError("checkpoint model (embed " + std::to_string(cfg.embed_dim) + ", hidden " +
                     std::to_string(cfg.hidden_dim) + ", latent " + std::to_string(cfg.latent_dim) + ", seq_len " +
                     std::to_string(cfg.seq_len) + ") does not match the requested configuration");
  }

  ck.params = Params::Zeros(cfg);
  auto refs = tensors(ck.params);
  const auto& list = header.at("tensors");
  if (list.size() != refs.size()) throw CheckpointError("tensor count mismatch");
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (list[i].at("name").get<std::string>() != refs[i].name || list[i].at("rows").get<Eigen::Index>() != refs[i].rows ||
        list[i].at("cols").get<Eigen::Index>() != refs[i].cols) {
      throw CheckpointError("tensor " + std::string(refs[i].name) + " has an unexpected name or shape");
    }
    if (!in.read(reinterpret_cast<char*>(refs[i].data), static_cast<std::streamsize>(refs[i].size() * sizeof(double)))) {
      throw CheckpointError("truncated tensor data for " + std::string(refs[i].name));
    }
  }
  return ck;
}

}  // namespace latent_lens

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

// Binary checkpoint container:
//
//   8 bytes   magic "LATLENS\n"
//   u32 LE    format version (1)
//   u64 LE    header length N
//   N bytes   JSON header: {"cell", "config", "state", "tensors": [{name, rows, cols}]}
//   ...       tensor data, IEEE-754 binary64 little-endian, column-major, in header order

#ifndef LATENT_LENS_CHECKPOINT_HPP_
#define LATENT_LENS_CHECKPOINT_HPP_

#include <filesystem>
#include <optional>

#include "latent_lens/vae.hpp"

namespace latent_lens {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Params params;
  TrainState state;
};

void save_checkpoint(const Params& p, const std::filesystem::path& path, const TrainState& state = {});

// Throws CheckpointError on a bad magic, version, cell type or truncated data,
// and ShapeError when `expected` is given and its dimensions differ.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<ModelConfig>& expected = std::nullopt);

}  // namespace latent_lens

#endif  // LATENT_LENS_CHECKPOINT_HPP_

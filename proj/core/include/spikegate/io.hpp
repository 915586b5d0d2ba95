// Copyright 2026 The spikegate Authors
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


#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spikegate/events.hpp"
#include "spikegate/gatenet.hpp"
#include "spikegate/tensor.hpp"
#include "spikegate/train.hpp"

namespace spikegate::io {

// CT01: "CT01", u8 dtype (1 = f32), u32 rank, rank x u32 extents, f32
// payload; all little-endian, row-major.
inline constexpr std::uint8_t kDtypeF32 = 1;

std::string encode_ct01(const Tensor& t);
Tensor decode_ct01(const std::string& bytes);
void write_ct01(const std::filesystem::path& path, const Tensor& t);
Tensor read_ct01(const std::filesystem::path& path);

struct ManifestEntry {
  std::string id;
  std::string clip;       // relative to the manifest directory
  std::string embedding;  // may be empty
  int label = 0;
  std::uint64_t seed = 0;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
};

inline constexpr const char* kManifestName = "manifest.json";

std::string manifest_json(const Manifest& m);
Manifest parse_manifest(const std::string& text);
void write_manifest(const std::filesystem::path& dir, const Manifest& m);
Manifest read_manifest(const std::filesystem::path& dir);

/// Everything a run needs: model (with its LIF and event settings) and
/// training hyperparameters.
struct RunConfig {
  gatenet::GateNetConfig model = gatenet::GateNetConfig::desk();
  train::TrainConfig train{};
};

/// JSON with sections "model", "lif", "events" and "train". Unknown keys
/// anywhere raise FormatError; missing keys keep their defaults.
std::string run_config_json(const RunConfig& c);
RunConfig parse_run_config(const std::string& text);
RunConfig read_run_config(const std::filesystem::path& path);

/// Binary checkpoint: "SGCK", u32 version, u64 header length, JSON header
/// (model config, epoch, parameter table), then f64 little-endian values.
std::string encode_checkpoint(const gatenet::GateNet& net, std::size_t epoch);
void write_checkpoint(const std::filesystem::path& path, const gatenet::GateNet& net,
                      std::size_t epoch);

struct LoadedCheckpoint {
  gatenet::GateNetConfig config;
  std::size_t epoch = 0;
  std::vector<std::string> names;
  std::vector<Tensor> values;
};

LoadedCheckpoint decode_checkpoint(const std::string& bytes);
LoadedCheckpoint read_checkpoint(const std::filesystem::path& path);
/// Copies checkpoint values into a network built from the same config.
void load_into(gatenet::GateNet& net, const LoadedCheckpoint& ck);

/// Clip-level embedding used by the fused head: mean of all patch tokens.
Tensor video_summary(const Tensor& patches);

/// Reads one manifest entry as a clip plus (optional) embeddings.
events::Clip load_clip(const std::filesystem::path& dir, const ManifestEntry& e);
std::optional<events::EmbeddingSequence> load_embeddings(const std::filesystem::path& dir,
                                                         const ManifestEntry& e);

/// Loads and pools every manifest entry.
std::vector<train::Sample> load_samples(const std::filesystem::path& dir,
                                        const gatenet::GateNetConfig& config);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace spikegate::io

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


// Synthetic clips with the two temporal signatures the gate is meant to
// pick up: natural footage carries independent per-frame sensor flicker
// and free motion; generated footage is a smooth blend between keyframes.

#pragma once

#include <cstdint>
#include <filesystem>

#include "spikegate/events.hpp"
#include "spikegate/io.hpp"

namespace spikegate::synthgen {

enum class SynthClass { kNatural, kGenerated };

/// Label stored for a class: natural = 0 (real), generated = 1 (fake).
int label_of(SynthClass c);

struct SynthSpec {
  SynthClass cls = SynthClass::kNatural;
  std::size_t frames = 8;
  std::size_t size = 56;      // H = W
  double speed = 1.5;         // pixels / frame
  double flicker = 0.08;      // per-pixel, per-frame noise amplitude (natural)
  double texture_scale = 9.0; // background texture period in pixels
  double smoothness = 1.0;    // 0: linear blend, 1: smoothstep (generated)
  /// Fraction of the clip the generated class holds its first keyframe
  /// before the blend starts (late-onset dynamics).
  double onset = 0.3;
  std::uint64_t seed = 0;     // content seed, shared by a natural/generated pair

  void validate() const;
};

events::Clip gen_clip(const SynthSpec& spec);

/// Per-frame patch tokens [T, N, D] (N a perfect square) plus the clip-level
/// summary vector. Motion scales with `speed`; speed 0 gives constant tokens.
events::EmbeddingSequence gen_embeddings(const SynthSpec& spec, std::size_t dim = 32,
                                         std::size_t tokens = 196);

struct DatasetOptions {
  std::size_t n_per_class = 2;
  std::size_t dim = 32;
  std::size_t tokens = 196;
  std::uint64_t seed = 0;  // clip i of either class uses content seed seed + i
};

/// Writes clips/, emb/ and the manifest into `out_dir`. Entries alternate
/// natural/generated on shared content seeds.
io::Manifest make_dataset(const SynthSpec& base, const DatasetOptions& opts,
                          const std::filesystem::path& out_dir);

}  // namespace spikegate::synthgen

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

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "spikegate/tape.hpp"
#include "spikegate/tensor.hpp"

namespace spikegate::events {

/// A decoded clip. frames: [T, H, W, 3] in [0, 1].
struct Clip {
  Tensor frames;
  int label = 0;  // 0 = real, 1 = fake
  std::string source;
  double fps = 8.0;

  std::size_t num_frames() const { return frames.dim(0); }
  std::size_t height() const { return frames.dim(1); }
  std::size_t width() const { return frames.dim(2); }
  /// Throws FormatError unless T >= 2, the layout is [T,H,W,3] and all
  /// values lie in [0, 1].
  void validate() const;
};

/// Per-frame patch tokens [T, N, D] and an optional clip-level vector [D].
struct EmbeddingSequence {
  Tensor patches;
  std::optional<Tensor> video;

  std::size_t num_frames() const { return patches.dim(0); }
  std::size_t num_tokens() const { return patches.dim(1); }
  std::size_t dim() const { return patches.dim(2); }
  void validate() const;
};

enum class ResidualKind { kHF, kSobel, kAbsDiff, kDiff2, kChroma };

const char* residual_name(ResidualKind kind);

struct EventConfig {
  double c_th = 0.10;
  double beta = 0.025;
  std::size_t grid = 14;
  double tau_post = 0.1;
  double s_post = 0.05;
  /// Stack the optional post sigmoid((x - tau_post)/s_post) in front of the
  /// soft threshold on the network input path. Off: the soft threshold is
  /// the only squashing stage.
  bool post_sigmoid = false;

  /// beta tied to the contrast threshold: max(c_th / 4, 1e-6).
  static double derived_beta(double c_th);
  void validate() const;
};

/// w_c such that softplus(w_c) = 1.
double identity_scale_logit();

/// Event grid [T, C, G, G] in [0, 1]; frame 0 is zero.
struct EventTensor {
  Tensor values;
  std::vector<std::string> channel_names;

  std::size_t num_frames() const { return values.dim(0); }
  std::size_t num_channels() const { return values.dim(1); }
};

/// BT.601 luma [T, H, W].
Tensor to_luma(const Clip& clip);

/// Temporal residual maps. HF, Sobel, AbsDiff, Chroma give [T-1, H, W];
/// Diff2 gives [T-2, H, W].
Tensor compute_residual(ResidualKind kind, const Clip& clip);

/// Standard adaptive average pooling of [T, H, W] maps to [T, G, G].
Tensor adaptive_avg_pool(const Tensor& maps, std::size_t grid);

/// Left-pads a [T', ...] stack with zero frames up to `frames`.
Tensor left_pad_frames(const Tensor& maps, std::size_t frames);

/// Divides a [T, ...] stack by the mean over frames >= first_valid (+1e-8).
Tensor normalize_temporal_mean(const Tensor& maps, std::size_t first_valid);

/// sigmoid((delta - c_th) / beta), elementwise.
Tensor soft_threshold(const Tensor& delta, double c_th, double beta);
Var soft_threshold(Var delta, double c_th, double beta);

/// Full per-channel post-processing of a frame-aligned raw stack [T, H, W]:
/// temporal-mean normalization, pooling to G, softplus(w_c) gain,
/// sigmoid((x - tau_post)/s_post), frame-0 mask. Output [T, G, G].
Tensor postprocess_channel(const Tensor& raw, const EventConfig& config,
                           std::size_t first_valid = 1, double w_c = identity_scale_logit());

struct Trajectory {
  Tensor displacement;  // [T, G, G], frame 0 zero
  Tensor curvature;     // [T, G, G], frames 0 and 1 zero
};

/// Per-token displacement norms and turning angles, mapped row-major to
/// the G x G grid.
Trajectory trajectory_channels(const EmbeddingSequence& emb);

/// Normalized and pooled maps, before the learnable gain. The taped tail
/// (gain, optional post sigmoid, soft threshold, mask) is applied per channel by
/// `event_channel`, so the gain can be trained without recomputing residuals.
struct PooledEvents {
  Tensor maps;  // [C, T, G, G]
  std::vector<std::string> channel_names;

  std::size_t num_channels() const { return maps.dim(0); }
  std::size_t num_frames() const { return maps.dim(1); }
  std::size_t grid() const { return maps.dim(2); }
};

/// Pixel channels HF, Sobel, AbsDiff, Diff2, plus displacement and
/// curvature when embeddings are given.
PooledEvents pool_events(const Clip& clip, const EmbeddingSequence* emb,
                         const EventConfig& config);

/// Taped event channel c: [T, G, G]. `w_c` is a scalar.
Var event_channel(Tape& tape, const PooledEvents& pooled, std::size_t c, Var w_c,
                  const EventConfig& config);

/// Untaped event tensor. `w_scale` holds one gain logit per channel; null
/// means identity gains.
EventTensor assemble_event_tensor(const Clip& clip, const EmbeddingSequence* emb,
                                  const EventConfig& config, const Tensor* w_scale = nullptr);

}  // namespace spikegate::events

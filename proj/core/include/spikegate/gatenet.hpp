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
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "spikegate/events.hpp"
#include "spikegate/snn.hpp"
#include "spikegate/tape.hpp"

namespace spikegate::gatenet {

struct GateNetConfig {
  std::size_t channels = 6;     // C: 4 pixel residuals + 2 trajectory channels
  std::size_t grid = 14;        // G
  std::size_t frames = 8;       // T
  std::size_t dim = 64;         // d
  std::size_t depth = 2;        // spike blocks
  std::size_t heads = 4;
  double mlp_ratio = 2.5;
  std::size_t stem_width = 8;   // D_c
  /// Width multiplier between the two pointwise convolutions of the
  /// separable convolution. 1 gives depthwise -> pointwise.
  std::size_t sepconv_expansion = 1;
  double gate_bias = -2.0;
  double gate_tau = 1.0;
  double acc_tau = 2.0;
  double acc_lambda = 0.5;
  /// Attention scale; <= 0 selects 1/sqrt(d / heads).
  double attn_scale = 0.0;
  std::size_t proj_width = 64;  // widths of F_anom and F_gate
  std::size_t head_hidden = 64;
  std::size_t video_dim = 0;    // 0: no clip-level embedding in the fused head
  bool learnable_lif = true;
  snn::LifOptions lif{};
  events::EventConfig events{};

  /// d = 64, depth 2, D_c = 8.
  static GateNetConfig desk();
  /// d = 256, depth 8, D_c = 20, doubled separable-conv width.
  static GateNetConfig paper();

  std::size_t head_dim() const { return dim / heads; }
  std::size_t mlp_hidden() const;
  double effective_attn_scale() const;
  std::size_t tokens() const { return frames * grid * grid; }
  void validate() const;
};

/// Affine map x W + b over the last axis; x: [n, in].
struct Linear {
  Parameter* weight = nullptr;  // [in, out]
  Parameter* bias = nullptr;    // [out] or null
  Var operator()(Var x) const;
};

/// Per-channel affine (folded batch norm) over the last axis.
struct Affine {
  Parameter* scale = nullptr;
  Parameter* shift = nullptr;
  Var operator()(Var x) const;
};

struct StemParams {
  snn::LifChannelParams lif;
  Parameter* conv = nullptr;  // [D_c, 3, 3, 1]
  Affine norm;
};

struct BlockParams {
  Linear sep_expand;          // only when expansion > 1
  Parameter* sep_dw = nullptr;  // [e*d, 3, 3]
  Linear sep_project;
  Affine sep_norm;
  Linear q, k, v, out;
  Linear fc1, fc2;
};

struct HeadParams {
  Linear fc1, fc2;
};

/// Output of the spiking branch for one clip.
struct GateOutput {
  Var gates;      // [T, G, G] in (0, 1)
  Var stats;      // [T, 2]: per-frame (mean, max)
  Var trace;      // [T] anomaly trace
  Var f_anom;     // [1, proj_width]
  Var f_gate;     // [1, proj_width]
  Var features;   // [1, 2 * proj_width] = F_anom || F_gate
};

struct Prediction {
  Var fused;   // [1, F] = Z_video || F_anom || F_gate
  Var y_hat;   // scalar probability of the main head
  Var y_snn;   // scalar probability of the auxiliary head
};

/// Linear attention per head: out_h = scale * Q_h (K_h^T V_h).
/// q, k, v: [N, d] -> [N, d]. K^T V is formed first.
Var linear_attention(Var q, Var k, Var v, std::size_t heads, double scale);

/// A[t] = (1 - 1/tau_a) A[t-1] + lambda * g[t], A[-1] = 0.
std::vector<double> anomaly_accumulator(const std::vector<double>& gbar, double tau_a,
                                        double lambda);
Var anomaly_accumulator(Var gbar, double tau_a, double lambda);

class GateNet {
 public:
  GateNet(const GateNetConfig& config, std::uint64_t seed);

  const GateNetConfig& config() const { return config_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  /// Runs stages 1-5 for one clip. Spike sites are reported to `monitor`.
  GateOutput encode(Tape& tape, const events::PooledEvents& pooled,
                    snn::SpikeMonitor* monitor = nullptr);
  /// Fused and auxiliary heads on encoded features. `video` may be invalid
  /// (SDTB-only mode).
  Prediction classify(Tape& tape, Var features, Var video);

  // Individual stages, exposed for inspection and tests.
  Var event_channels(Tape& tape, const events::PooledEvents& pooled, std::size_t c);
  /// [T, G, G] events per channel -> [T*G*G, C*D_c].
  Var stage1(Tape& tape, const std::vector<Var>& channel_events, snn::SpikeMonitor* monitor);
  /// [N, C*D_c] -> [N, d].
  Var stage2(Var stem);
  Var sepconv(std::size_t block, Var u, snn::SpikeMonitor* monitor);
  Var spike_attention(std::size_t block, Var u, snn::SpikeMonitor* monitor);
  Var spike_mlp(std::size_t block, Var u, snn::SpikeMonitor* monitor);
  Var spike_block(std::size_t block, Var u, snn::SpikeMonitor* monitor);
  /// [N, d] -> gates [T, G, G].
  Var gate_head(Tape& tape, Var u);

  snn::LifChannelParams& lif(std::size_t c) { return stems_.at(c).lif; }
  /// Projects every LIF parameter back into its clamp range.
  void clamp_params();
  std::size_t num_blocks() const { return blocks_.size(); }

  /// Parameters of the auxiliary head (used for collapse detection).
  std::vector<const Parameter*> aux_head_params() const;

 private:
  Parameter& make(const std::string& name, Shape shape, double limit, bool learnable = true);
  Linear make_linear(const std::string& name, std::size_t in, std::size_t out, bool zero = false,
                     bool bias = true);
  Affine make_affine(const std::string& name, std::size_t width);
  Var spike(Var x, snn::SpikeMonitor* monitor);

  GateNetConfig config_;
  ParameterSet params_;
  std::mt19937_64 rng_;
  Parameter* event_gain_ = nullptr;
  std::vector<StemParams> stems_;
  Linear fuse_;
  Affine fuse_norm_;
  std::vector<BlockParams> blocks_;
  Parameter* gate_weight_ = nullptr;
  Parameter* gate_bias_ = nullptr;
  Linear proj_anom_, proj_gate_;
  HeadParams head_, aux_;
};

}  // namespace spikegate::gatenet

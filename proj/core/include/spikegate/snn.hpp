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

#include <optional>
#include <vector>

#include "spikegate/tape.hpp"

namespace spikegate::snn {

/// Number of integer firing levels; spikes take values in {0, ..., kLevels}.
inline constexpr int kLevels = 4;
/// ATan surrogate sharpness.
inline constexpr double kSurrogateAlpha = 2.0;

/// Recovery bases and clamp ranges for the log-domain LIF parameters.
struct LifBounds {
  double tau_base = 2.0;
  double vth_base = 1.0;
  double tau_min = 0.5;
  double tau_max = 20.0;
  double vth_min = 0.05;
  double vth_max = 10.0;
};

enum class ResetMode { kSoft, kHard };

/// kMultispike: L-level rounding spike (network default).
/// kHeaviside: binary s = 1[v >= v_th], the single-level LIF.
enum class FiringMode { kMultispike, kHeaviside };

/// Options of a LIF integration run.
struct LifOptions {
  ResetMode reset = ResetMode::kSoft;
  FiringMode firing = FiringMode::kMultispike;
  LifBounds bounds{};
};

/// floor(clamp(v / v_th, 0, levels) + 0.5). Half-integers round up.
int multispike_forward(double v, double v_th, int levels = kLevels);

/// Sum of ATan kernels centred on the thresholds k + 1/2, k = 0..levels-1,
/// gated to 0 < v / v_th < levels. The backward pass multiplies it by
/// 1 / v_th to form ds/dv.
double multispike_surrogate(double v, double v_th, double alpha = kSurrogateAlpha,
                            int levels = kLevels);

/// Taped multispike with a fixed threshold.
Var multispike(Var v, double v_th = 1.0, double alpha = kSurrogateAlpha, int levels = kLevels);
/// Taped multispike with a learnable scalar threshold; gradients reach v_th
/// through the surrogate.
Var multispike(Var v, Var v_th, double alpha = kSurrogateAlpha, int levels = kLevels);

/// Collects every multispike output of a forward pass to form the
/// network-wide normalized firing rate mean(s / L).
class SpikeMonitor {
 public:
  void add(Var spikes);
  std::size_t sites() const { return sites_; }
  /// Rate as a taped scalar (differentiable through the surrogates).
  Var rate() const;
  /// Rate as a plain number.
  double rate_value() const;
  /// Taped sum of all recorded spike counts.
  Var total() const;
  int levels() const { return levels_; }
  const std::vector<Var>& records() const { return records_; }

 private:
  std::vector<Var> records_;
  std::size_t sites_ = 0;
  int levels_ = kLevels;
};

/// Learnable log-domain time constant and threshold of one channel.
struct LifChannelParams {
  Parameter* theta_tau = nullptr;
  Parameter* theta_vth = nullptr;
};

/// Recovered (tau, v_th) after clamping; plain values.
double recovered_tau(const LifChannelParams& p, const LifBounds& b = {});
double recovered_vth(const LifChannelParams& p, const LifBounds& b = {});

/// Projects the stored log-parameters so the unclamped recovered values lie
/// inside the clamp ranges.
void clamp_params(LifChannelParams& p, const LifBounds& b = {});

struct LifResult {
  Var spikes;               // [T, ...] values in {0..L}
  Tensor final_membrane;    // post-reset membrane after the last step
};

/// Runs v_t = (1 - 1/tau) v_{t-1} + x_t, s_t = Multispike(v_t, v_th) and the
/// reset over the leading (time) axis of `input`. The reset treats s_t as a
/// constant in the backward pass.
LifResult lif_sequence(Var input, const LifChannelParams& params, const LifOptions& opts = {},
                       const Tensor* initial_membrane = nullptr,
                       SpikeMonitor* monitor = nullptr);

/// Same dynamics with fixed scalar tau / v_th (no learnable parameters,
/// no clamping).
LifResult lif_sequence(Var input, double tau, double v_th, const LifOptions& opts = {},
                       const Tensor* initial_membrane = nullptr,
                       SpikeMonitor* monitor = nullptr);

/// Binary firing 1[v >= v_th] with a single ATan kernel at the threshold.
Var heaviside_spike(Var v, Var v_th, double alpha = kSurrogateAlpha);

}  // namespace spikegate::snn

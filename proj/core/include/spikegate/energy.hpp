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

#include <string>
#include <vector>

#include "spikegate/gatenet.hpp"
#include "spikegate/train.hpp"

namespace spikegate::energy {

/// 45 nm CMOS reference energies, picojoules per 32-bit operation.
inline constexpr double kEnergyMacPj = 4.6;
inline constexpr double kEnergyAcPj = 0.9;
/// Frozen video backbone cost per clip (FLOPs), taken as a constant.
inline constexpr double kBackboneFlops = 281.2e9;

enum class GateKind {
  kSnn,  // spike-driven gate: separable conv, linear attention
  kAnn,  // matched dense gate: depthwise conv stem, softmax attention
};

struct StageOps {
  std::string stage;
  double ops = 0.0;
};

/// Analytic dense multiply-accumulate counts per clip (all T frames).
struct OpCount {
  std::vector<StageOps> stages;
  double total() const;
  /// Sum over stages whose name ends in ".attention".
  double attention() const;
};

/// c_in c_out k^2 h w.
double conv_macs(double c_in, double c_out, double k, double h, double w);

OpCount count_dense_ops(const gatenet::GateNetConfig& config, GateKind kind);

struct FiringRate {
  double spike_mean = 0.0;   // mean of s / L over every spike site
  double gate_active = 0.0;  // fraction of gate cells > 0.5
  std::size_t clips = 0;
};

FiringRate measure_firing_rate(gatenet::GateNet& net, const std::vector<train::Sample>& clips);
/// mean(s / levels) over hand-supplied spike tensors.
double spike_fraction(const std::vector<Tensor>& spikes, int levels);

double snn_energy_mj(double sops);
double ann_energy_mj(double macs);

struct EnergyReport {
  OpCount snn_dense;
  OpCount ann_macs;
  FiringRate rate;
  double sops = 0.0;       // snn dense x spike_mean
  double sops_gate = 0.0;  // snn dense x gate_active
  double energy_snn_mj = 0.0;
  double energy_snn_gate_mj = 0.0;
  double energy_ann_mj = 0.0;
  double backbone_flops = kBackboneFlops;
  double energy_backbone_mj = 0.0;
  double e_mac_pj = kEnergyMacPj;
  double e_ac_pj = kEnergyAcPj;
};

EnergyReport energy_report(const OpCount& snn_dense, const OpCount& ann_macs,
                           const FiringRate& rate);
EnergyReport energy_report(const gatenet::GateNetConfig& config, const FiringRate& rate);

std::string report_json(const EnergyReport& r);
/// stage,snn_dense_ops,snn_sops,ann_macs rows; stages missing on one side
/// are reported as 0.
std::string stage_csv(const EnergyReport& r);

}  // namespace spikegate::energy

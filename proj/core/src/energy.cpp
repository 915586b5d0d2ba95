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


#include "spikegate/energy.hpp"

#include <cstdio>
#include <map>

#include <json.hpp>

#include "spikegate/error.hpp"

namespace spikegate::energy {

double OpCount::total() const {
  double s = 0.0;
  for (const StageOps& st : stages) s += st.ops;
  return s;
}

double OpCount::attention() const {
  double s = 0.0;
  for (const StageOps& st : stages) {
    if (st.stage.ends_with(".attention")) s += st.ops;
  }
  return s;
}

double conv_macs(double c_in, double c_out, double k, double h, double w) {
  return c_in * c_out * k * k * h * w;
}

OpCount count_dense_ops(const gatenet::GateNetConfig& c, GateKind kind) {
  c.validate();
  const double g = static_cast<double>(c.grid), t = static_cast<double>(c.frames);
  const double n = static_cast<double>(c.tokens());
  const double d = static_cast<double>(c.dim), heads = static_cast<double>(c.heads);
  const double dc = static_cast<double>(c.stem_width), ch = static_cast<double>(c.channels);
  OpCount out;
  out.stages.push_back({"stem", ch * t * conv_macs(1, dc, 3, g, g)});
  out.stages.push_back({"fusion", t * conv_macs(ch * dc, d, 1, g, g)});
  for (std::size_t b = 0; b < c.depth; ++b) {
    const std::string p = "block" + std::to_string(b);
    double conv = 0.0, attn = 3.0 * d * d * n + d * d * n;  // q, k, v, out projections
    if (kind == GateKind::kSnn) {
      const double e = static_cast<double>(c.sepconv_expansion);
      if (c.sepconv_expansion > 1) conv += d * e * d * n;
      conv += 9.0 * e * d * n + e * d * d * n;
      attn += 2.0 * n * d * d / heads;  // K^T V, then Q (K^T V)
    } else {
      conv += 9.0 * d * n;        // depthwise 3x3 conv stem
      attn += 2.0 * n * n * d;    // Q K^T and A V
    }
    out.stages.push_back({p + ".sepconv", conv});
    out.stages.push_back({p + ".attention", attn});
    out.stages.push_back({p + ".mlp", 2.0 * d * static_cast<double>(c.mlp_hidden()) * n});
  }
  out.stages.push_back({"gate", d * n});
  const double pw = static_cast<double>(c.proj_width), hh = static_cast<double>(c.head_hidden);
  const double fused = static_cast<double>(c.video_dim) + 2.0 * pw;
  out.stages.push_back({"heads", t * pw + 2.0 * t * pw + fused * hh + hh + 2.0 * pw * hh + hh});
  return out;
}

FiringRate measure_firing_rate(gatenet::GateNet& net, const std::vector<train::Sample>& clips) {
  if (clips.empty()) throw ArgumentError("measure_firing_rate: no clips");
  train::Scores s = train::predict(net, clips);
  return {s.spike_rate, s.gate_active, clips.size()};
}

double spike_fraction(const std::vector<Tensor>& spikes, int levels) {
  if (levels <= 0) throw ArgumentError("spike_fraction: levels must be positive");
  double total = 0.0, sites = 0.0;
  for (const Tensor& s : spikes) {
    for (double v : s.values()) total += v;
    sites += static_cast<double>(s.size());
  }
  return sites > 0.0 ? total / (levels * sites) : 0.0;
}

// ops x pJ -> mJ.
double snn_energy_mj(double sops) { return sops * kEnergyAcPj * 1e-9; }
double ann_energy_mj(double macs) { return macs * kEnergyMacPj * 1e-9; }

EnergyReport energy_report(const OpCount& snn_dense, const OpCount& ann_macs,
                           const FiringRate& rate) {
  for (double v : {rate.spike_mean, rate.gate_active}) {
    if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError("energy_report: rates must lie in [0, 1]");
  }
  EnergyReport r;
  r.snn_dense = snn_dense;
  r.ann_macs = ann_macs;
  r.rate = rate;
  r.sops = snn_dense.total() * rate.spike_mean;
  r.sops_gate = snn_dense.total() * rate.gate_active;
  r.energy_snn_mj = snn_energy_mj(r.sops);
  r.energy_snn_gate_mj = snn_energy_mj(r.sops_gate);
  r.energy_ann_mj = ann_energy_mj(ann_macs.total());
  r.energy_backbone_mj = ann_energy_mj(r.backbone_flops);
  return r;
}

EnergyReport energy_report(const gatenet::GateNetConfig& config, const FiringRate& rate) {
  return energy_report(count_dense_ops(config, GateKind::kSnn),
                       count_dense_ops(config, GateKind::kAnn), rate);
}

std::string report_json(const EnergyReport& r) {
  using nlohmann::json;
  auto stages = [](const OpCount& c) {
    json a = json::array();
    for (const StageOps& s : c.stages) a.push_back(json{{"stage", s.stage}, {"ops", s.ops}});
    return a;
  };
  json j{{"snn",
          {{"dense_ops", r.snn_dense.total()},
           {"attention_ops", r.snn_dense.attention()},
           {"firing_rate", r.rate.spike_mean},
           {"gate_active_rate", r.rate.gate_active},
           {"sops", r.sops},
           {"sops_gate_rate", r.sops_gate},
           {"energy_mj", r.energy_snn_mj},
           {"energy_gate_rate_mj", r.energy_snn_gate_mj},
           {"stages", stages(r.snn_dense)}}},
         {"ann",
          {{"macs", r.ann_macs.total()},
           {"attention_macs", r.ann_macs.attention()},
           {"energy_mj", r.energy_ann_mj},
           {"stages", stages(r.ann_macs)}}},
         {"backbone", {{"flops", r.backbone_flops}, {"energy_mj", r.energy_backbone_mj}}},
         {"constants", {{"e_mac_pj", r.e_mac_pj}, {"e_ac_pj", r.e_ac_pj}}},
         {"clips", r.rate.clips}};
  return j.dump(2) + "\n";
}

std::string stage_csv(const EnergyReport& r) {
  std::vector<std::string> order;
  std::map<std::string, std::pair<double, double>> rows;
  for (const StageOps& s : r.snn_dense.stages) {
    if (!rows.count(s.stage)) order.push_back(s.stage);
    rows[s.stage].first = s.ops;
  }
  for (const StageOps& s : r.ann_macs.stages) {
    if (!rows.count(s.stage)) order.push_back(s.stage);
    rows[s.stage].second = s.ops;
  }
  std::string out = "stage,snn_dense_ops,snn_sops,ann_macs\n";
  char buf[256];
  for (const std::string& s : order) {
    const auto& [snn, ann] = rows[s];
    std::snprintf(buf, sizeof buf, "%s,%.6e,%.6e,%.6e\n", s.c_str(), snn, snn * r.rate.spike_mean,
                  ann);
    out += buf;
  }
  return out;
}

}  // namespace spikegate::energy

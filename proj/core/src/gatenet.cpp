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


#include "spikegate/gatenet.hpp"

#include <Eigen/Core>

#include <cmath>

#include "spikegate/error.hpp"
#include "spikegate/ops.hpp"

namespace spikegate::gatenet {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

ConstMatrixMap view(const Tensor& t) {
  return ConstMatrixMap(t.data(), static_cast<Eigen::Index>(t.dim(0)),
                        static_cast<Eigen::Index>(t.dim(1)));
}

MatrixMap view(Tensor& t) {
  return MatrixMap(t.data(), static_cast<Eigen::Index>(t.dim(0)),
                   static_cast<Eigen::Index>(t.dim(1)));
}

}  // namespace

GateNetConfig GateNetConfig::desk() { return GateNetConfig{}; }

GateNetConfig GateNetConfig::paper() {
  GateNetConfig c;
  c.dim = 256;
  c.depth = 8;
  c.stem_width = 20;
  c.sepconv_expansion = 2;
  return c;
}

std::size_t GateNetConfig::mlp_hidden() const {
  return static_cast<std::size_t>(std::lround(mlp_ratio * static_cast<double>(dim)));
}

double GateNetConfig::effective_attn_scale() const {
  return attn_scale > 0.0 ? attn_scale : 1.0 / std::sqrt(static_cast<double>(head_dim()));
}

void GateNetConfig::validate() const {
  if (channels == 0 || grid == 0 || frames == 0 || dim == 0 || heads == 0 || stem_width == 0) {
    throw ArgumentError("gatenet config: extents must be positive");
  }
  if (dim % heads != 0) throw ArgumentError("gatenet config: dim must be divisible by heads");
  if (!(mlp_ratio > 0.0)) throw ArgumentError("gatenet config: mlp_ratio must be positive");
  if (sepconv_expansion == 0) throw ArgumentError("gatenet config: sepconv_expansion >= 1");
  if (!(gate_tau > 0.0)) throw ArgumentError("gatenet config: gate_tau must be positive");
  if (!(acc_tau > 0.0)) throw ArgumentError("gatenet config: acc_tau must be positive");
  if (proj_width == 0 || head_hidden == 0) throw ArgumentError("gatenet config: head widths");
  if (events.grid != grid) throw ArgumentError("gatenet config: event grid differs from grid");
  events.validate();
}

Var Linear::operator()(Var x) const {
  Tape& tape = x.tape();
  Var y = matmul(x, tape.param(*weight));
  return bias ? add(y, tape.param(*bias)) : y;
}

Var Affine::operator()(Var x) const {
  Tape& tape = x.tape();
  return add(mul(x, tape.param(*scale)), tape.param(*shift));
}

Var linear_attention(Var q, Var k, Var v, std::size_t heads, double scale) {
  const Tensor& qv = q.value();
  if (qv.rank() != 2 || k.shape() != qv.shape() || v.shape() != qv.shape()) {
    throw ShapeError("linear_attention: q, k, v must share a [N, d] shape");
  }
  const std::size_t d = qv.dim(1);
  if (heads == 0 || d % heads != 0) throw ShapeError("linear_attention: heads must divide d");
  const auto dh = static_cast<Eigen::Index>(d / heads);
  Tensor out(qv.shape());
  {
    auto qm = view(qv);
    auto km = view(k.value());
    auto vm = view(v.value());
    auto om = view(out);
    for (std::size_t h = 0; h < heads; ++h) {
      const Eigen::Index c0 = static_cast<Eigen::Index>(h) * dh;
      RowMatrix kv = km.middleCols(c0, dh).transpose() * vm.middleCols(c0, dh);
      om.middleCols(c0, dh).noalias() = scale * (qm.middleCols(c0, dh) * kv);
    }
  }
  Tape* tape = &q.tape();
  const int iq = q.id(), ik = k.id(), iv = v.id();
  auto fn = [tape, iq, ik, iv, heads, dh, scale](const Tensor& g, std::span<Tensor* const> in) {
    auto qm = view(tape->value(iq));
    auto km = view(tape->value(ik));
    auto vm = view(tape->value(iv));
    auto gm = view(g);
    for (std::size_t h = 0; h < heads; ++h) {
      const Eigen::Index c0 = static_cast<Eigen::Index>(h) * dh;
      auto kh = km.middleCols(c0, dh);
      auto vh = vm.middleCols(c0, dh);
      auto gh = gm.middleCols(c0, dh);
      if (in[0]) {
        RowMatrix kv = kh.transpose() * vh;
        view(*in[0]).middleCols(c0, dh).noalias() += scale * (gh * kv.transpose());
      }
      if (in[1] || in[2]) {
        RowMatrix dkv = scale * (qm.middleCols(c0, dh).transpose() * gh);
        if (in[1]) view(*in[1]).middleCols(c0, dh).noalias() += vh * dkv.transpose();
        if (in[2]) view(*in[2]).middleCols(c0, dh).noalias() += kh * dkv;
      }
    }
  };
  return tape->record("linear_attention", std::move(out), {q, k, v}, fn);
}

std::vector<double> anomaly_accumulator(const std::vector<double>& gbar, double tau_a,
                                        double lambda) {
  if (!(tau_a > 0.0)) throw ArgumentError("anomaly_accumulator: tau_a must be positive");
  const double decay = 1.0 - 1.0 / tau_a;
  std::vector<double> a(gbar.size());
  double prev = 0.0;
  for (std::size_t t = 0; t < gbar.size(); ++t) {
    prev = decay * prev + lambda * gbar[t];
    a[t] = prev;
  }
  return a;
}

Var anomaly_accumulator(Var gbar, double tau_a, double lambda) {
  if (!(tau_a > 0.0)) throw ArgumentError("anomaly_accumulator: tau_a must be positive");
  if (gbar.value().rank() != 1) throw ShapeError("anomaly_accumulator: expected [T]");
  const double decay = 1.0 - 1.0 / tau_a;
  std::vector<Var> steps;
  Var prev;
  for (std::size_t t = 0; t < gbar.size(); ++t) {
    Var inject = scale(select(gbar, t), lambda);
    prev = t == 0 ? inject : add(scale(prev, decay), inject);
    steps.push_back(prev);
  }
  return stack(steps);
}

GateNet::GateNet(const GateNetConfig& config, std::uint64_t seed) : config_(config), rng_(seed) {
  config_.validate();
  const GateNetConfig& c = config_;
  const std::size_t d = c.dim;
  const std::size_t dc = c.stem_width;
  const double tau_init = 0.0, vth_init = 0.0;

  event_gain_ = &params_.add("events.gain", Tensor(Shape{c.channels}, events::identity_scale_logit()));
  for (std::size_t ch = 0; ch < c.channels; ++ch) {
    const std::string p = "stem" + std::to_string(ch);
    StemParams s;
    s.lif.theta_tau = &params_.add(p + ".lif.theta_tau", Tensor::scalar(tau_init), c.learnable_lif);
    s.lif.theta_vth = &params_.add(p + ".lif.theta_vth", Tensor::scalar(vth_init), c.learnable_lif);
    s.conv = &make(p + ".conv", {dc, 3, 3, 1}, std::sqrt(6.0 / (9.0 + 9.0 * static_cast<double>(dc))));
    s.norm = make_affine(p + ".norm", dc);
    stems_.push_back(s);
  }
  fuse_ = make_linear("fuse", c.channels * dc, d);
  fuse_norm_ = make_affine("fuse.norm", d);

  const std::size_t wide = c.sepconv_expansion * d;
  for (std::size_t b = 0; b < c.depth; ++b) {
    const std::string p = "block" + std::to_string(b);
    BlockParams bp;
    if (c.sepconv_expansion > 1) bp.sep_expand = make_linear(p + ".sep.expand", d, wide);
    bp.sep_dw = &make(p + ".sep.dw", {wide, 3, 3}, std::sqrt(6.0 / 18.0));
    bp.sep_project = make_linear(p + ".sep.project", wide, d);
    bp.sep_norm = make_affine(p + ".sep.norm", d);
    bp.q = make_linear(p + ".attn.q", d, d);
    bp.k = make_linear(p + ".attn.k", d, d);
    bp.v = make_linear(p + ".attn.v", d, d);
    bp.out = make_linear(p + ".attn.out", d, d);
    bp.fc1 = make_linear(p + ".mlp.fc1", d, c.mlp_hidden());
    bp.fc2 = make_linear(p + ".mlp.fc2", c.mlp_hidden(), d);
    blocks_.push_back(bp);
  }
  gate_weight_ = &make("gate.weight", {d, 1}, std::sqrt(6.0 / (static_cast<double>(d) + 1.0)));
  gate_bias_ = &params_.add("gate.bias", Tensor(Shape{1}, c.gate_bias));

  proj_anom_ = make_linear("proj.anom", c.frames, c.proj_width);
  proj_gate_ = make_linear("proj.gate", 2 * c.frames, c.proj_width);
  const std::size_t sdtb = 2 * c.proj_width;
  head_.fc1 = make_linear("head.fc1", c.video_dim + sdtb, c.head_hidden);
  head_.fc2 = make_linear("head.fc2", c.head_hidden, 1, /*zero=*/true);
  aux_.fc1 = make_linear("aux.fc1", sdtb, c.head_hidden);
  aux_.fc2 = make_linear("aux.fc2", c.head_hidden, 1, /*zero=*/true);
}

Parameter& GateNet::make(const std::string& name, Shape shape, double limit, bool learnable) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = dist(rng_);
  return params_.add(name, std::move(t), learnable);
}

Linear GateNet::make_linear(const std::string& name, std::size_t in, std::size_t out, bool zero,
                            bool bias) {
  Linear l;
  const double limit = zero ? 0.0 : std::sqrt(6.0 / static_cast<double>(in + out));
  l.weight = &make(name + ".weight", {in, out}, limit);
  if (bias) l.bias = &params_.add(name + ".bias", Tensor(Shape{out}));
  return l;
}

Affine GateNet::make_affine(const std::string& name, std::size_t width) {
  return {&params_.add(name + ".scale", Tensor(Shape{width}, 1.0)),
          &params_.add(name + ".shift", Tensor(Shape{width}))};
}

Var GateNet::spike(Var x, snn::SpikeMonitor* monitor) {
  Var s = snn::multispike(x);
  if (monitor != nullptr) monitor->add(s);
  return s;
}

Var GateNet::event_channels(Tape& tape, const events::PooledEvents& pooled, std::size_t c) {
  Var gain = select(tape.param(*event_gain_), c);
  return events::event_channel(tape, pooled, c, gain, config_.events);
}

Var GateNet::stage1(Tape& tape, const std::vector<Var>& channel_events,
                    snn::SpikeMonitor* monitor) {
  const GateNetConfig& c = config_;
  if (channel_events.size() != c.channels) {
    throw ShapeError("stage1: expected " + std::to_string(c.channels) + " event channels, got " +
                     std::to_string(channel_events.size()));
  }
  const Shape expect{c.frames, c.grid, c.grid};
  std::vector<Var> maps;
  for (std::size_t ch = 0; ch < c.channels; ++ch) {
    if (channel_events[ch].shape() != expect) {
      throw ShapeError("stage1: channel " + std::to_string(ch) + " has shape " +
                       shape_str(channel_events[ch].shape()) + ", expected " + shape_str(expect));
    }
    snn::LifResult lif = snn::lif_sequence(channel_events[ch], stems_[ch].lif, c.lif, nullptr, monitor);
    Var x = reshape(lif.spikes, {c.frames, c.grid, c.grid, 1});
    Var y = conv2d(x, tape.param(*stems_[ch].conv), 1, 1);
    maps.push_back(stems_[ch].norm(y));
  }
  Var stem = concat(maps, 3);
  return reshape(stem, {c.tokens(), c.channels * c.stem_width});
}

Var GateNet::stage2(Var stem) { return gelu(fuse_norm_(fuse_(stem))); }

Var GateNet::sepconv(std::size_t block, Var u, snn::SpikeMonitor* monitor) {
  const GateNetConfig& c = config_;
  const BlockParams& bp = blocks_.at(block);
  Var s = spike(u, monitor);
  std::size_t width = c.dim;
  if (c.sepconv_expansion > 1) {
    s = spike(bp.sep_expand(s), monitor);
    width = c.sepconv_expansion * c.dim;
  }
  Var grid = reshape(s, {c.frames, c.grid, c.grid, width});
  Var mixed = depthwise_conv2d(grid, u.tape().param(*bp.sep_dw), 1, 1);
  Var flat = reshape(mixed, {c.tokens(), width});
  return bp.sep_norm(bp.sep_project(flat));
}

Var GateNet::spike_attention(std::size_t block, Var u, snn::SpikeMonitor* monitor) {
  const GateNetConfig& c = config_;
  const BlockParams& bp = blocks_.at(block);
  Var s = spike(u, monitor);
  Var q = spike(bp.q(s), monitor);
  Var k = spike(bp.k(s), monitor);
  Var v = spike(bp.v(s), monitor);
  Var a = linear_attention(q, k, v, c.heads, c.effective_attn_scale());
  return bp.out(spike(a, monitor));
}

Var GateNet::spike_mlp(std::size_t block, Var u, snn::SpikeMonitor* monitor) {
  const BlockParams& bp = blocks_.at(block);
  Var h = spike(bp.fc1(spike(u, monitor)), monitor);
  return bp.fc2(h);
}

Var GateNet::spike_block(std::size_t block, Var u, snn::SpikeMonitor* monitor) {
  u = add(u, sepconv(block, u, monitor));
  u = add(u, spike_attention(block, u, monitor));
  return add(u, spike_mlp(block, u, monitor));
}

Var GateNet::gate_head(Tape& tape, Var u) {
  const GateNetConfig& c = config_;
  Var logits = add(matmul(u, tape.param(*gate_weight_)), tape.param(*gate_bias_));
  Var g = sigmoid(scale(logits, 1.0 / c.gate_tau));
  return reshape(g, {c.frames, c.grid, c.grid});
}

GateOutput GateNet::encode(Tape& tape, const events::PooledEvents& pooled,
                           snn::SpikeMonitor* monitor) {
  const GateNetConfig& c = config_;
  if (pooled.num_channels() != c.channels || pooled.num_frames() != c.frames ||
      pooled.grid() != c.grid) {
    throw ShapeError("encode: events " + shape_str(pooled.maps.shape()) +
                     " do not match the model configuration");
  }
  std::vector<Var> ev;
  ev.reserve(c.channels);
  for (std::size_t ch = 0; ch < c.channels; ++ch) ev.push_back(event_channels(tape, pooled, ch));
  Var u = stage2(stage1(tape, ev, monitor));
  for (std::size_t b = 0; b < blocks_.size(); ++b) u = spike_block(b, u, monitor);

  GateOutput out;
  out.gates = gate_head(tape, u);
  Var per_frame = reshape(out.gates, {c.frames, c.grid * c.grid});
  Var gmean = mean_last(per_frame);
  Var gmax = max_last(per_frame);
  out.stats = concat({reshape(gmean, {c.frames, 1}), reshape(gmax, {c.frames, 1})}, 1);
  out.trace = anomaly_accumulator(gmean, c.acc_tau, c.acc_lambda);
  out.f_anom = proj_anom_(reshape(out.trace, {1, c.frames}));
  out.f_gate = proj_gate_(reshape(out.stats, {1, 2 * c.frames}));
  out.features = concat({out.f_anom, out.f_gate}, 1);
  return out;
}

Prediction GateNet::classify(Tape& tape, Var features, Var video) {
  (void)tape;
  const GateNetConfig& c = config_;
  if (features.value().rank() != 2 || features.shape()[1] != 2 * c.proj_width) {
    throw ShapeError("classify: features must be [1, " + std::to_string(2 * c.proj_width) + "]");
  }
  Prediction p;
  if (c.video_dim > 0) {
    if (!video.valid() || video.size() != c.video_dim) {
      throw ShapeError("classify: model expects a " + std::to_string(c.video_dim) +
                       "-dim clip embedding");
    }
    p.fused = concat({reshape(video, {1, c.video_dim}), features}, 1);
  } else {
    p.fused = features;
  }
  auto run = [](const HeadParams& h, Var x) { return sigmoid(reshape(h.fc2(gelu(h.fc1(x))), {})); };
  p.y_hat = run(head_, p.fused);
  p.y_snn = run(aux_, features);
  return p;
}

void GateNet::clamp_params() {
  for (StemParams& s : stems_) snn::clamp_params(s.lif, config_.lif.bounds);
}

std::vector<const Parameter*> GateNet::aux_head_params() const {
  return {aux_.fc1.weight, aux_.fc1.bias, aux_.fc2.weight, aux_.fc2.bias};
}

}  // namespace spikegate::gatenet

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

#include "spikegate/snn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spikegate/error.hpp"
#include "spikegate/ops.hpp"

namespace spikegate::snn {

namespace {

double atan_kernel(double centred, double alpha) {
  const double z = std::numbers::pi * centred * alpha / 2.0;
  return (alpha / 2.0) / (1.0 + z * z);
}

double ratio_surrogate(double x, double alpha, int levels) {
  if (!(x > 0.0 && x < static_cast<double>(levels))) return 0.0;
  double s = 0.0;
  for (int k = 0; k < levels; ++k) s += atan_kernel(x - k - 0.5, alpha);
  return s;
}

Var run_lif(Var input, Var decay, Var v_th, const LifOptions& opts,
            const Tensor* initial_membrane, SpikeMonitor* monitor, LifResult& result) {
  Tape& tape = input.tape();
  const Tensor& x = input.value();
  if (x.rank() == 0) throw ShapeError("lif_sequence: input needs a leading time axis");
  const Shape cell_shape(x.shape().begin() + 1, x.shape().end());
  Tensor v0(cell_shape);
  if (initial_membrane != nullptr) {
    if (initial_membrane->shape() != cell_shape) {
      throw ShapeError("lif_sequence: initial membrane " + shape_str(initial_membrane->shape()) +
                       " does not match cells " + shape_str(cell_shape));
    }
    v0 = *initial_membrane;
  }
  Var v = tape.constant(std::move(v0));
  std::vector<Var> spikes;
  spikes.reserve(x.dim(0));
  for (std::size_t t = 0; t < x.dim(0); ++t) {
    v = add(mul(v, decay), select(input, t));
    Var s = opts.firing == FiringMode::kMultispike ? multispike(v, v_th)
                                                   : heaviside_spike(v, v_th);
    if (opts.reset == ResetMode::kSoft) {
      v = sub(v, mul(detach(s), v_th));
    } else {
      Tensor keep(s.shape());
      for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = s.value()[i] > 0.0 ? 0.0 : 1.0;
      v = mul(v, tape.constant(std::move(keep)));
    }
    spikes.push_back(s);
  }
  result.final_membrane = v.value();
  Var stacked = stack(spikes);
  if (monitor != nullptr) monitor->add(stacked);
  return stacked;
}

}  // namespace

int multispike_forward(double v, double v_th, int levels) {
  if (!(v_th > 0.0)) throw ArgumentError("multispike: threshold must be positive");
  const double r = std::clamp(v / v_th, 0.0, static_cast<double>(levels));
  return static_cast<int>(std::floor(r + 0.5));
}

double multispike_surrogate(double v, double v_th, double alpha, int levels) {
  if (!(alpha > 0.0)) throw ArgumentError("multispike_surrogate: alpha must be positive");
  if (!(v_th > 0.0)) throw ArgumentError("multispike_surrogate: threshold must be positive");
  return ratio_surrogate(v / v_th, alpha, levels);
}

Var multispike(Var v, double v_th, double alpha, int levels) {
  if (!(v_th > 0.0)) throw ArgumentError("multispike: threshold must be positive");
  const Tensor& x = v.value();
  Tensor s(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) s[i] = multispike_forward(x[i], v_th, levels);
  Tape* tape = &v.tape();
  const int iv = v.id();
  auto fn = [tape, iv, v_th, alpha, levels](const Tensor& g, std::span<Tensor* const> in) {
    const Tensor& xv = tape->value(iv);
    Tensor& acc = *in[0];
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g[i] == 0.0) continue;
      acc[i] += g[i] * ratio_surrogate(xv[i] / v_th, alpha, levels) / v_th;
    }
  };
  return tape->record("multispike", std::move(s), {v}, fn);
}

Var multispike(Var v, Var v_th, double alpha, int levels) {
  if (v_th.size() != 1) throw ShapeError("multispike: threshold must be a scalar");
  const double th = v_th.value()[0];
  if (!(th > 0.0)) throw ArgumentError("multispike: threshold must be positive");
  const Tensor& x = v.value();
  Tensor s(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) s[i] = multispike_forward(x[i], th, levels);
  Tape* tape = &v.tape();
  const int iv = v.id();
  auto fn = [tape, iv, th, alpha, levels](const Tensor& g, std::span<Tensor* const> in) {
    const Tensor& xv = tape->value(iv);
    double gth = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g[i] == 0.0) continue;
      const double sg = ratio_surrogate(xv[i] / th, alpha, levels);
      if (in[0]) (*in[0])[i] += g[i] * sg / th;
      gth -= g[i] * sg * xv[i] / (th * th);
    }
    if (in[1]) (*in[1])[0] += gth;
  };
  return tape->record("multispike", std::move(s), {v, v_th}, fn);
}

Var heaviside_spike(Var v, Var v_th, double alpha) {
  if (v_th.size() != 1) throw ShapeError("heaviside_spike: threshold must be a scalar");
  const double th = v_th.value()[0];
  if (!(th > 0.0)) throw ArgumentError("heaviside_spike: threshold must be positive");
  const Tensor& x = v.value();
  Tensor s(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) s[i] = x[i] >= th ? 1.0 : 0.0;
  Tape* tape = &v.tape();
  const int iv = v.id();
  auto fn = [tape, iv, th, alpha](const Tensor& g, std::span<Tensor* const> in) {
    const Tensor& xv = tape->value(iv);
    double gth = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double sg = atan_kernel(xv[i] / th - 1.0, alpha);
      if (in[0]) (*in[0])[i] += g[i] * sg / th;
      gth -= g[i] * sg * xv[i] / (th * th);
    }
    if (in[1]) (*in[1])[0] += gth;
  };
  return tape->record("heaviside_spike", std::move(s), {v, v_th}, fn);
}

void SpikeMonitor::add(Var spikes) {
  records_.push_back(spikes);
  sites_ += spikes.size();
}

Var SpikeMonitor::total() const {
  if (records_.empty()) throw ArgumentError("SpikeMonitor: no spike sites recorded");
  std::vector<Var> lifted;
  lifted.reserve(records_.size());
  for (const Var& r : records_) lifted.push_back(reshape(sum_all(r), Shape{1}));
  return sum_all(concat(lifted, 0));
}

Var SpikeMonitor::rate() const {
  return scale(total(), 1.0 / (static_cast<double>(levels_) * static_cast<double>(sites_)));
}

double SpikeMonitor::rate_value() const {
  if (sites_ == 0) return 0.0;
  double total = 0.0;
  for (const Var& r : records_) {
    for (double v : r.value().values()) total += v;
  }
  return total / (static_cast<double>(levels_) * static_cast<double>(sites_));
}

double recovered_tau(const LifChannelParams& p, const LifBounds& b) {
  return std::clamp(b.tau_base * std::exp(p.theta_tau->value[0]), b.tau_min, b.tau_max);
}

double recovered_vth(const LifChannelParams& p, const LifBounds& b) {
  return std::clamp(b.vth_base * std::exp(p.theta_vth->value[0]), b.vth_min, b.vth_max);
}

void clamp_params(LifChannelParams& p, const LifBounds& b) {
  double& tt = p.theta_tau->value[0];
  tt = std::clamp(tt, std::log(b.tau_min / b.tau_base), std::log(b.tau_max / b.tau_base));
  double& tv = p.theta_vth->value[0];
  tv = std::clamp(tv, std::log(b.vth_min / b.vth_base), std::log(b.vth_max / b.vth_base));
}

LifResult lif_sequence(Var input, const LifChannelParams& params, const LifOptions& opts,
                       const Tensor* initial_membrane, SpikeMonitor* monitor) {
  Tape& tape = input.tape();
  const LifBounds& b = opts.bounds;
  Var tau = clamp(scale(exp(tape.param(*params.theta_tau)), b.tau_base), b.tau_min, b.tau_max);
  Var vth = clamp(scale(exp(tape.param(*params.theta_vth)), b.vth_base), b.vth_min, b.vth_max);
  // 1 - 1/tau, written with the primitive set.
  Var decay = add_scalar(neg(exp(neg(log(tau)))), 1.0);
  LifResult result;
  result.spikes = run_lif(input, decay, vth, opts, initial_membrane, monitor, result);
  return result;
}

LifResult lif_sequence(Var input, double tau, double v_th, const LifOptions& opts,
                       const Tensor* initial_membrane, SpikeMonitor* monitor) {
  if (!(tau > 0.0) || !(v_th > 0.0)) {
    throw ArgumentError("lif_sequence: tau and v_th must be positive");
  }
  Tape& tape = input.tape();
  Var decay = tape.constant(Tensor::scalar(1.0 - 1.0 / tau));
  Var vth = tape.constant(Tensor::scalar(v_th));
  LifResult result;
  result.spikes = run_lif(input, decay, vth, opts, initial_membrane, monitor, result);
  return result;
}

}  // namespace spikegate::snn

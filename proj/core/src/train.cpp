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


#include "spikegate/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <deque>
#include <memory>
#include <numbers>
#include <random>

#include "spikegate/error.hpp"
#include "spikegate/metrics.hpp"
#include "spikegate/ops.hpp"

namespace spikegate::train {

void TrainConfig::validate() const {
  for (double w : {lambda_aux, lambda_supcon, lambda_rate, lambda_anom, weight_decay, lr}) {
    if (!(w >= 0.0)) throw ArgumentError("TrainConfig: weights and rates must be >= 0");
  }
  if (!(supcon_tau > 0.0)) throw ArgumentError("TrainConfig: supcon_tau must be > 0");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
    throw ArgumentError("TrainConfig: label_smoothing must lie in [0, 1)");
  }
  if (!(clip_norm > 0.0)) throw ArgumentError("TrainConfig: clip_norm must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ArgumentError("TrainConfig: Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ArgumentError("TrainConfig: adam_eps must be > 0");
  if (batch_size == 0) throw ArgumentError("TrainConfig: batch_size must be >= 1");
}

double smoothed_target(int label, double smoothing) {
  if (label != 0 && label != 1) throw ArgumentError("labels must be 0 or 1");
  return label * (1.0 - smoothing) + 0.5 * smoothing;
}

double bce(double p, int label, double smoothing) {
  const double y = smoothed_target(label, smoothing);
  const double q = std::clamp(p, kProbEps, 1.0 - kProbEps);
  return -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
}

Var bce(Var p, const std::vector<int>& labels, double smoothing) {
  if (p.value().rank() != 1 || p.size() != labels.size()) {
    throw ShapeError("bce: probabilities must be [B] matching the labels");
  }
  Tape& tape = p.tape();
  Tensor y(p.shape()), ny(p.shape());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    y[i] = smoothed_target(labels[i], smoothing);
    ny[i] = 1.0 - y[i];
  }
  Var q = clamp(p, kProbEps, 1.0 - kProbEps);
  Var pos = mul(log(q), tape.constant(std::move(y)));
  Var neg_part = mul(log(add_scalar(neg(q), 1.0)), tape.constant(std::move(ny)));
  return neg(mean_all(add(pos, neg_part)));
}

namespace {

// Loss and dL/dS for SupCon on a similarity matrix S = Z Z^T / tau.
double supcon_on_logits(const Tensor& s, const std::vector<int>& labels, Tensor* grad) {
  const std::size_t b = labels.size();
  std::size_t anchors = 0;
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      if (j != i && labels[j] == labels[i]) {
        ++anchors;
        break;
      }
    }
  }
  if (grad != nullptr) *grad = Tensor(s.shape());
  if (anchors == 0) return 0.0;
  double loss = 0.0;
  std::vector<double> soft(b);
  for (std::size_t i = 0; i < b; ++i) {
    std::size_t npos = 0;
    for (std::size_t j = 0; j < b; ++j) npos += (j != i && labels[j] == labels[i]) ? 1 : 0;
    if (npos == 0) continue;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < b; ++a)
      if (a != i) mx = std::max(mx, s[i * b + a]);
    double z = 0.0;
    for (std::size_t a = 0; a < b; ++a) {
      soft[a] = a == i ? 0.0 : std::exp(s[i * b + a] - mx);
      z += soft[a];
    }
    const double lse = mx + std::log(z);
    double li = 0.0;
    for (std::size_t p = 0; p < b; ++p)
      if (p != i && labels[p] == labels[i]) li += lse - s[i * b + p];
    loss += li / static_cast<double>(npos);
    if (grad != nullptr) {
      const double w = 1.0 / static_cast<double>(anchors);
      for (std::size_t a = 0; a < b; ++a) {
        if (a == i) continue;
        double g = soft[a] / z;
        if (labels[a] == labels[i]) g -= 1.0 / static_cast<double>(npos);
        (*grad)[i * b + a] = w * g;
      }
    }
  }
  return loss / static_cast<double>(anchors);
}

}  // namespace

double supcon(const std::vector<std::vector<double>>& features, const std::vector<int>& labels,
              double tau) {
  const std::size_t b = features.size();
  if (labels.size() != b) throw ShapeError("supcon: feature/label count mismatch");
  if (!(tau > 0.0)) throw ArgumentError("supcon: tau must be positive");
  std::vector<std::vector<double>> z = features;
  for (auto& row : z) {
    double n = 0.0;
    for (double v : row) n += v * v;
    n = std::max(std::sqrt(n), 1e-12);
    for (double& v : row) v /= n;
  }
  Tensor s(Shape{b, b});
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < b; ++j) {
      double d = 0.0;
      for (std::size_t k = 0; k < z[i].size(); ++k) d += z[i][k] * z[j][k];
      s[i * b + j] = d / tau;
    }
  return supcon_on_logits(s, labels, nullptr);
}

Var supcon(Var features, const std::vector<int>& labels, double tau) {
  if (features.value().rank() != 2 || features.shape()[0] != labels.size()) {
    throw ShapeError("supcon: features must be [B, F] matching the labels");
  }
  if (!(tau > 0.0)) throw ArgumentError("supcon: tau must be positive");
  Var z = l2_normalize(features);
  Var s = scale(matmul(z, z, false, true), 1.0 / tau);
  Tensor g;
  const double value = supcon_on_logits(s.value(), labels, &g);
  auto fn = [g](const Tensor& og, std::span<Tensor* const> in) {
    Tensor& acc = *in[0];
    for (std::size_t i = 0; i < g.size(); ++i) acc[i] += og[0] * g[i];
  };
  return s.tape().record("supcon", Tensor::scalar(value), {s}, fn);
}

double rate_penalty(double rate, double target, double beta) {
  return beta * (rate - target) * (rate - target);
}

Var total_loss(const LossInputs& in, const TrainConfig& cfg, LossTerms* terms) {
  Var main = bce(in.y_hat, in.labels, cfg.label_smoothing);
  Var aux = bce(in.y_snn, in.labels, cfg.label_smoothing);
  Var con = supcon(in.fused, in.labels, cfg.supcon_tau);
  Var rate = square(add_scalar(in.spike_rate, -cfg.rate_target));
  Var anom;
  if (in.anom_score.valid()) anom = bce(in.anom_score, in.labels, cfg.label_smoothing);

  Var total = main;
  if (cfg.lambda_aux > 0.0) total = add(total, scale(aux, cfg.lambda_aux));
  if (cfg.lambda_supcon > 0.0) total = add(total, scale(con, cfg.lambda_supcon));
  if (cfg.lambda_rate > 0.0) total = add(total, scale(rate, cfg.lambda_rate));
  if (cfg.lambda_anom > 0.0) {
    if (!anom.valid()) throw ArgumentError("total_loss: anomaly term enabled without scores");
    total = add(total, scale(anom, cfg.lambda_anom));
  }
  if (terms != nullptr) {
    terms->total = total.value().item();
    terms->bce_main = main.value().item();
    terms->bce_aux = aux.value().item();
    terms->supcon = con.value().item();
    terms->rate = rate.value().item();
    terms->anom = anom.valid() ? anom.value().item() : 0.0;
  }
  return total;
}

AdamW::AdamW(const TrainConfig& cfg)
    : beta1_(cfg.adam_beta1), beta2_(cfg.adam_beta2), eps_(cfg.adam_eps), wd_(cfg.weight_decay) {}

void AdamW::step(ParameterSet& params, double lr) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }
  if (m_.size() != params.size()) throw ArgumentError("AdamW: parameter set changed");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = params[k];
    if (!p.learnable()) continue;
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      p.value[i] *= 1.0 - lr * wd_;
      p.value[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
    }
  }
}

double clip_grad_norm(ParameterSet& params, double max_norm) {
  const double norm = params.grad_norm();
  if (!(norm > max_norm)) return 1.0;
  const double s = max_norm / norm;
  for (auto& p : params) {
    if (!p->learnable()) continue;
    for (double& g : p->grad.values()) g *= s;
  }
  return s;
}

double cosine_lr(double base, std::size_t step, std::size_t total) {
  if (total == 0) return base;
  const double frac = std::min(1.0, static_cast<double>(step) / static_cast<double>(total));
  return 0.5 * base * (1.0 + std::cos(std::numbers::pi * frac));
}

double grad_norm(std::span<const Parameter* const> params) {
  double sq = 0.0;
  for (const Parameter* p : params)
    for (double g : p->grad.values()) sq += g * g;
  return std::sqrt(sq);
}

Trainer::Trainer(gatenet::GateNet& net, const TrainConfig& cfg) : net_(net), cfg_(cfg), opt_(cfg) {
  cfg_.validate();
}

std::size_t Trainer::steps_per_epoch(std::size_t n) const {
  return (n + cfg_.batch_size - 1) / cfg_.batch_size;
}

namespace {

bool is_head_param(const std::string& name) {
  return name.starts_with("head.") || name.starts_with("aux.");
}

Var video_var(Tape& tape, const gatenet::GateNetConfig& c, const Sample& s) {
  if (c.video_dim == 0) return {};
  if (!s.video) throw FormatError("sample " + s.id + " lacks the clip-level embedding");
  return tape.constant(*s.video);
}

}  // namespace

StepStats Trainer::step(std::span<const Sample* const> batch, double lr) {
  if (batch.empty()) throw ArgumentError("Trainer::step: empty batch");
  const std::size_t b = batch.size();
  ParameterSet& params = net_.params();
  params.zero_grad();

  // Per-clip spiking forward passes, kept alive for the second backward.
  std::vector<std::unique_ptr<Tape>> tapes;
  std::vector<snn::SpikeMonitor> mons(b);
  std::vector<gatenet::GateOutput> outs(b);
  std::vector<Var> totals(b);
  for (std::size_t i = 0; i < b; ++i) {
    tapes.push_back(std::make_unique<Tape>());
    outs[i] = net_.encode(*tapes[i], batch[i]->pooled, &mons[i]);
    totals[i] = mons[i].total();
  }

  // Batch objective on a small tape whose leaves stand in for the clip outputs.
  Tape head;
  std::deque<Parameter> feat, tot, trace;
  std::vector<Var> y_hat, y_snn, fused, totals_h, anom;
  std::vector<int> labels;
  StepStats st;
  for (std::size_t i = 0; i < b; ++i) {
    feat.emplace_back("features", outs[i].features.value());
    tot.emplace_back("spikes", Tensor::vector({totals[i].value().item()}));
    trace.emplace_back("trace", outs[i].trace.value());
    gatenet::Prediction p =
        net_.classify(head, head.param(feat.back()), video_var(head, net_.config(), *batch[i]));
    y_hat.push_back(reshape(p.y_hat, Shape{1}));
    y_snn.push_back(reshape(p.y_snn, Shape{1}));
    fused.push_back(p.fused);
    totals_h.push_back(head.param(tot.back()));
    if (cfg_.lambda_anom > 0.0) {
      anom.push_back(reshape(
          sigmoid(add_scalar(mean_all(head.param(trace.back())), -cfg_.anom_margin)), Shape{1}));
    }
    labels.push_back(batch[i]->label);
    st.spike_total += totals[i].value().item();
    st.spike_sites += static_cast<double>(mons[i].sites());
    const int pred = p.y_hat.value().item() > 0.5 ? 1 : 0;
    st.correct += pred == batch[i]->label ? 1 : 0;
  }
  LossInputs in;
  in.y_hat = concat(y_hat, 0);
  in.y_snn = concat(y_snn, 0);
  in.fused = concat(fused, 0);
  in.spike_rate = scale(sum_all(concat(totals_h, 0)),
                        1.0 / (snn::kLevels * st.spike_sites));
  if (!anom.empty()) in.anom_score = concat(anom, 0);
  in.labels = labels;
  Var loss = total_loss(in, cfg_, &st.loss);
  if (!std::isfinite(st.loss.total)) throw NumericError("non-finite loss");
  head.backward(loss);

  // Pull the leaf gradients back through each clip's spiking branch.
  for (std::size_t i = 0; i < b; ++i) {
    Tape& t = *tapes[i];
    Var s = sum_all(mul(outs[i].features, t.constant(feat[i].grad)));
    s = add(s, scale(totals[i], tot[i].grad[0]));
    if (cfg_.lambda_anom > 0.0) s = add(s, sum_all(mul(outs[i].trace, t.constant(trace[i].grad))));
    t.backward(s);
    tapes[i].reset();
  }

  const auto aux = net_.aux_head_params();
  st.aux_grad_norm = grad_norm(aux);
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p->learnable() || is_head_param(p->name())) continue;
    for (double g : p->grad.values()) sq += g * g;
  }
  st.sdtb_grad_norm = std::sqrt(sq);
  st.clip_scale = clip_grad_norm(params, cfg_.clip_norm);
  opt_.step(params, lr);
  net_.clamp_params();
  return st;
}

EpochStats Trainer::train_epoch(const std::vector<Sample>& data, std::size_t epoch) {
  if (data.empty()) throw ArgumentError("train_epoch: empty dataset");
  const std::size_t per_epoch = steps_per_epoch(data.size());
  total_steps_ = per_epoch * std::max<std::size_t>(cfg_.epochs, 1);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(cfg_.seed * 0x9E3779B97F4A7C15ULL + epoch);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

  EpochStats es;
  es.epoch = epoch;
  double spikes = 0.0, sites = 0.0;
  std::size_t correct = 0;
  for (std::size_t s = 0; s < per_epoch; ++s) {
    std::vector<const Sample*> batch;
    for (std::size_t k = s * cfg_.batch_size; k < std::min(data.size(), (s + 1) * cfg_.batch_size);
         ++k) {
      batch.push_back(&data[order[k]]);
    }
    const double lr = cfg_.cosine ? cosine_lr(cfg_.lr, global_step_, total_steps_) : cfg_.lr;
    if (s == 0) es.lr = lr;
    StepStats st;
    try {
      st = step(batch, lr);
    } catch (const NumericError& e) {
      std::string ids;
      for (const Sample* x : batch) ids += (ids.empty() ? "" : ",") + x->id;
      throw NumericError("epoch " + std::to_string(epoch) + " step " + std::to_string(s) +
                         " clips [" + ids + "]: " + e.what());
    }
    ++global_step_;
    const double w = static_cast<double>(batch.size());
    es.loss.total += w * st.loss.total;
    es.loss.bce_main += w * st.loss.bce_main;
    es.loss.bce_aux += w * st.loss.bce_aux;
    es.loss.supcon += w * st.loss.supcon;
    es.loss.rate += w * st.loss.rate;
    es.loss.anom += w * st.loss.anom;
    spikes += st.spike_total;
    sites += st.spike_sites;
    correct += st.correct;
    es.aux_grad_norm = std::max(es.aux_grad_norm, st.aux_grad_norm);
  }
  const double n = static_cast<double>(data.size());
  for (double* v : {&es.loss.total, &es.loss.bce_main, &es.loss.bce_aux, &es.loss.supcon,
                    &es.loss.rate, &es.loss.anom}) {
    *v /= n;
  }
  es.spike_rate = sites > 0.0 ? spikes / (snn::kLevels * sites) : 0.0;
  es.train_acc = static_cast<double>(correct) / n;
  es.silent_sdtb = es.aux_grad_norm < kSilentGradNorm;
  return es;
}

double Scores::accuracy() const {
  if (y_hat.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < y_hat.size(); ++i) ok += ((y_hat[i] > 0.5 ? 1 : 0) == labels[i]);
  return static_cast<double>(ok) / static_cast<double>(y_hat.size());
}

double Scores::auc() const { return metrics::auc(y_hat, labels); }

Scores predict(gatenet::GateNet& net, const std::vector<Sample>& data) {
  Scores sc;
  double spikes = 0.0, sites = 0.0, active = 0.0, cells = 0.0;
  for (const Sample& s : data) {
    Tape tape;
    tape.set_grad_enabled(false);
    snn::SpikeMonitor mon;
    gatenet::GateOutput o = net.encode(tape, s.pooled, &mon);
    gatenet::Prediction p = net.classify(tape, o.features, video_var(tape, net.config(), s));
    sc.y_hat.push_back(p.y_hat.value().item());
    sc.y_snn.push_back(p.y_snn.value().item());
    sc.labels.push_back(s.label);
    spikes += mon.rate_value() * snn::kLevels * static_cast<double>(mon.sites());
    sites += static_cast<double>(mon.sites());
    for (double g : o.gates.value().values()) active += g > 0.5 ? 1.0 : 0.0;
    cells += static_cast<double>(o.gates.size());
  }
  sc.spike_rate = sites > 0.0 ? spikes / (snn::kLevels * sites) : 0.0;
  sc.gate_active = cells > 0.0 ? active / cells : 0.0;
  return sc;
}

double cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

FitResult fit(gatenet::GateNet& net, const std::vector<Sample>& train, const TrainConfig& cfg,
              const FitOptions& opts) {
  Trainer trainer(net, cfg);
  FitResult res;
  const double start = cpu_seconds();
  std::size_t streak = 0;
  for (std::size_t e = 1; e <= cfg.epochs; ++e) {
    EpochStats es = trainer.train_epoch(train, e);
    if (opts.val != nullptr && !opts.val->empty()) {
      es.val_auc = predict(net, *opts.val).auc();
      if (es.val_auc >= opts.converge_auc) {
        if (res.converged_epoch == 0) res.converged_epoch = e;
        ++streak;
      } else {
        streak = 0;
      }
    }
    res.history.push_back(es);
    if (opts.on_epoch) opts.on_epoch(es);
    res.cpu_seconds = cpu_seconds() - start;
    if (opts.stop_after_converged > 0 && streak >= opts.stop_after_converged) break;
    if (res.cpu_seconds >= opts.cpu_budget_s) break;
  }
  return res;
}

std::string epoch_csv_header() {
  return "epoch,loss,bce_main,bce_aux,supcon,rate_sq,anom,spike_rate,train_acc,val_auc,"
         "aux_grad_norm,lr,silent_sdtb";
}

std::string epoch_csv_row(const EpochStats& s) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.6f,%.6f,%.6g,%.6g,%d",
                s.epoch, s.loss.total, s.loss.bce_main, s.loss.bce_aux, s.loss.supcon,
                s.loss.rate, s.loss.anom, s.spike_rate, s.train_acc,
                std::isnan(s.val_auc) ? -1.0 : s.val_auc, s.aux_grad_norm, s.lr,
                s.silent_sdtb ? 1 : 0);
  return buf;
}

}  // namespace spikegate::train

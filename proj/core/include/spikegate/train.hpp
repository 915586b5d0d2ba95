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
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spikegate/events.hpp"
#include "spikegate/gatenet.hpp"
#include "spikegate/tape.hpp"

namespace spikegate::train {

struct TrainConfig {
  double lambda_aux = 0.2;       // auxiliary SNN-head BCE
  double lambda_supcon = 0.3;
  double lambda_rate = 0.01;     // beta of the rate penalty
  double rate_target = 0.15;     // r*
  double supcon_tau = 0.07;
  double label_smoothing = 0.1;
  double clip_norm = 1.0;
  double lr = 3e-4;
  double weight_decay = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Optional anomaly-score term BCE(sigmoid(mean trace - margin), y). Off by default.
  double lambda_anom = 0.0;
  double anom_margin = 0.5;
  bool cosine = true;
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  std::uint64_t seed = 2025;

  void validate() const;
};

/// Probabilities are clamped to [kProbEps, 1 - kProbEps] inside BCE.
inline constexpr double kProbEps = 1e-7;

double smoothed_target(int label, double smoothing);
double bce(double p, int label, double smoothing = 0.0);
/// Mean BCE over a probability vector [B].
Var bce(Var p, const std::vector<int>& labels, double smoothing = 0.0);

/// Supervised contrastive loss over L2-normalized rows. Anchors without a
/// same-label partner contribute nothing and are not counted.
double supcon(const std::vector<std::vector<double>>& features, const std::vector<int>& labels,
              double tau);
/// features: [B, F].
Var supcon(Var features, const std::vector<int>& labels, double tau);

double rate_penalty(double rate, double target = 0.15, double beta = 0.01);

struct LossTerms {
  double total = 0.0;
  double bce_main = 0.0;
  double bce_aux = 0.0;
  double supcon = 0.0;
  double rate = 0.0;  // unweighted (s - r*)^2
  double anom = 0.0;
};

/// Batch heads for the objective. `anom_score` may be invalid when the
/// anomaly term is off.
struct LossInputs {
  Var y_hat;       // [B]
  Var y_snn;       // [B]
  Var fused;       // [B, F]
  Var spike_rate;  // scalar
  Var anom_score;  // [B] or invalid
  std::vector<int> labels;
};

/// BCE(y_hat) + l1 BCE(y_snn) + l2 SupCon + l_rate (s - r*)^2 [+ l_anom BCE].
/// Terms with zero weight are logged but not added.
Var total_loss(const LossInputs& in, const TrainConfig& cfg, LossTerms* terms = nullptr);

/// Decoupled-weight-decay Adam over the learnable parameters of a set.
class AdamW {
 public:
  explicit AdamW(const TrainConfig& cfg);
  void step(ParameterSet& params, double lr);
  std::size_t steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_, wd_;
  std::size_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

/// Scales all learnable gradients so the global L2 norm is at most
/// max_norm. Returns the applied scale (1 when no clipping happened).
double clip_grad_norm(ParameterSet& params, double max_norm);

/// 0.5 base (1 + cos(pi step / total)).
double cosine_lr(double base, std::size_t step, std::size_t total);

/// L2 norm of a subset of gradients.
double grad_norm(std::span<const Parameter* const> params);

/// One training/evaluation example with its fixed (non-learnable) event
/// pooling precomputed.
struct Sample {
  std::string id;
  events::PooledEvents pooled;
  std::optional<Tensor> video;
  int label = 0;
};

struct StepStats {
  LossTerms loss;
  double spike_total = 0.0;
  double spike_sites = 0.0;
  std::size_t correct = 0;
  double aux_grad_norm = 0.0;   // before clipping
  double sdtb_grad_norm = 0.0;  // spiking branch, before clipping
  double clip_scale = 1.0;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  LossTerms loss;         // sample-weighted means
  double spike_rate = 0.0;
  double train_acc = 0.0;
  double val_auc = std::numeric_limits<double>::quiet_NaN();
  double aux_grad_norm = 0.0;  // max over steps
  double lr = 0.0;
  bool silent_sdtb = false;
};

/// Aux-head gradient norm below which an epoch counts as silent.
inline constexpr double kSilentGradNorm = 1e-8;

class Trainer {
 public:
  Trainer(gatenet::GateNet& net, const TrainConfig& cfg);

  /// forward -> losses -> backward -> clip -> optimizer -> clamp_params.
  StepStats step(std::span<const Sample* const> batch, double lr);
  /// Shuffles with (seed, epoch) and runs every batch. NumericError is
  /// rethrown with epoch/step/clip diagnostics.
  EpochStats train_epoch(const std::vector<Sample>& data, std::size_t epoch);

  std::size_t steps_per_epoch(std::size_t n) const;
  const TrainConfig& config() const { return cfg_; }
  gatenet::GateNet& net() { return net_; }

 private:
  gatenet::GateNet& net_;
  TrainConfig cfg_;
  AdamW opt_;
  std::size_t global_step_ = 0;
  std::size_t total_steps_ = 0;
};

struct Scores {
  std::vector<double> y_hat;
  std::vector<double> y_snn;
  std::vector<int> labels;
  double spike_rate = 0.0;
  double gate_active = 0.0;  // fraction of gate cells > 0.5

  double accuracy() const;  // threshold 0.5 on y_hat
  double auc() const;
};

Scores predict(gatenet::GateNet& net, const std::vector<Sample>& data);

struct FitOptions {
  const std::vector<Sample>* val = nullptr;
  double converge_auc = 0.95;
  /// Stop after the epoch that exhausts this much process CPU time.
  double cpu_budget_s = std::numeric_limits<double>::infinity();
  /// Stop once validation AUC has reached converge_auc this many epochs in a row.
  std::size_t stop_after_converged = 0;  // 0: never stop early
  std::function<void(const EpochStats&)> on_epoch;
};

struct FitResult {
  std::vector<EpochStats> history;
  std::size_t converged_epoch = 0;  // first epoch with val AUC >= threshold; 0 = never
  double cpu_seconds = 0.0;
};

FitResult fit(gatenet::GateNet& net, const std::vector<Sample>& train, const TrainConfig& cfg,
              const FitOptions& opts = {});

/// Process CPU time in seconds.
double cpu_seconds();

std::string epoch_csv_header();
std::string epoch_csv_row(const EpochStats& s);

}  // namespace spikegate::train

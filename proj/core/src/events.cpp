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


#include "spikegate/events.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spikegate/error.hpp"
#include "spikegate/ops.hpp"

namespace spikegate::events {

namespace {

constexpr double kNormEps = 1e-8;
constexpr double kGuard = 1e-8;

// [T, H, W] -> [T, H, W] through a 3x3 single-channel zero-padded filter.
Tensor filter3x3(const Tensor& maps, const std::vector<double>& k) {
  const std::size_t t = maps.dim(0), h = maps.dim(1), w = maps.dim(2);
  Tensor x = maps.reshaped({t, h, w, 1});
  Tensor kernel(Shape{1, 3, 3, 1}, k);
  return kernels::conv2d(x, kernel, 1, 1).reshaped({t, h, w});
}

Tensor sobel_magnitude(const Tensor& luma) {
  Tensor gx = filter3x3(luma, {-1, 0, 1, -2, 0, 2, -1, 0, 1});
  Tensor gy = filter3x3(luma, {-1, -2, -1, 0, 0, 0, 1, 2, 1});
  Tensor m(luma.shape());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i] + 1e-6);
  return m;
}

// |X_t - X_{t-1}| over the leading axis.
Tensor abs_frame_diff(const Tensor& x) {
  const std::size_t t = x.dim(0);
  const std::size_t plane = x.size() / t;
  Shape shape = x.shape();
  shape[0] = t - 1;
  Tensor out(shape);
  for (std::size_t f = 1; f < t; ++f) {
    for (std::size_t i = 0; i < plane; ++i) {
      out[(f - 1) * plane + i] = std::abs(x[f * plane + i] - x[(f - 1) * plane + i]);
    }
  }
  return out;
}

Tensor mean_abs_rgb_diff(const Clip& clip) {
  const std::size_t t = clip.num_frames(), h = clip.height(), w = clip.width();
  const std::size_t plane = h * w;
  const Tensor& f = clip.frames;
  Tensor out(Shape{t - 1, h, w});
  for (std::size_t k = 1; k < t; ++k) {
    for (std::size_t p = 0; p < plane; ++p) {
      const std::size_t a = (k * plane + p) * 3, b = ((k - 1) * plane + p) * 3;
      out[(k - 1) * plane + p] = (std::abs(f[a] - f[b]) + std::abs(f[a + 1] - f[b + 1]) +
                                  std::abs(f[a + 2] - f[b + 2])) / 3.0;
    }
  }
  return out;
}

Tensor channel_of(const Tensor& stack, std::size_t c) {
  Shape shape(stack.shape().begin() + 1, stack.shape().end());
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape),
                std::vector<double>(stack.data() + c * n, stack.data() + (c + 1) * n));
}

double softplus_of(double w) { return kernels::softplus(w); }

}  // namespace

void Clip::validate() const {
  if (frames.rank() != 4 || frames.dim(3) != 3) {
    throw FormatError("clip: frames must be [T,H,W,3], got " + shape_str(frames.shape()));
  }
  if (frames.dim(0) < 2) throw FormatError("clip: need at least 2 frames");
  if (frames.dim(1) == 0 || frames.dim(2) == 0) throw FormatError("clip: empty frame");
  for (double v : frames.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw FormatError("clip: frame values must lie in [0,1]");
  }
}

void EmbeddingSequence::validate() const {
  if (patches.rank() != 3) {
    throw FormatError("embeddings: patches must be [T,N,D], got " + shape_str(patches.shape()));
  }
  const std::size_t n = patches.dim(1);
  const auto g = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n))));
  if (g * g != n || n == 0) {
    throw FormatError("embeddings: token count " + std::to_string(n) + " is not a perfect square");
  }
  if (video && (video->rank() != 1 || video->dim(0) != patches.dim(2))) {
    throw FormatError("embeddings: video vector must be [D]");
  }
  if (!patches.all_finite()) throw FormatError("embeddings: non-finite values");
}

const char* residual_name(ResidualKind kind) {
  switch (kind) {
    case ResidualKind::kHF: return "HF";
    case ResidualKind::kSobel: return "Sobel";
    case ResidualKind::kAbsDiff: return "AbsDiff";
    case ResidualKind::kDiff2: return "Diff2";
    case ResidualKind::kChroma: return "Chroma";
  }
  return "?";
}

double EventConfig::derived_beta(double c_th) { return std::max(c_th * 0.25, 1e-6); }

void EventConfig::validate() const {
  if (!(c_th > 0.0)) throw ArgumentError("event config: c_th must be positive");
  if (!(beta > 0.0)) throw ArgumentError("event config: beta must be positive");
  if (!(s_post > 0.0)) throw ArgumentError("event config: s_post must be positive");
  if (grid == 0) throw ArgumentError("event config: grid must be positive");
}

double identity_scale_logit() { return std::log(std::numbers::e - 1.0); }

Tensor to_luma(const Clip& clip) {
  clip.validate();
  const std::size_t t = clip.num_frames(), h = clip.height(), w = clip.width();
  Tensor y(Shape{t, h, w});
  const Tensor& f = clip.frames;
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = 0.299 * f[3 * i] + 0.587 * f[3 * i + 1] + 0.114 * f[3 * i + 2];
  }
  return y;
}

Tensor compute_residual(ResidualKind kind, const Clip& clip) {
  clip.validate();
  switch (kind) {
    case ResidualKind::kHF:
      return abs_frame_diff(filter3x3(to_luma(clip), {0, 1, 0, 1, -4, 1, 0, 1, 0}));
    case ResidualKind::kSobel:
      return abs_frame_diff(sobel_magnitude(to_luma(clip)));
    case ResidualKind::kAbsDiff:
      return mean_abs_rgb_diff(clip);
    case ResidualKind::kDiff2: {
      if (clip.num_frames() < 3) throw ArgumentError("Diff2 needs at least 3 frames");
      return abs_frame_diff(mean_abs_rgb_diff(clip));
    }
    case ResidualKind::kChroma: {
      const std::size_t t = clip.num_frames(), h = clip.height(), w = clip.width();
      const Tensor& f = clip.frames;
      Tensor cb(Shape{t, h, w}), cr(Shape{t, h, w});
      for (std::size_t i = 0; i < cb.size(); ++i) {
        const double r = f[3 * i], g = f[3 * i + 1], b = f[3 * i + 2];
        cb[i] = -0.169 * r - 0.331 * g + 0.5 * b + 0.5;
        cr[i] = 0.5 * r - 0.419 * g - 0.081 * b + 0.5;
      }
      Tensor dcb = abs_frame_diff(cb);
      Tensor dcr = abs_frame_diff(cr);
      for (std::size_t i = 0; i < dcb.size(); ++i) dcb[i] += dcr[i];
      return dcb;
    }
  }
  throw ArgumentError("unknown residual kind");
}

Tensor adaptive_avg_pool(const Tensor& maps, std::size_t grid) {
  if (maps.rank() != 3) throw ShapeError("adaptive_avg_pool: expected [T,H,W]");
  if (grid == 0) throw ArgumentError("adaptive_avg_pool: grid must be positive");
  const std::size_t t = maps.dim(0), h = maps.dim(1), w = maps.dim(2);
  Tensor out(Shape{t, grid, grid});
  for (std::size_t f = 0; f < t; ++f) {
    for (std::size_t gy = 0; gy < grid; ++gy) {
      const std::size_t y0 = gy * h / grid, y1 = ((gy + 1) * h + grid - 1) / grid;
      for (std::size_t gx = 0; gx < grid; ++gx) {
        const std::size_t x0 = gx * w / grid, x1 = ((gx + 1) * w + grid - 1) / grid;
        double s = 0.0;
        for (std::size_t y = y0; y < y1; ++y)
          for (std::size_t x = x0; x < x1; ++x) s += maps[(f * h + y) * w + x];
        out[(f * grid + gy) * grid + gx] = s / static_cast<double>((y1 - y0) * (x1 - x0));
      }
    }
  }
  return out;
}

Tensor left_pad_frames(const Tensor& maps, std::size_t frames) {
  if (maps.rank() == 0 || maps.dim(0) > frames) {
    throw ShapeError("left_pad_frames: cannot pad " + shape_str(maps.shape()) + " to " +
                     std::to_string(frames) + " frames");
  }
  Shape shape = maps.shape();
  const std::size_t pad = frames - shape[0];
  shape[0] = frames;
  Tensor out(shape);
  const std::size_t plane = shape_numel(shape) / frames;
  std::copy(maps.values().begin(), maps.values().end(), out.values().begin() + pad * plane);
  return out;
}

Tensor normalize_temporal_mean(const Tensor& maps, std::size_t first_valid) {
  const std::size_t t = maps.dim(0);
  const std::size_t plane = maps.size() / t;
  double mean = 0.0;
  if (first_valid < t) {
    for (std::size_t i = first_valid * plane; i < maps.size(); ++i) mean += maps[i];
    mean /= static_cast<double>((t - first_valid) * plane);
  }
  Tensor out = maps;
  for (double& v : out.values()) v /= (mean + kNormEps);
  return out;
}

Tensor soft_threshold(const Tensor& delta, double c_th, double beta) {
  if (!(beta > 0.0)) throw ArgumentError("soft_threshold: beta must be positive");
  Tensor out(delta.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = kernels::sigmoid((delta[i] - c_th) / beta);
  return out;
}

Var soft_threshold(Var delta, double c_th, double beta) {
  if (!(beta > 0.0)) throw ArgumentError("soft_threshold: beta must be positive");
  return sigmoid(scale(add_scalar(delta, -c_th), 1.0 / beta));
}

Tensor postprocess_channel(const Tensor& raw, const EventConfig& config, std::size_t first_valid,
                           double w_c) {
  config.validate();
  for (double v : raw.values()) {
    if (v < 0.0) throw ArgumentError("postprocess_channel: raw map must be non-negative");
  }
  Tensor pooled = adaptive_avg_pool(normalize_temporal_mean(raw, first_valid), config.grid);
  const double gain = softplus_of(w_c);
  const std::size_t plane = config.grid * config.grid;
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    pooled[i] = i < plane ? 0.0 : kernels::sigmoid((pooled[i] * gain - config.tau_post) / config.s_post);
  }
  return pooled;
}

Trajectory trajectory_channels(const EmbeddingSequence& emb) {
  emb.validate();
  const std::size_t t = emb.num_frames(), n = emb.num_tokens(), d = emb.dim();
  const auto g = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n))));
  Trajectory out{Tensor(Shape{t, g, g}), Tensor(Shape{t, g, g})};
  const Tensor& z = emb.patches;
  auto delta = [&](std::size_t f, std::size_t tok, std::size_t k) {
    return z[(f * n + tok) * d + k] - z[((f - 1) * n + tok) * d + k];
  };
  for (std::size_t f = 1; f < t; ++f) {
    for (std::size_t tok = 0; tok < n; ++tok) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += delta(f, tok, k) * delta(f, tok, k);
      out.displacement[f * n + tok] = std::sqrt(s);
    }
  }
  for (std::size_t f = 2; f < t; ++f) {
    for (std::size_t tok = 0; tok < n; ++tok) {
      const double a = out.displacement[f * n + tok];
      const double b = out.displacement[(f - 1) * n + tok];
      if (a < kGuard || b < kGuard) continue;
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) dot += delta(f, tok, k) * delta(f - 1, tok, k);
      out.curvature[f * n + tok] = std::acos(std::clamp(dot / (a * b), -1.0, 1.0));
    }
  }
  return out;
}

PooledEvents pool_events(const Clip& clip, const EmbeddingSequence* emb,
                         const EventConfig& config) {
  clip.validate();
  config.validate();
  const std::size_t t = clip.num_frames();
  const std::size_t g = config.grid;
  if (t < 3) throw ArgumentError("pool_events: Diff2 needs at least 3 frames");

  std::vector<Tensor> channels;
  std::vector<std::string> names;
  for (ResidualKind kind :
       {ResidualKind::kHF, ResidualKind::kSobel, ResidualKind::kAbsDiff, ResidualKind::kDiff2}) {
    Tensor r = compute_residual(kind, clip);
    const std::size_t first_valid = t - r.dim(0);
    channels.push_back(
        adaptive_avg_pool(normalize_temporal_mean(left_pad_frames(r, t), first_valid), g));
    names.emplace_back(residual_name(kind));
  }
  if (emb != nullptr) {
    emb->validate();
    if (emb->num_frames() != t) throw FormatError("embeddings: frame count differs from clip");
    if (emb->num_tokens() != g * g) {
      throw FormatError("embeddings: token count " + std::to_string(emb->num_tokens()) +
                        " does not match a " + std::to_string(g) + "x" + std::to_string(g) +
                        " grid");
    }
    Trajectory tr = trajectory_channels(*emb);
    channels.push_back(normalize_temporal_mean(tr.displacement, 1));
    channels.push_back(normalize_temporal_mean(tr.curvature, 2));
    names.emplace_back("d");
    names.emplace_back("kappa");
  }
  const std::size_t plane = t * g * g;
  Tensor maps(Shape{channels.size(), t, g, g});
  for (std::size_t c = 0; c < channels.size(); ++c) {
    std::copy(channels[c].values().begin(), channels[c].values().end(),
              maps.values().begin() + c * plane);
  }
  return {std::move(maps), std::move(names)};
}

Var event_channel(Tape& tape, const PooledEvents& pooled, std::size_t c, Var w_c,
                  const EventConfig& config) {
  if (c >= pooled.num_channels()) throw ArgumentError("event_channel: channel out of range");
  const std::size_t t = pooled.num_frames(), g = pooled.grid();
  Var x = mul(tape.constant(channel_of(pooled.maps, c)), softplus(w_c));
  if (config.post_sigmoid) x = sigmoid(scale(add_scalar(x, -config.tau_post), 1.0 / config.s_post));
  Var e = soft_threshold(x, config.c_th, config.beta);
  Tensor mask(Shape{t, g, g}, 1.0);
  std::fill(mask.values().begin(), mask.values().begin() + g * g, 0.0);
  return mul(e, tape.constant(std::move(mask)));
}

EventTensor assemble_event_tensor(const Clip& clip, const EmbeddingSequence* emb,
                                  const EventConfig& config, const Tensor* w_scale) {
  PooledEvents pooled = pool_events(clip, emb, config);
  const std::size_t c_n = pooled.num_channels(), t = pooled.num_frames(), g = pooled.grid();
  if (w_scale != nullptr && w_scale->size() != c_n) {
    throw ShapeError("assemble_event_tensor: expected " + std::to_string(c_n) + " gain logits");
  }
  Tape tape;
  tape.set_grad_enabled(false);
  EventTensor out{Tensor(Shape{t, c_n, g, g}), pooled.channel_names};
  const std::size_t plane = g * g;
  for (std::size_t c = 0; c < c_n; ++c) {
    const double w = w_scale ? (*w_scale)[c] : identity_scale_logit();
    Var e = event_channel(tape, pooled, c, tape.constant(Tensor::scalar(w)), config);
    const Tensor& v = e.value();
    for (std::size_t f = 0; f < t; ++f) {
      std::copy(v.data() + f * plane, v.data() + (f + 1) * plane,
                out.values.data() + (f * c_n + c) * plane);
    }
  }
  return out;
}

}  // namespace spikegate::events

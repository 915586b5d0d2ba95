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


#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "spikegate/error.hpp"
#include "spikegate/events.hpp"
#include "spikegate/gradcheck.hpp"
#include "spikegate/ops.hpp"

namespace spikegate::events {
namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Clip solid_clip(std::size_t t, std::size_t h, std::size_t w, double r, double g, double b) {
  Clip c;
  c.frames = Tensor(Shape{t, h, w, 3});
  for (std::size_t i = 0; i < t * h * w; ++i) {
    c.frames[3 * i] = r;
    c.frames[3 * i + 1] = g;
    c.frames[3 * i + 2] = b;
  }
  return c;
}

Clip random_clip(std::size_t t, std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Clip c;
  c.frames = Tensor(Shape{t, h, w, 3});
  for (double& v : c.frames.values()) v = u(rng);
  return c;
}

// Grey vertical step edge at column `edge0 + t`.
Clip moving_edge(std::size_t t, std::size_t h, std::size_t w, std::size_t edge0) {
  Clip c = solid_clip(t, h, w, 0.1, 0.1, 0.1);
  for (std::size_t f = 0; f < t; ++f)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = edge0 + f; x < w; ++x)
        for (std::size_t ch = 0; ch < 3; ++ch) c.frames.at({f, y, x, ch}) = 0.9;
  return c;
}

EmbeddingSequence constant_embeddings(std::size_t t, std::size_t n, std::size_t d) {
  EmbeddingSequence e;
  e.patches = Tensor(Shape{t, n, d}, 0.25);
  return e;
}

TEST(Luma, ReferenceColours) {
  EXPECT_DOUBLE_EQ(to_luma(solid_clip(2, 3, 3, 1, 1, 1))[0], 1.0);
  EXPECT_DOUBLE_EQ(to_luma(solid_clip(2, 3, 3, 1, 0, 0))[5], 0.299);
  EXPECT_DOUBLE_EQ(to_luma(solid_clip(2, 3, 3, 0.5, 0.5, 0.5))[7], 0.5);
}

TEST(Clip, ValidationRejectsBadInput) {
  Clip c = solid_clip(2, 3, 3, 0.2, 0.2, 0.2);
  c.frames[4] = 1.5;
  EXPECT_THROW(c.validate(), FormatError);
  Clip one = solid_clip(1, 3, 3, 0.2, 0.2, 0.2);
  EXPECT_THROW(one.validate(), FormatError);
  Clip two = solid_clip(2, 4, 4, 0.2, 0.2, 0.2);
  EXPECT_THROW(compute_residual(ResidualKind::kDiff2, two), ArgumentError);
}

TEST(Residual, StaticClipIsSilent) {
  Clip c = random_clip(1, 9, 8, 3);
  Clip s;
  s.frames = Tensor(Shape{4, 9, 8, 3});
  for (std::size_t f = 0; f < 4; ++f)
    std::copy(c.frames.values().begin(), c.frames.values().end(),
              s.frames.values().begin() + f * c.frames.size());
  for (ResidualKind k : {ResidualKind::kHF, ResidualKind::kSobel, ResidualKind::kAbsDiff,
                         ResidualKind::kDiff2, ResidualKind::kChroma}) {
    Tensor r = compute_residual(k, s);
    for (double v : r.values()) EXPECT_EQ(v, 0.0) << residual_name(k);
  }
  EXPECT_EQ(compute_residual(ResidualKind::kDiff2, s).dim(0), 2u);
  EXPECT_EQ(compute_residual(ResidualKind::kHF, s).dim(0), 3u);
}

// Oracle: explicit Sobel sums with out-of-range pixels read as zero.
double sobel_oracle(const Tensor& luma, std::size_t f, long y, long x) {
  const long h = static_cast<long>(luma.dim(1)), w = static_cast<long>(luma.dim(2));
  auto px = [&](long yy, long xx) {
    if (yy < 0 || xx < 0 || yy >= h || xx >= w) return 0.0;
    return luma.at({f, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx)});
  };
  const double gx = (px(y - 1, x + 1) + 2 * px(y, x + 1) + px(y + 1, x + 1)) -
                    (px(y - 1, x - 1) + 2 * px(y, x - 1) + px(y + 1, x - 1));
  const double gy = (px(y + 1, x - 1) + 2 * px(y + 1, x) + px(y + 1, x + 1)) -
                    (px(y - 1, x - 1) + 2 * px(y - 1, x) + px(y - 1, x + 1));
  return std::sqrt(gx * gx + gy * gy + 1e-6);
}

TEST(Residual, SobelOnTranslatingEdge) {
  Clip c = moving_edge(3, 10, 12, 4);
  Tensor r = compute_residual(ResidualKind::kSobel, c);
  Tensor y = to_luma(c);
  for (std::size_t f = 1; f < 3; ++f) {
    for (long yy = 1; yy < 9; ++yy) {
      for (long xx = 0; xx < 12; ++xx) {
        const double expect = std::abs(sobel_oracle(y, f, yy, xx) - sobel_oracle(y, f - 1, yy, xx));
        const double got = r.at({f - 1, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx)});
        EXPECT_NEAR(got, expect, 1e-12);
        // The edge sits between columns 3+f and 4+f; only a narrow band moves.
        const long edge = 4 + static_cast<long>(f);
        if (xx < edge - 3 || xx > edge + 2) EXPECT_NEAR(got, 0.0, 1e-12);
      }
    }
    EXPECT_GT(r.at({f - 1, 5, static_cast<std::size_t>(4 + f)}), 0.1);
  }
}

TEST(Residual, AbsDiffIsTimeReversalSymmetric) {
  Clip c = random_clip(5, 6, 7, 11);
  Clip rev = c;
  const std::size_t frame = c.frames.size() / 5;
  for (std::size_t f = 0; f < 5; ++f)
    std::copy(c.frames.data() + f * frame, c.frames.data() + (f + 1) * frame,
              rev.frames.data() + (4 - f) * frame);
  Tensor a = compute_residual(ResidualKind::kAbsDiff, c);
  Tensor b = compute_residual(ResidualKind::kAbsDiff, rev);
  const std::size_t plane = a.size() / 4;
  for (std::size_t f = 0; f < 4; ++f)
    for (std::size_t i = 0; i < plane; ++i) EXPECT_EQ(a[f * plane + i], b[(3 - f) * plane + i]);
}

TEST(Residual, Diff2VanishesForConstantMotion) {
  Clip c = solid_clip(6, 5, 5, 0, 0, 0);
  for (std::size_t f = 0; f < 6; ++f)
    for (std::size_t i = 0; i < 25 * 3; ++i) c.frames[f * 75 + i] = 0.125 * static_cast<double>(f);
  const Tensor d2 = compute_residual(ResidualKind::kDiff2, c);
  for (double v : d2.values()) EXPECT_NEAR(v, 0.0, 1e-15);
  Tensor a = compute_residual(ResidualKind::kAbsDiff, c);
  EXPECT_NEAR(a[0], 0.125, 1e-15);
}

TEST(Pool, BlockMeansOn28To14) {
  Tensor m(Shape{1, 28, 28});
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = static_cast<double>(i);
  Tensor p = adaptive_avg_pool(m, 14);
  for (std::size_t gy = 0; gy < 14; ++gy) {
    for (std::size_t gx = 0; gx < 14; ++gx) {
      const double block = (m.at({0, 2 * gy, 2 * gx}) + m.at({0, 2 * gy, 2 * gx + 1}) +
                            m.at({0, 2 * gy + 1, 2 * gx}) + m.at({0, 2 * gy + 1, 2 * gx + 1})) / 4;
      EXPECT_DOUBLE_EQ(p.at({0, gy, gx}), block);
    }
  }
}

TEST(Pool, UnevenPartitionCoversEveryPixel) {
  Tensor m(Shape{1, 10, 10}, 1.0);
  Tensor p = adaptive_avg_pool(m, 3);
  for (double v : p.values()) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(Postprocess, ZeroInputFloor) {
  EventConfig cfg;
  cfg.grid = 4;
  Tensor out = postprocess_channel(Tensor(Shape{3, 8, 8}), cfg);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(out[i], 0.0);
  for (std::size_t i = 16; i < out.size(); ++i) EXPECT_NEAR(out[i], logistic(-2.0), 1e-15);
}

TEST(Postprocess, UniformMapNormalizesToOne) {
  Tensor m(Shape{3, 4, 4}, 0.37);
  Tensor n = normalize_temporal_mean(m, 0);
  for (double v : n.values()) EXPECT_NEAR(v, 1.0, 1e-7);
}

TEST(SoftThreshold, ReferencePoints) {
  Tensor d = Tensor::vector({0.10, 0.10 + 10 * 0.025, 0.0});
  Tensor e = soft_threshold(d, 0.10, 0.025);
  EXPECT_DOUBLE_EQ(e[0], 0.5);
  EXPECT_NEAR(e[1], 0.9999546021, 1e-9);
  EXPECT_NEAR(e[2], 0.0179862100, 1e-9);
  EXPECT_DOUBLE_EQ(EventConfig::derived_beta(0.10), 0.025);
  EXPECT_DOUBLE_EQ(EventConfig::derived_beta(0.0), 1e-6);
}

TEST(Trajectory, ConstantCollinearAndReversal) {
  EmbeddingSequence still = constant_embeddings(4, 4, 3);
  Trajectory tr = trajectory_channels(still);
  for (double v : tr.displacement.values()) EXPECT_EQ(v, 0.0);
  for (double v : tr.curvature.values()) EXPECT_EQ(v, 0.0);

  EmbeddingSequence line;
  line.patches = Tensor(Shape{4, 4, 2});
  EmbeddingSequence flip = line;
  for (std::size_t f = 0; f < 4; ++f) {
    for (std::size_t n = 0; n < 4; ++n) {
      line.patches.at({f, n, 0}) = 0.5 * static_cast<double>(f);
      line.patches.at({f, n, 1}) = static_cast<double>(f);
      flip.patches.at({f, n, 0}) = (f % 2 == 0) ? 0.0 : 1.0;
    }
  }
  Trajectory a = trajectory_channels(line);
  Trajectory b = trajectory_channels(flip);
  for (std::size_t i = 8; i < 16; ++i) {
    EXPECT_NEAR(a.curvature[i], 0.0, 1e-7);
    EXPECT_NEAR(b.curvature[i], std::numbers::pi, 1e-7);
  }
  EXPECT_NEAR(a.displacement[4], std::sqrt(1.25), 1e-15);
  EXPECT_EQ(a.displacement[0], 0.0);
}

TEST(Trajectory, RejectsNonSquareTokenCount) {
  EmbeddingSequence e = constant_embeddings(3, 5, 2);
  EXPECT_THROW(trajectory_channels(e), FormatError);
}

TEST(Assemble, StaticClipSitsOnTheFloor) {
  Clip c = solid_clip(4, 8, 8, 0.3, 0.6, 0.2);
  EmbeddingSequence e = constant_embeddings(4, 16, 5);
  EventConfig cfg;
  cfg.grid = 4;
  EventTensor et = assemble_event_tensor(c, &e, cfg);
  ASSERT_EQ(et.values.shape(), (Shape{4, 6, 4, 4}));
  // Zero-input soft-threshold floor sigma(-c_th / beta) = sigma(-4).
  const double floor = logistic(-0.10 / 0.025);
  const std::size_t frame = 6 * 16;
  for (std::size_t i = 0; i < frame; ++i) EXPECT_EQ(et.values[i], 0.0);
  for (std::size_t i = frame; i < et.values.size(); ++i) EXPECT_NEAR(et.values[i], floor, 1e-14);

  cfg.post_sigmoid = true;
  EventTensor stacked = assemble_event_tensor(c, &e, cfg);
  const double stacked_floor = logistic((logistic(-2.0) - 0.10) / 0.025);
  for (std::size_t i = frame; i < stacked.values.size(); ++i) {
    EXPECT_NEAR(stacked.values[i], stacked_floor, 1e-14);
  }
}

TEST(Assemble, PixelOnlyChannelContract) {
  Clip c = random_clip(4, 8, 8, 2);
  EventConfig cfg;
  cfg.grid = 4;
  EventTensor et = assemble_event_tensor(c, nullptr, cfg);
  EXPECT_EQ(et.num_channels(), 4u);
  EXPECT_EQ(et.channel_names, (std::vector<std::string>{"HF", "Sobel", "AbsDiff", "Diff2"}));
}

TEST(Assemble, RangeMaskAndPurity) {
  EventConfig cfg;
  cfg.grid = 7;
  std::vector<Clip> clips{random_clip(5, 14, 14, 1), moving_edge(5, 14, 14, 2),
                          random_clip(5, 14, 14, 9)};
  std::vector<Tensor> first;
  for (const Clip& c : clips) first.push_back(assemble_event_tensor(c, nullptr, cfg).values);
  for (int k = 2; k >= 0; --k) {
    Tensor again = assemble_event_tensor(clips[k], nullptr, cfg).values;
    EXPECT_EQ(again.storage(), first[k].storage());
  }
  for (const Tensor& v : first) {
    const std::size_t frame = v.size() / v.dim(0);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i < frame) {
        EXPECT_EQ(v[i], 0.0);
      } else {
        // Open interval mathematically; the logistic rounds to 1.0 in double
        // precision well inside the saturated range.
        EXPECT_GT(v[i], 0.0);
        EXPECT_LE(v[i], 1.0);
      }
    }
  }
}

TEST(Assemble, FlickerOutfiresSmoothMotion) {
  // Same content; one gets per-frame independent pixel noise.
  Clip smooth = moving_edge(6, 16, 16, 3);
  Clip flicker = smooth;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.08, 0.08);
  for (double& v : flicker.frames.values()) v = std::clamp(v + u(rng), 0.0, 1.0);
  EventConfig cfg;
  cfg.grid = 8;
  auto mean_of = [](const Tensor& t) {
    double s = 0.0;
    for (double v : t.values()) s += v;
    return s / static_cast<double>(t.size());
  };
  EXPECT_GT(mean_of(assemble_event_tensor(flicker, nullptr, cfg).values),
            mean_of(assemble_event_tensor(smooth, nullptr, cfg).values));
}

TEST(EventChannel, GainGradientMatchesFiniteDifferences) {
  Clip c = moving_edge(4, 8, 8, 1);
  EventConfig cfg;
  cfg.grid = 4;
  // Lower the squashing slope so the check probes a non-saturated region.
  cfg.s_post = 0.8;
  cfg.beta = 0.5;
  PooledEvents pooled = pool_events(c, nullptr, cfg);
  for (bool stacked : {false, true}) {
    cfg.post_sigmoid = stacked;
    for (std::size_t ch = 0; ch < pooled.num_channels(); ++ch) {
      auto f = [&](Var w) { return event_channel(w.tape(), pooled, ch, w, cfg); };
      EXPECT_LT(finite_difference_check(f, Tensor::scalar(-0.7)), 1e-4) << ch;
    }
  }
}

}  // namespace
}  // namespace spikegate::events

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
#include <limits>
#include <span>
#include <vector>

#include "spikegate/tensor.hpp"

namespace spikegate::metrics {

/// (sqrt(N) - |x|_1 / |x|_2) / (sqrt(N) - 1); 0 for an all-zero vector.
double hoyer(std::span<const double> x);

/// Power-weighted mean frequency (cycles/frame) over bins 1..floor(T/2)
/// of the mean-removed series. 0 when there is no AC power.
double spectral_centroid(std::span<const double> s);

struct Curvature {
  std::vector<double> angles;  // T-2 turning angles
  double median = 0.0;
};

/// Turning angles between consecutive displacements of a [T, D] trajectory.
Curvature angular_curvature(const Tensor& trajectory);

struct SummaryStats {
  double mean = 0.0, std = 0.0, max = 0.0, min = 0.0;
};

SummaryStats summarize(std::span<const double> v);

struct TrajDiffStats {
  SummaryStats d1, d2;          // Euclidean
  SummaryStats d1_cos, d2_cos;  // on L2-normalized features
};

/// First- and second-order temporal difference statistics of [T, D] features.
TrajDiffStats traj_diff_stats(const Tensor& features);

/// Clip trajectory [T, D]: mean over the N tokens of [T, N, D] patches.
Tensor token_mean_trajectory(const Tensor& patches);

/// Projects [n, D] points onto the top three principal axes -> [n, 3].
/// Each axis is signed so its largest-magnitude coordinate is positive;
/// missing rank is padded with zero coordinates.
Tensor pca3_project(const Tensor& points);

/// Volume of the 3D convex hull of [n, 3] points; 0 for degenerate sets.
double convex_hull_volume(const Tensor& points);

/// A_t = A_{t-1} exp(-1/tau) + a_t with A_0 = 0. tau = inf gives a plain sum.
std::vector<double> raw_anomaly_trace(std::span<const double> a,
                                      double tau = 4.0);

/// Mean of each frame of a [T, ...] stack.
std::vector<double> frame_means(const Tensor& maps);

/// Linear-interpolation percentile (p in [0, 100]).
double percentile(std::vector<double> v, double p);
double median(std::vector<double> v);

struct BoundaryMasks {
  std::size_t grid = 0;
  std::vector<bool> boundary;  // row-major G*G

  static BoundaryMasks make(std::size_t grid);
  std::size_t boundary_count() const;
  std::size_t interior_count() const;
};

struct FireRates {
  double boundary = 0.0;
  double interior = 0.0;
};

/// BF/IF of one frame from an explicit row-major activity mask.
FireRates fire_from_active(const std::vector<bool>& active, std::size_t grid,
                           std::size_t run_length = 3);

/// Per-frame activity is gate > the frame's percentile; the clip value is
/// the frame mean. gates: [T, G, G].
FireRates boundary_interior_fire(const Tensor& gates, double pct = 70.0,
                                 std::size_t run_length = 3);

struct EdgeOverlap {
  double pearson = 0.0;
  double precision_at_20 = 0.0;
  double mean_edge = 0.0;
  double mean_nonedge = 0.0;
  double edge_ratio = 0.0;
};

/// Edge cells are those whose edge strength exceeds its own percentile.
/// gate and edge_strength are aligned maps of equal size.
EdgeOverlap edge_gate_overlap(const Tensor& gate, const Tensor& edge_strength,
                              double edge_pct = 70.0, double top_fraction = 0.2);

/// Pearson correlation; 0 if either input is constant.
double pearson(std::span<const double> a, std::span<const double> b);

/// Rank-based AUROC with ties counted half. Throws on single-class input.
double auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace spikegate::metrics

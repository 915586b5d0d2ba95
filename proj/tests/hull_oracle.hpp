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


// Brute-force references shared by the metric tests and the acceptance
// harness. Deliberately naive: facet enumeration over all point triples.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "spikegate/tensor.hpp"

namespace spikegate::testing_oracle {

inline double tetra_volume(const Tensor& p) {
  double a[3][3];
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) a[r][c] = p[(r + 1) * 3 + c] - p[c];
  const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                     a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                     a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  return std::abs(det) / 6.0;
}

// Supporting planes n.x <= c of the hull, found by checking every triple.
inline std::vector<std::array<double, 4>> supporting_planes(const Tensor& p) {
  const std::size_t n = p.dim(0);
  auto pt = [&](std::size_t i, int k) { return p[i * 3 + k]; };
  std::vector<std::array<double, 4>> planes;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k) {
        const double u[3] = {pt(j, 0) - pt(i, 0), pt(j, 1) - pt(i, 1), pt(j, 2) - pt(i, 2)};
        const double v[3] = {pt(k, 0) - pt(i, 0), pt(k, 1) - pt(i, 1), pt(k, 2) - pt(i, 2)};
        double nn[3] = {u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2],
                        u[0] * v[1] - u[1] * v[0]};
        const double len = std::sqrt(nn[0] * nn[0] + nn[1] * nn[1] + nn[2] * nn[2]);
        if (len < 1e-12) continue;
        for (double& x : nn) x /= len;
        const double c = nn[0] * pt(i, 0) + nn[1] * pt(i, 1) + nn[2] * pt(i, 2);
        int above = 0, below = 0;
        for (std::size_t m = 0; m < n; ++m) {
          const double s = nn[0] * pt(m, 0) + nn[1] * pt(m, 1) + nn[2] * pt(m, 2) - c;
          if (s > 1e-12) ++above;
          if (s < -1e-12) ++below;
        }
        if (above == 0) planes.push_back({nn[0], nn[1], nn[2], c});
        if (below == 0) planes.push_back({-nn[0], -nn[1], -nn[2], -c});
      }
  return planes;
}

inline double monte_carlo_hull_volume(const Tensor& p, std::size_t samples, std::uint64_t seed) {
  const std::size_t n = p.dim(0);
  double lo[3] = {p[0], p[1], p[2]}, hi[3] = {p[0], p[1], p[2]};
  for (std::size_t i = 0; i < n; ++i)
    for (int k = 0; k < 3; ++k) {
      lo[k] = std::min(lo[k], p[i * 3 + k]);
      hi[k] = std::max(hi[k], p[i * 3 + k]);
    }
  const auto planes = supporting_planes(p);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t inside = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    double x[3];
    for (int k = 0; k < 3; ++k) x[k] = lo[k] + (hi[k] - lo[k]) * u(rng);
    bool in = true;
    for (const auto& pl : planes) {
      if (pl[0] * x[0] + pl[1] * x[1] + pl[2] * x[2] > pl[3]) {
        in = false;
        break;
      }
    }
    inside += in ? 1 : 0;
  }
  return static_cast<double>(inside) / static_cast<double>(samples) * (hi[0] - lo[0]) *
         (hi[1] - lo[1]) * (hi[2] - lo[2]);
}

}  // namespace spikegate::testing_oracle

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


#include "spikegate/metrics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "spikegate/error.hpp"

namespace spikegate::metrics {

namespace {

constexpr double kGuard = 1e-8;

struct P3 {
  double x, y, z;
};

P3 operator-(P3 a, P3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
double dot(P3 a, P3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
P3 cross(P3 a, P3 b) { return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x}; }
double norm(P3 a) { return std::sqrt(dot(a, a)); }

double vec_norm(const double* v, std::size_t d) {
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) s += v[k] * v[k];
  return std::sqrt(s);
}

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) throw ShapeError(std::string(what) + ": expected a [n, D] matrix");
}

// Incremental hull over triangles with outward normals.
class Hull {
 public:
  explicit Hull(std::vector<P3> pts) : p_(std::move(pts)) {}

  double volume() {
    P3 lo = p_[0], hi = p_[0];
    for (const P3& q : p_) {
      lo = {std::min(lo.x, q.x), std::min(lo.y, q.y), std::min(lo.z, q.z)};
      hi = {std::max(hi.x, q.x), std::max(hi.y, q.y), std::max(hi.z, q.z)};
    }
    const double scale = norm(hi - lo);
    if (scale == 0.0) return 0.0;
    eps_ = 1e-12 * scale;

    std::size_t i0 = 0;
    for (std::size_t i = 1; i < p_.size(); ++i) {
      if (p_[i].x < p_[i0].x) i0 = i;
    }
    std::size_t i1 = farthest([&](P3 q) { return norm(q - p_[i0]); });
    if (norm(p_[i1] - p_[i0]) <= eps_) return 0.0;
    const P3 dir = p_[i1] - p_[i0];
    std::size_t i2 = farthest([&](P3 q) { return norm(cross(dir, q - p_[i0])) / norm(dir); });
    const P3 n = cross(dir, p_[i2] - p_[i0]);
    if (norm(n) / norm(dir) <= eps_) return 0.0;
    std::size_t i3 = farthest([&](P3 q) { return std::abs(dot(n, q - p_[i0])) / norm(n); });
    if (std::abs(dot(n, p_[i3] - p_[i0])) / norm(n) <= eps_) return 0.0;

    centre_ = {(p_[i0].x + p_[i1].x + p_[i2].x + p_[i3].x) / 4,
               (p_[i0].y + p_[i1].y + p_[i2].y + p_[i3].y) / 4,
               (p_[i0].z + p_[i1].z + p_[i2].z + p_[i3].z) / 4};
    add_face(i0, i1, i2);
    add_face(i0, i1, i3);
    add_face(i0, i2, i3);
    add_face(i1, i2, i3);

    for (std::size_t i = 0; i < p_.size(); ++i) {
      if (i == i0 || i == i1 || i == i2 || i == i3) continue;
      insert(i);
    }
    double v = 0.0;
    for (const Face& f : faces_) {
      if (!f.alive) continue;
      v += dot(p_[f.a] - centre_, cross(p_[f.b] - centre_, p_[f.c] - centre_)) / 6.0;
    }
    return v;
  }

 private:
  struct Face {
    std::size_t a, b, c;
    P3 normal;
    double offset;
    bool alive;
  };

  template <typename F>
  std::size_t farthest(F dist) const {
    std::size_t best = 0;
    double bd = -1.0;
    for (std::size_t i = 0; i < p_.size(); ++i) {
      const double d = dist(p_[i]);
      if (d > bd) {
        bd = d;
        best = i;
      }
    }
    return best;
  }

  void add_face(std::size_t a, std::size_t b, std::size_t c) {
    P3 n = cross(p_[b] - p_[a], p_[c] - p_[a]);
    if (dot(n, centre_ - p_[a]) > 0.0) {
      std::swap(b, c);
      n = {-n.x, -n.y, -n.z};
    }
    const double len = norm(n);
    if (len > 0.0) n = {n.x / len, n.y / len, n.z / len};
    faces_.push_back({a, b, c, n, dot(n, p_[a]), true});
  }

  void insert(std::size_t i) {
    const P3 q = p_[i];
    std::vector<std::size_t> visible;
    for (std::size_t f = 0; f < faces_.size(); ++f) {
      if (faces_[f].alive && dot(faces_[f].normal, q) - faces_[f].offset > eps_) visible.push_back(f);
    }
    if (visible.empty()) return;
    std::map<std::pair<std::size_t, std::size_t>, int> edges;
    for (std::size_t f : visible) {
      const Face& fc = faces_[f];
      edges[{fc.a, fc.b}]++;
      edges[{fc.b, fc.c}]++;
      edges[{fc.c, fc.a}]++;
    }
    for (std::size_t f : visible) faces_[f].alive = false;
    for (const auto& [e, count] : edges) {
      (void)count;
      if (edges.count({e.second, e.first}) == 0) add_face(e.first, e.second, i);
    }
  }

  std::vector<P3> p_;
  std::vector<Face> faces_;
  P3 centre_{};
  double eps_ = 0.0;
};

}  // namespace

double hoyer(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw ArgumentError("hoyer: need at least 2 values");
  double l1 = 0.0, l2 = 0.0;
  for (double v : x) {
    l1 += std::abs(v);
    l2 += v * v;
  }
  if (l2 == 0.0) return 0.0;
  const double sn = std::sqrt(static_cast<double>(n));
  return (sn - l1 / std::sqrt(l2)) / (sn - 1.0);
}

double spectral_centroid(std::span<const double> s) {
  const std::size_t t = s.size();
  if (t < 4) throw ArgumentError("spectral_centroid: need at least 4 samples");
  const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(t);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 1; k <= t / 2; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t n = 0; n < t; ++n) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * n) / static_cast<double>(t);
      re += (s[n] - mean) * std::cos(ang);
      im += (s[n] - mean) * std::sin(ang);
    }
    const double p = re * re + im * im;
    num += static_cast<double>(k) / static_cast<double>(t) * p;
    den += p;
  }
  // Mean removal leaves rounding-level residue on constant series.
  double ac = 0.0, energy = 0.0;
  for (double v : s) {
    ac += (v - mean) * (v - mean);
    energy += v * v;
  }
  if (den == 0.0 || ac <= 1e-20 * energy) return 0.0;
  return num / den;
}

Curvature angular_curvature(const Tensor& trajectory) {
  require_matrix(trajectory, "angular_curvature");
  const std::size_t t = trajectory.dim(0), d = trajectory.dim(1);
  if (t < 3) throw ArgumentError("angular_curvature: need at least 3 steps");
  Curvature c;
  std::vector<double> prev(d), cur(d);
  for (std::size_t s = 1; s + 1 < t; ++s) {
    for (std::size_t k = 0; k < d; ++k) {
      prev[k] = trajectory[s * d + k] - trajectory[(s - 1) * d + k];
      cur[k] = trajectory[(s + 1) * d + k] - trajectory[s * d + k];
    }
    const double a = vec_norm(prev.data(), d), b = vec_norm(cur.data(), d);
    double theta = 0.0;
    if (a >= kGuard && b >= kGuard) {
      double dp = 0.0;
      for (std::size_t k = 0; k < d; ++k) dp += prev[k] * cur[k];
      theta = std::acos(std::clamp(dp / (a * b), -1.0, 1.0));
    }
    c.angles.push_back(theta);
  }
  c.median = median(c.angles);
  return c;
}

SummaryStats summarize(std::span<const double> v) {
  SummaryStats s;
  if (v.empty()) return s;
  const double n = static_cast<double>(v.size());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double var = 0.0;
  for (double x : v) var += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(var / n);
  s.max = *std::max_element(v.begin(), v.end());
  s.min = *std::min_element(v.begin(), v.end());
  return s;
}

TrajDiffStats traj_diff_stats(const Tensor& features) {
  require_matrix(features, "traj_diff_stats");
  const std::size_t t = features.dim(0), d = features.dim(1);
  if (t < 3) throw ArgumentError("traj_diff_stats: need at least 3 frames");
  auto diffs = [t, d](const std::vector<double>& z, SummaryStats& s1, SummaryStats& s2) {
    std::vector<double> d1(t - 1), d2(t - 2);
    for (std::size_t s = 0; s + 1 < t; ++s) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double e = z[(s + 1) * d + k] - z[s * d + k];
        acc += e * e;
      }
      d1[s] = std::sqrt(acc);
    }
    for (std::size_t s = 0; s + 2 < t; ++s) d2[s] = std::abs(d1[s + 1] - d1[s]);
    s1 = summarize(d1);
    s2 = summarize(d2);
  };
  TrajDiffStats out;
  diffs(features.storage(), out.d1, out.d2);
  std::vector<double> unit = features.storage();
  for (std::size_t s = 0; s < t; ++s) {
    const double n = vec_norm(unit.data() + s * d, d);
    if (n < kGuard) continue;
    for (std::size_t k = 0; k < d; ++k) unit[s * d + k] /= n;
  }
  diffs(unit, out.d1_cos, out.d2_cos);
  return out;
}

Tensor token_mean_trajectory(const Tensor& patches) {
  if (patches.rank() != 3) throw ShapeError("token_mean_trajectory: patches must be [T, N, D]");
  const std::size_t t = patches.dim(0), n = patches.dim(1), d = patches.dim(2);
  Tensor out(Shape{t, d});
  for (std::size_t k = 0; k < t; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = patches.data() + (k * n + i) * d;
      for (std::size_t j = 0; j < d; ++j) out[k * d + j] += row[j];
    }
    for (std::size_t j = 0; j < d; ++j) out[k * d + j] /= static_cast<double>(n);
  }
  return out;
}

Tensor pca3_project(const Tensor& points) {
  require_matrix(points, "pca3_project");
  const std::size_t n = points.dim(0), d = points.dim(1);
  if (n < 4) throw ArgumentError("pca3_project: need at least 4 points");
  using Mat = Eigen::MatrixXd;
  Mat x(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) x(i, k) = points[i * d + k];
  x.rowwise() -= x.colwise().mean();
  Mat cov = (x.transpose() * x) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Mat> eig(cov);
  const auto& vals = eig.eigenvalues();
  const double top = std::max(vals(static_cast<Eigen::Index>(d) - 1), 0.0);
  Tensor out(Shape{n, 3});
  for (std::size_t c = 0; c < std::min<std::size_t>(3, d); ++c) {
    const auto col = static_cast<Eigen::Index>(d - 1 - c);
    if (!(vals(col) > 1e-12 * top) || top == 0.0) continue;  // missing rank
    Eigen::VectorXd v = eig.eigenvectors().col(col);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    Eigen::VectorXd proj = x * v;
    for (std::size_t i = 0; i < n; ++i) out[i * 3 + c] = proj(static_cast<Eigen::Index>(i));
  }
  return out;
}

double convex_hull_volume(const Tensor& points) {
  require_matrix(points, "convex_hull_volume");
  if (points.dim(1) != 3) throw ShapeError("convex_hull_volume: points must be [n, 3]");
  const std::size_t n = points.dim(0);
  if (n < 4) throw ArgumentError("convex_hull_volume: need at least 4 points");
  std::vector<P3> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = {points[3 * i], points[3 * i + 1], points[3 * i + 2]};
  return Hull(std::move(pts)).volume();
}

std::vector<double> raw_anomaly_trace(std::span<const double> a, double tau) {
  if (!(tau > 0.0)) throw ArgumentError("raw_anomaly_trace: tau must be positive");
  const double decay = std::isinf(tau) ? 1.0 : std::exp(-1.0 / tau);
  std::vector<double> out(a.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    acc = acc * decay + a[t];
    out[t] = acc;
  }
  return out;
}

std::vector<double> frame_means(const Tensor& maps) {
  if (maps.rank() == 0 || maps.dim(0) == 0) throw ShapeError("frame_means: expected [T, ...]");
  const std::size_t t = maps.dim(0), plane = maps.size() / t;
  std::vector<double> out(t);
  for (std::size_t f = 0; f < t; ++f) {
    double s = 0.0;
    for (std::size_t i = 0; i < plane; ++i) s += maps[f * plane + i];
    out[f] = s / static_cast<double>(plane);
  }
  return out;
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) throw ArgumentError("percentile: empty input");
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median(std::vector<double> v) { return percentile(std::move(v), 50.0); }

BoundaryMasks BoundaryMasks::make(std::size_t grid) {
  if (grid < 3) throw ArgumentError("BoundaryMasks: grid must be at least 3");
  BoundaryMasks m;
  m.grid = grid;
  m.boundary.assign(grid * grid, false);
  for (std::size_t y = 0; y < grid; ++y)
    for (std::size_t x = 0; x < grid; ++x)
      m.boundary[y * grid + x] = y == 0 || x == 0 || y == grid - 1 || x == grid - 1;
  return m;
}

std::size_t BoundaryMasks::boundary_count() const {
  return static_cast<std::size_t>(std::count(boundary.begin(), boundary.end(), true));
}

std::size_t BoundaryMasks::interior_count() const { return boundary.size() - boundary_count(); }

FireRates fire_from_active(const std::vector<bool>& active, std::size_t grid,
                           std::size_t run_length) {
  if (active.size() != grid * grid) throw ShapeError("fire_from_active: mask size != G*G");
  const BoundaryMasks masks = BoundaryMasks::make(grid);
  std::vector<bool> marked(grid * grid, false);
  // Marks cells lying in runs of >= run_length along a line of cell indices.
  auto scan = [&](const std::vector<std::size_t>& line) {
    std::size_t i = 0;
    while (i < line.size()) {
      if (!active[line[i]]) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < line.size() && active[line[j]]) ++j;
      if (j - i >= run_length) {
        for (std::size_t k = i; k < j; ++k) marked[line[k]] = true;
      }
      i = j;
    }
  };
  const std::size_t g = grid;
  std::vector<std::size_t> top, bottom, left, right;
  for (std::size_t k = 0; k < g; ++k) {
    top.push_back(k);
    bottom.push_back((g - 1) * g + k);
    left.push_back(k * g);
    right.push_back(k * g + g - 1);
  }
  for (const auto* line : {&top, &bottom, &left, &right}) scan(*line);
  for (std::size_t r = 1; r + 1 < g; ++r) {
    std::vector<std::size_t> row, col;
    for (std::size_t k = 1; k + 1 < g; ++k) {
      row.push_back(r * g + k);
      col.push_back(k * g + r);
    }
    scan(row);
    scan(col);
  }
  std::size_t bf = 0, inf = 0;
  for (std::size_t i = 0; i < g * g; ++i) {
    if (!marked[i]) continue;
    if (masks.boundary[i]) {
      ++bf;
    } else {
      ++inf;
    }
  }
  return {static_cast<double>(bf) / static_cast<double>(masks.boundary_count()),
          static_cast<double>(inf) / static_cast<double>(masks.interior_count())};
}

FireRates boundary_interior_fire(const Tensor& gates, double pct, std::size_t run_length) {
  if (gates.rank() != 3 || gates.dim(1) != gates.dim(2)) {
    throw ShapeError("boundary_interior_fire: expected [T, G, G] gate maps");
  }
  const std::size_t t = gates.dim(0), g = gates.dim(1), plane = g * g;
  FireRates sum;
  for (std::size_t f = 0; f < t; ++f) {
    std::vector<double> frame(gates.data() + f * plane, gates.data() + (f + 1) * plane);
    const double thr = percentile(frame, pct);
    std::vector<bool> active(plane);
    for (std::size_t i = 0; i < plane; ++i) active[i] = frame[i] > thr;
    FireRates r = fire_from_active(active, g, run_length);
    sum.boundary += r.boundary;
    sum.interior += r.interior;
  }
  sum.boundary /= static_cast<double>(t);
  sum.interior /= static_cast<double>(t);
  return sum;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw ShapeError("pearson: size mismatch");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

EdgeOverlap edge_gate_overlap(const Tensor& gate, const Tensor& edge_strength, double edge_pct,
                              double top_fraction) {
  if (gate.size() != edge_strength.size() || gate.size() == 0) {
    throw ShapeError("edge_gate_overlap: maps must be aligned");
  }
  const std::size_t n = gate.size();
  const double thr = percentile(edge_strength.storage(), edge_pct);
  std::vector<double> edge(n);
  for (std::size_t i = 0; i < n; ++i) edge[i] = edge_strength[i] > thr ? 1.0 : 0.0;

  EdgeOverlap out;
  out.pearson = pearson(gate.values(), edge);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return gate[a] > gate[b]; });
  const auto k = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(top_fraction * static_cast<double>(n))));
  double hits = 0.0;
  for (std::size_t i = 0; i < k; ++i) hits += edge[order[i]];
  out.precision_at_20 = hits / static_cast<double>(k);
  double se = 0.0, sn = 0.0, ne = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (edge[i] > 0.0) {
      se += gate[i];
      ne += 1.0;
    } else {
      sn += gate[i];
    }
  }
  const double nn = static_cast<double>(n) - ne;
  out.mean_edge = ne > 0 ? se / ne : 0.0;
  out.mean_nonedge = nn > 0 ? sn / nn : 0.0;
  out.edge_ratio = out.mean_nonedge > 0 ? out.mean_edge / out.mean_nonedge : 0.0;
  return out;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ShapeError("auc: size mismatch");
  std::size_t pos = 0;
  for (int l : labels) pos += l == 1 ? 1 : 0;
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw ArgumentError("auc: both classes must be present");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Average ranks over ties (1-based).
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) rank_sum += avg;
    }
    i = j;
  }
  const double p = static_cast<double>(pos), q = static_cast<double>(neg);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

}  // namespace spikegate::metrics

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


#include "spikegate/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "spikegate/error.hpp"

namespace spikegate::synthgen {

namespace {

using std::numbers::pi;

constexpr std::uint64_t kNoiseSalt = 0x5bd1e9955bd1e995ULL;

struct Wave {
  double fx, fy, phase, amp;
};

struct Disc {
  double x, y, vx, vy, radius;
  double rgb[3];
};

struct Scene {
  std::vector<Wave> waves;
  double tint[3];
  std::vector<Disc> discs;
  double pan_x, pan_y;
};

Scene make_scene(const SynthSpec& s) {
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Scene sc;
  for (int k = 0; k < 4; ++k) {
    const double ang = 2.0 * pi * u(rng);
    const double f = (0.6 + 0.8 * u(rng)) / s.texture_scale;
    sc.waves.push_back({f * std::cos(ang), f * std::sin(ang), 2.0 * pi * u(rng), 0.5 + u(rng)});
  }
  for (double& t : sc.tint) t = 0.7 + 0.3 * u(rng);
  const double pan = 2.0 * pi * u(rng);
  sc.pan_x = 0.5 * s.speed * std::cos(pan);
  sc.pan_y = 0.5 * s.speed * std::sin(pan);
  const double n = static_cast<double>(s.size);
  for (int k = 0; k < 3; ++k) {
    Disc d;
    d.x = n * (0.2 + 0.6 * u(rng));
    d.y = n * (0.2 + 0.6 * u(rng));
    const double dir = 2.0 * pi * u(rng);
    d.vx = s.speed * std::cos(dir);
    d.vy = s.speed * std::sin(dir);
    d.radius = n * (0.08 + 0.08 * u(rng));
    for (double& c : d.rgb) c = u(rng);
    sc.discs.push_back(d);
  }
  return sc;
}

// Noise-free rendering of the scene at (fractional) time t.
void render(const Scene& sc, const SynthSpec& s, double t, double* out) {
  const std::size_t n = s.size;
  double norm = 0.0;
  for (const Wave& w : sc.waves) norm += w.amp;
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double px = static_cast<double>(x) + sc.pan_x * t;
      const double py = static_cast<double>(y) + sc.pan_y * t;
      double tex = 0.0;
      for (const Wave& w : sc.waves) tex += w.amp * std::sin(2.0 * pi * (w.fx * px + w.fy * py) + w.phase);
      const double base = 0.5 + 0.25 * tex / norm;
      double rgb[3] = {base * sc.tint[0], base * sc.tint[1], base * sc.tint[2]};
      for (const Disc& d : sc.discs) {
        const double dx = static_cast<double>(x) - (d.x + d.vx * t);
        const double dy = static_cast<double>(y) - (d.y + d.vy * t);
        // Anti-aliased edge one pixel wide.
        const double cover = std::clamp(d.radius - std::sqrt(dx * dx + dy * dy) + 0.5, 0.0, 1.0);
        for (int c = 0; c < 3; ++c) rgb[c] = (1.0 - cover) * rgb[c] + cover * d.rgb[c];
      }
      double* px_out = out + 3 * (y * n + x);
      for (int c = 0; c < 3; ++c) px_out[c] = rgb[c];
    }
  }
}

// Blend weight of frame k for the generated class: held at 0 until the
// onset, then eased to 1 at the last frame.
double blend_weight(const SynthSpec& s, std::size_t k) {
  const double u = static_cast<double>(k) / static_cast<double>(s.frames - 1);
  const double a = std::clamp((u - s.onset) / (1.0 - s.onset), 0.0, 1.0);
  const double eased = a * a * (3.0 - 2.0 * a);
  return (1.0 - s.smoothness) * a + s.smoothness * eased;
}

}  // namespace

int label_of(SynthClass c) { return c == SynthClass::kNatural ? 0 : 1; }

void SynthSpec::validate() const {
  if (frames < 3) throw ArgumentError("SynthSpec: need at least 3 frames");
  if (size < 4) throw ArgumentError("SynthSpec: size must be >= 4");
  if (!(speed >= 0.0) || !(flicker >= 0.0) || !(texture_scale > 0.0)) {
    throw ArgumentError("SynthSpec: speed, flicker must be >= 0 and texture_scale > 0");
  }
  if (!(smoothness >= 0.0 && smoothness <= 1.0)) {
    throw ArgumentError("SynthSpec: smoothness must lie in [0, 1]");
  }
  if (!(onset >= 0.0 && onset < 1.0)) throw ArgumentError("SynthSpec: onset must lie in [0, 1)");
}

events::Clip gen_clip(const SynthSpec& spec) {
  spec.validate();
  const std::size_t t = spec.frames, n = spec.size, frame = n * n * 3;
  const Scene sc = make_scene(spec);
  events::Clip clip;
  clip.frames = Tensor(Shape{t, n, n, 3});
  clip.label = label_of(spec.cls);
  clip.source = spec.cls == SynthClass::kNatural ? "synth-natural" : "synth-generated";
  double* f = clip.frames.data();
  if (spec.cls == SynthClass::kNatural) {
    std::mt19937_64 rng(spec.seed ^ kNoiseSalt);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t k = 0; k < t; ++k) {
      double* fk = f + k * frame;
      render(sc, spec, static_cast<double>(k), fk);
      const double global = 0.5 * spec.flicker * u(rng);
      for (std::size_t i = 0; i < frame; ++i) fk[i] += global + spec.flicker * u(rng);
    }
  } else {
    std::vector<double> k0(frame), k1(frame);
    render(sc, spec, 0.0, k0.data());
    render(sc, spec, static_cast<double>(t - 1), k1.data());
    for (std::size_t k = 0; k < t; ++k) {
      const double a = blend_weight(spec, k);
      for (std::size_t i = 0; i < frame; ++i) f[k * frame + i] = (1.0 - a) * k0[i] + a * k1[i];
    }
  }
  for (double& v : clip.frames.values()) v = std::clamp(v, 0.0, 1.0);
  return clip;
}

events::EmbeddingSequence gen_embeddings(const SynthSpec& spec, std::size_t dim,
                                         std::size_t tokens) {
  spec.validate();
  const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(tokens))));
  if (side * side != tokens) throw ArgumentError("gen_embeddings: token count must be a square");
  if (dim < 3) throw ArgumentError("gen_embeddings: dim must be >= 3");
  const std::size_t t = spec.frames;
  std::mt19937_64 rng(spec.seed * 0x2545F4914F6CDD1DULL + 17);
  std::normal_distribution<double> g(0.0, 1.0);
  auto unit = [&](std::vector<double>& v) {
    for (double& x : v) x = g(rng);
    double s = 0.0;
    for (double x : v) s += x * x;
    s = std::sqrt(s);
    for (double& x : v) x /= s;
  };

  events::EmbeddingSequence emb;
  emb.patches = Tensor(Shape{t, tokens, dim});
  std::vector<std::vector<double>> anchor(tokens, std::vector<double>(dim));
  for (auto& a : anchor) unit(a);
  auto at = [&](std::size_t k, std::size_t n, std::size_t d) -> double& {
    return emb.patches[(k * tokens + n) * dim + d];
  };

  if (spec.cls == SynthClass::kNatural) {
    // Random walk; the heading is redrawn every frame, mostly shared.
    std::mt19937_64 walk(spec.seed ^ kNoiseSalt);
    std::normal_distribution<double> w(0.0, 1.0);
    const double step = 0.25 * spec.speed;
    std::vector<std::vector<double>> z = anchor;
    std::vector<double> shared(dim), own(dim);
    for (std::size_t k = 0; k < t; ++k) {
      if (k > 0) {
        for (double& x : shared) x = w(walk);
        for (std::size_t n = 0; n < tokens; ++n) {
          double norm = 0.0;
          for (std::size_t d = 0; d < dim; ++d) {
            own[d] = 0.8 * shared[d] + 0.6 * w(walk);
            norm += own[d] * own[d];
          }
          norm = std::sqrt(norm);
          for (std::size_t d = 0; d < dim; ++d) z[n][d] += step * own[d] / norm;
        }
      }
      for (std::size_t n = 0; n < tokens; ++n)
        for (std::size_t d = 0; d < dim; ++d) at(k, n, d) = z[n][d];
    }
  } else {
    // Great-circle interpolation at a common angle: the token mean stays in
    // the plane of the mean anchors.
    const double omega = 0.5 * spec.speed;
    std::vector<double> dir(dim);
    for (std::size_t n = 0; n < tokens; ++n) {
      unit(dir);
      double proj = 0.0;
      for (std::size_t d = 0; d < dim; ++d) proj += dir[d] * anchor[n][d];
      double norm = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        dir[d] -= proj * anchor[n][d];
        norm += dir[d] * dir[d];
      }
      norm = std::sqrt(norm);
      for (std::size_t k = 0; k < t; ++k) {
        const double a = blend_weight(spec, k);
        for (std::size_t d = 0; d < dim; ++d) {
          at(k, n, d) = std::cos(a * omega) * anchor[n][d] + std::sin(a * omega) * dir[d] / norm;
        }
      }
    }
  }
  emb.video = io::video_summary(emb.patches);
  return emb;
}

io::Manifest make_dataset(const SynthSpec& base, const DatasetOptions& opts,
                          const std::filesystem::path& out_dir) {
  if (opts.n_per_class == 0) throw ArgumentError("make_dataset: n_per_class must be >= 1");
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "clips", ec);
  std::filesystem::create_directories(out_dir / "emb", ec);
  if (ec) throw FormatError("make_dataset: cannot create " + out_dir.string() + ": " + ec.message());
  io::Manifest m;
  for (std::size_t i = 0; i < opts.n_per_class; ++i) {
    for (SynthClass cls : {SynthClass::kNatural, SynthClass::kGenerated}) {
      SynthSpec s = base;
      s.cls = cls;
      s.seed = opts.seed + i;
      char name[64];
      std::snprintf(name, sizeof name, "%s_%05zu",
                    cls == SynthClass::kNatural ? "natural" : "generated", i);
      io::ManifestEntry e;
      e.id = name;
      e.clip = std::string("clips/") + name + ".ct01";
      e.embedding = std::string("emb/") + name + ".ct01";
      e.label = label_of(cls);
      e.seed = s.seed;
      io::write_ct01(out_dir / e.clip, gen_clip(s).frames);
      io::write_ct01(out_dir / e.embedding, gen_embeddings(s, opts.dim, opts.tokens).patches);
      m.entries.push_back(std::move(e));
    }
  }
  io::write_manifest(out_dir, m);
  return m;
}

}  // namespace spikegate::synthgen

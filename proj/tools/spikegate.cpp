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


// spikegate: synthesize data, train, evaluate and inspect the spike gate.
//
// Exit codes: 0 ok, 1 usage, 2 data/format, 3 numeric failure. Failures
// also print one line on stderr:
//   spikegate: error code=<n> kind=<usage|format|numeric> message="..."

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "spikegate/energy.hpp"
#include "spikegate/error.hpp"
#include "spikegate/events.hpp"
#include "spikegate/gatenet.hpp"
#include "spikegate/io.hpp"
#include "spikegate/metrics.hpp"
#include "spikegate/synthgen.hpp"
#include "spikegate/train.hpp"

namespace fs = std::filesystem;
using namespace spikegate;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kFormat = 2, kNumeric = 3 };

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c == '\n' ? ' ' : c);
  }
  return out + "\"";
}

int fail(int code, const char* kind, const std::string& msg) {
  std::cerr << "spikegate: error code=" << code << " kind=" << kind << " message=" << quoted(msg)
            << "\n";
  return code;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Writes to `path`, or stdout when it is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
  } else {
    io::write_file(path, text);
  }
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
  std::string out;
  std::size_t clips = 2;
  std::size_t frames = 8;
  std::size_t size = 56;
  std::uint64_t seed = 0;
  std::size_t dim = 32;
  std::size_t tokens = 196;
  double speed = 1.5;
  double flicker = 0.08;
};

int run_synth(const SynthArgs& a) {
  synthgen::SynthSpec base;
  base.frames = a.frames;
  base.size = a.size;
  base.speed = a.speed;
  base.flicker = a.flicker;
  synthgen::DatasetOptions opts;
  opts.n_per_class = a.clips;
  opts.dim = a.dim;
  opts.tokens = a.tokens;
  opts.seed = a.seed;
  const io::Manifest m = synthgen::make_dataset(base, opts, a.out);
  std::cout << "wrote " << m.entries.size() << " clips to " << a.out << "\n";
  return kOk;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string data, val, config, out, csv;
  std::size_t epochs = 0;  // 0: from the config
  std::int64_t seed = -1;  // <0: from the config
};

int run_train(const TrainArgs& a) {
  io::RunConfig rc = a.config.empty() ? io::RunConfig{} : io::read_run_config(a.config);
  if (a.epochs > 0) rc.train.epochs = a.epochs;
  if (a.seed >= 0) rc.train.seed = static_cast<std::uint64_t>(a.seed);
  rc.train.validate();

  const std::vector<train::Sample> data = io::load_samples(a.data, rc.model);
  std::vector<train::Sample> val;
  if (!a.val.empty()) val = io::load_samples(a.val, rc.model);

  const std::string csv_path = a.csv.empty() ? a.out + ".csv" : a.csv;
  const std::string config_path = a.out + ".config.json";
  io::write_file(config_path, io::run_config_json(rc));

  gatenet::GateNet net(rc.model, rc.train.seed);
  std::string csv = train::epoch_csv_header() + "\n";
  io::write_file(csv_path, csv);

  train::FitOptions fo;
  if (!val.empty()) fo.val = &val;
  fo.on_epoch = [&](const train::EpochStats& e) {
    csv += train::epoch_csv_row(e) + "\n";
    io::write_file(csv_path, csv);
    io::write_checkpoint(a.out, net, e.epoch);
    std::fprintf(stderr, "epoch %zu loss %.4f rate %.4f acc %.3f val_auc %s%s\n", e.epoch,
                 e.loss.total, e.spike_rate, e.train_acc,
                 std::isnan(e.val_auc) ? "-" : fmt(e.val_auc).c_str(),
                 e.silent_sdtb ? " [silent spike branch]" : "");
  };
  const train::FitResult r = train::fit(net, data, rc.train, fo);
  std::cout << "trained " << r.history.size() << " epochs; checkpoint " << a.out << "; log "
            << csv_path << "\n";
  return kOk;
}

// ---- eval ------------------------------------------------------------------

gatenet::GateNet load_net(const std::string& ckpt) {
  const io::LoadedCheckpoint ck = io::read_checkpoint(ckpt);
  gatenet::GateNet net(ck.config, 0);
  io::load_into(net, ck);
  return net;
}

struct EvalArgs {
  std::string data, ckpt, out;
};

int run_eval(const EvalArgs& a) {
  gatenet::GateNet net = load_net(a.ckpt);
  const std::vector<train::Sample> data = io::load_samples(a.data, net.config());
  const train::Scores s = train::predict(net, data);

  std::string csv = "id,label,y_hat,y_snn,pred\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    csv += data[i].id + "," + std::to_string(s.labels[i]) + "," + fmt(s.y_hat[i]) + "," +
           fmt(s.y_snn[i]) + "," + (s.y_hat[i] > 0.5 ? "1" : "0") + "\n";
  }
  const std::string out = a.out.empty() ? a.ckpt + ".scores.csv" : a.out;
  io::write_file(out, csv);

  bool both = false;
  for (int l : s.labels) both |= l != s.labels.front();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) correct += (s.y_hat[i] > 0.5) == (s.labels[i] == 1);
  std::cout << "{\"clips\": " << data.size() << ", \"correct\": " << correct
            << ", \"accuracy\": " << fmt(s.accuracy())
            << ", \"auc\": " << (both ? fmt(s.auc()) : "null")
            << ", \"spike_rate\": " << fmt(s.spike_rate) << ", \"scores\": " << quoted(out)
            << "}\n";
  return kOk;
}

// ---- analyze ---------------------------------------------------------------

const std::vector<std::string> kAllMetrics{"hoyer", "fc", "curvature", "volume", "anomaly"};

struct AnalyzeArgs {
  std::string data, out;
  std::vector<std::string> metrics = kAllMetrics;
  std::size_t grid = 14;
  double trace_tau = 4.0;
};

int run_analyze(const AnalyzeArgs& a) {
  for (const std::string& m : a.metrics) {
    if (std::find(kAllMetrics.begin(), kAllMetrics.end(), m) == kAllMetrics.end()) {
      throw CLI::ValidationError("--metrics", "unknown metric '" + m + "'");
    }
  }
  const io::Manifest manifest = io::read_manifest(a.data);
  std::vector<std::vector<double>> cols(a.metrics.size());
  std::string csv = "id,label";
  for (const std::string& m : a.metrics) csv += "," + m;
  csv += "\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (const io::ManifestEntry& e : manifest.entries) {
    const events::Clip clip = io::load_clip(a.data, e);
    const auto emb = io::load_embeddings(a.data, e);
    const Tensor hf = events::adaptive_avg_pool(
        events::compute_residual(events::ResidualKind::kHF, clip), a.grid);
    const std::vector<double> signal = metrics::frame_means(hf);
    Tensor traj;
    if (emb) traj = metrics::token_mean_trajectory(emb->patches);

    csv += e.id + "," + std::to_string(e.label);
    for (std::size_t k = 0; k < a.metrics.size(); ++k) {
      const std::string& m = a.metrics[k];
      double v = nan;
      if (m == "hoyer") {
        v = metrics::hoyer(hf.values());
      } else if (m == "fc") {
        v = metrics::spectral_centroid(signal);
      } else if (m == "curvature") {
        if (emb) v = metrics::angular_curvature(traj).median;
      } else if (m == "volume") {
        if (emb) v = metrics::convex_hull_volume(metrics::pca3_project(traj));
      } else {
        const Tensor padded = events::left_pad_frames(hf, clip.num_frames());
        const std::vector<double> trace =
            metrics::raw_anomaly_trace(metrics::frame_means(padded), a.trace_tau);
        v = metrics::summarize(trace).mean;
      }
      cols[k].push_back(v);
      csv += "," + fmt(v);
    }
    csv += "\n";
  }
  for (const char* row : {"mean", "std"}) {
    csv += std::string(row) + ",";
    for (const auto& col : cols) {
      std::vector<double> finite;
      for (double v : col)
        if (std::isfinite(v)) finite.push_back(v);
      double v = nan;
      if (!finite.empty()) {
        const metrics::SummaryStats st = metrics::summarize(finite);
        v = row[0] == 'm' ? st.mean : st.std;
      }
      csv += "," + fmt(v);
    }
    csv += "\n";
  }
  emit(a.out, csv);
  return kOk;
}

// ---- gatemap ---------------------------------------------------------------

struct GatemapArgs {
  std::string clip, emb, ckpt, out;
  double pct = 70.0;
};

std::string pgm(const Tensor& gates, std::size_t frame, std::size_t g) {
  std::string img = "P5\n" + std::to_string(g) + " " + std::to_string(g) + "\n255\n";
  for (std::size_t i = 0; i < g * g; ++i) {
    const double v = std::clamp(gates[frame * g * g + i], 0.0, 1.0);
    img.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * v))));
  }
  return img;
}

int run_gatemap(const GatemapArgs& a) {
  gatenet::GateNet net = load_net(a.ckpt);
  const gatenet::GateNetConfig& c = net.config();
  events::Clip clip;
  clip.frames = io::read_ct01(a.clip);
  clip.validate();
  std::optional<events::EmbeddingSequence> emb;
  if (!a.emb.empty()) {
    emb.emplace();
    emb->patches = io::read_ct01(a.emb);
    emb->validate();
  }
  if (clip.num_frames() != c.frames) {
    throw FormatError(a.clip + ": " + std::to_string(clip.num_frames()) +
                      " frames, model expects " + std::to_string(c.frames));
  }
  const events::PooledEvents pooled =
      events::pool_events(clip, emb ? &*emb : nullptr, c.events);
  if (pooled.num_channels() != c.channels) {
    throw FormatError("model expects " + std::to_string(c.channels) +
                      " event channels; pass --emb for the trajectory channels");
  }

  Tape tape;
  tape.set_grad_enabled(false);
  Tensor gates = net.encode(tape, pooled).gates.value();
  // Frame 0 has no predecessor and carries no events.
  const std::size_t g = c.grid;
  for (std::size_t i = 0; i < g * g; ++i) gates[i] = 0.0;

  fs::create_directories(a.out);
  std::string csv = "frame,bf,if\n";
  std::vector<double> bf, inf;
  for (std::size_t t = 0; t < c.frames; ++t) {
    char name[32];
    std::snprintf(name, sizeof name, "gate_%02zu.pgm", t);
    io::write_file(fs::path(a.out) / name, pgm(gates, t, g));
    std::vector<double> frame(gates.data() + t * g * g, gates.data() + (t + 1) * g * g);
    const double cut = metrics::percentile(frame, a.pct);
    std::vector<bool> active(g * g);
    for (std::size_t i = 0; i < g * g; ++i) active[i] = frame[i] > cut;
    const metrics::FireRates fr = metrics::fire_from_active(active, g);
    bf.push_back(fr.boundary);
    inf.push_back(fr.interior);
    csv += std::to_string(t) + "," + fmt(fr.boundary) + "," + fmt(fr.interior) + "\n";
  }
  csv += "mean," + fmt(metrics::summarize(bf).mean) + "," + fmt(metrics::summarize(inf).mean) + "\n";
  io::write_file(fs::path(a.out) / "fire.csv", csv);
  std::cout << "wrote " << c.frames << " gate maps to " << a.out << "\n";
  return kOk;
}

// ---- energy ----------------------------------------------------------------

struct EnergyArgs {
  std::string ckpt, data, out, scale = "ckpt";
  double rate = -1.0;
};

int run_energy(const EnergyArgs& a) {
  energy::FiringRate rate;
  gatenet::GateNetConfig config = gatenet::GateNetConfig::paper();
  if (!a.ckpt.empty()) {
    gatenet::GateNet net = load_net(a.ckpt);
    config = net.config();
    if (!a.data.empty()) {
      rate = energy::measure_firing_rate(net, io::load_samples(a.data, config));
    }
  } else if (a.scale == "ckpt") {
    throw CLI::ValidationError("--ckpt", "required unless --scale paper");
  }
  if (a.rate >= 0.0) rate.spike_mean = rate.gate_active = a.rate;
  if (a.ckpt.empty() || a.data.empty()) {
    if (a.rate < 0.0) throw CLI::ValidationError("--rate", "give --data or --rate");
  }
  if (a.scale == "paper") config = gatenet::GateNetConfig::paper();
  emit(a.out, energy::report_json(energy::energy_report(config, rate)));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spikegate: spike-driven temporal gate for generated-video detection"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "write a synthetic natural/generated dataset");
  s->add_option("--out", synth.out, "output directory")->required();
  s->add_option("--clips", synth.clips, "clips per class")->check(CLI::PositiveNumber);
  s->add_option("--frames", synth.frames, "frames per clip")->check(CLI::Range(3, 1 << 16));
  s->add_option("--size", synth.size, "frame height and width")->check(CLI::Range(4, 1 << 14));
  s->add_option("--seed", synth.seed, "first content seed");
  s->add_option("--dim", synth.dim, "embedding width");
  s->add_option("--tokens", synth.tokens, "patch tokens per frame (a square)");
  s->add_option("--speed", synth.speed, "motion speed, pixels per frame");
  s->add_option("--flicker", synth.flicker, "natural-class flicker amplitude");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train a gate network");
  t->add_option("--data", tr.data, "training dataset directory")->required();
  t->add_option("--val", tr.val, "validation dataset directory");
  t->add_option("--config", tr.config, "run config JSON (defaults if omitted)");
  t->add_option("--epochs", tr.epochs, "override the configured epoch count");
  t->add_option("--seed", tr.seed, "override the configured seed");
  t->add_option("--out", tr.out, "checkpoint path")->required();
  t->add_option("--csv", tr.csv, "epoch log (default: <out>.csv)");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "score a dataset with a checkpoint");
  e->add_option("--data", ev.data, "dataset directory")->required();
  e->add_option("--ckpt", ev.ckpt, "checkpoint")->required();
  e->add_option("--out", ev.out, "scores CSV (default: <ckpt>.scores.csv)");

  AnalyzeArgs an;
  auto* z = app.add_subcommand("analyze", "temporal signature metrics per clip");
  z->add_option("--data", an.data, "dataset directory")->required();
  z->add_option("--metrics", an.metrics, "subset of hoyer,fc,curvature,volume,anomaly")
      ->delimiter(',');
  z->add_option("--grid", an.grid, "pooling grid for residual maps");
  z->add_option("--out", an.out, "CSV path (default: stdout)");

  GatemapArgs gm;
  auto* g = app.add_subcommand("gatemap", "export per-frame gate maps as PGM images");
  g->add_option("--clip", gm.clip, "CT01 clip [T,H,W,3]")->required();
  g->add_option("--emb", gm.emb, "CT01 patch embeddings [T,N,D]");
  g->add_option("--ckpt", gm.ckpt, "checkpoint")->required();
  g->add_option("--out", gm.out, "output directory")->required();
  g->add_option("--pct", gm.pct, "activity percentile for BF/IF")->check(CLI::Range(0.0, 100.0));

  EnergyArgs en;
  auto* n = app.add_subcommand("energy", "operation counts and energy per clip");
  n->add_option("--ckpt", en.ckpt, "checkpoint");
  n->add_option("--data", en.data, "dataset for the measured firing rate");
  n->add_option("--rate", en.rate, "use this firing rate instead of measuring")
      ->check(CLI::Range(0.0, 1.0));
  n->add_option("--scale", en.scale, "count ops for the checkpoint or the paper-scale model")
      ->check(CLI::IsMember({"ckpt", "paper"}));
  n->add_option("--out", en.out, "JSON path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    return fail(kUsage, "usage", ex.what());
  }

  try {
    if (*s) return run_synth(synth);
    if (*t) return run_train(tr);
    if (*e) return run_eval(ev);
    if (*z) return run_analyze(an);
    if (*g) return run_gatemap(gm);
    if (*n) return run_energy(en);
  } catch (const CLI::Error& ex) {
    return fail(kUsage, "usage", ex.what());
  } catch (const NumericError& ex) {
    return fail(kNumeric, "numeric", ex.what());
  } catch (const FormatError& ex) {
    return fail(kFormat, "format", ex.what());
  } catch (const ShapeError& ex) {
    return fail(kFormat, "format", ex.what());
  } catch (const ArgumentError& ex) {
    return fail(kUsage, "usage", ex.what());
  } catch (const std::filesystem::filesystem_error& ex) {
    return fail(kFormat, "format", ex.what());
  }
  return kUsage;
}

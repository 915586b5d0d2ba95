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


#include "spikegate/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "spikegate/error.hpp"

namespace spikegate::io {

using nlohmann::json;

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  Reader(const std::string& bytes, const char* what) : b_(bytes), what_(what) {}
  const char* take(std::size_t n) {
    if (n > b_.size() - pos_) throw FormatError(std::string(what_) + ": truncated data");
    const char* p = b_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint64_t uint(int bytes) {
    const auto* p = reinterpret_cast<const unsigned char*>(take(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
  }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  const std::string& b_;
  const char* what_;
  std::size_t pos_ = 0;
};

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw FormatError(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) throw FormatError(where + ": unknown key '" + k + "'");
  }
}

template <typename T>
void get_opt(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(where + "." + key + ": " + e.what());
  }
}

json model_json(const gatenet::GateNetConfig& c) {
  return json{{"channels", c.channels},
              {"grid", c.grid},
              {"frames", c.frames},
              {"dim", c.dim},
              {"depth", c.depth},
              {"heads", c.heads},
              {"mlp_ratio", c.mlp_ratio},
              {"stem_width", c.stem_width},
              {"sepconv_expansion", c.sepconv_expansion},
              {"gate_bias", c.gate_bias},
              {"gate_tau", c.gate_tau},
              {"acc_tau", c.acc_tau},
              {"acc_lambda", c.acc_lambda},
              {"attn_scale", c.attn_scale},
              {"proj_width", c.proj_width},
              {"head_hidden", c.head_hidden},
              {"video_dim", c.video_dim},
              {"learnable_lif", c.learnable_lif}};
}

void model_from(const json& j, gatenet::GateNetConfig& c) {
  const std::string w = "model";
  check_keys(j, {"channels", "grid", "frames", "dim", "depth", "heads", "mlp_ratio", "stem_width",
                 "sepconv_expansion", "gate_bias", "gate_tau", "acc_tau", "acc_lambda",
                 "attn_scale", "proj_width", "head_hidden", "video_dim", "learnable_lif"},
             w);
  get_opt(j, "channels", c.channels, w);
  get_opt(j, "grid", c.grid, w);
  get_opt(j, "frames", c.frames, w);
  get_opt(j, "dim", c.dim, w);
  get_opt(j, "depth", c.depth, w);
  get_opt(j, "heads", c.heads, w);
  get_opt(j, "mlp_ratio", c.mlp_ratio, w);
  get_opt(j, "stem_width", c.stem_width, w);
  get_opt(j, "sepconv_expansion", c.sepconv_expansion, w);
  get_opt(j, "gate_bias", c.gate_bias, w);
  get_opt(j, "gate_tau", c.gate_tau, w);
  get_opt(j, "acc_tau", c.acc_tau, w);
  get_opt(j, "acc_lambda", c.acc_lambda, w);
  get_opt(j, "attn_scale", c.attn_scale, w);
  get_opt(j, "proj_width", c.proj_width, w);
  get_opt(j, "head_hidden", c.head_hidden, w);
  get_opt(j, "video_dim", c.video_dim, w);
  get_opt(j, "learnable_lif", c.learnable_lif, w);
}

json lif_json(const snn::LifOptions& o) {
  const snn::LifBounds& b = o.bounds;
  return json{{"reset", o.reset == snn::ResetMode::kSoft ? "soft" : "hard"},
              {"firing", o.firing == snn::FiringMode::kMultispike ? "multispike" : "heaviside"},
              {"tau_base", b.tau_base},
              {"vth_base", b.vth_base},
              {"tau_min", b.tau_min},
              {"tau_max", b.tau_max},
              {"vth_min", b.vth_min},
              {"vth_max", b.vth_max}};
}

void lif_from(const json& j, snn::LifOptions& o) {
  const std::string w = "lif";
  check_keys(j, {"reset", "firing", "tau_base", "vth_base", "tau_min", "tau_max", "vth_min",
                 "vth_max"},
             w);
  std::string reset = o.reset == snn::ResetMode::kSoft ? "soft" : "hard";
  std::string firing = o.firing == snn::FiringMode::kMultispike ? "multispike" : "heaviside";
  get_opt(j, "reset", reset, w);
  get_opt(j, "firing", firing, w);
  if (reset != "soft" && reset != "hard") throw FormatError("lif.reset: soft|hard");
  if (firing != "multispike" && firing != "heaviside") {
    throw FormatError("lif.firing: multispike|heaviside");
  }
  o.reset = reset == "soft" ? snn::ResetMode::kSoft : snn::ResetMode::kHard;
  o.firing = firing == "multispike" ? snn::FiringMode::kMultispike : snn::FiringMode::kHeaviside;
  get_opt(j, "tau_base", o.bounds.tau_base, w);
  get_opt(j, "vth_base", o.bounds.vth_base, w);
  get_opt(j, "tau_min", o.bounds.tau_min, w);
  get_opt(j, "tau_max", o.bounds.tau_max, w);
  get_opt(j, "vth_min", o.bounds.vth_min, w);
  get_opt(j, "vth_max", o.bounds.vth_max, w);
}

json events_json(const events::EventConfig& e) {
  return json{{"c_th", e.c_th}, {"beta", e.beta}, {"grid", e.grid},
              {"tau_post", e.tau_post}, {"s_post", e.s_post}, {"post_sigmoid", e.post_sigmoid}};
}

void events_from(const json& j, events::EventConfig& e) {
  const std::string w = "events";
  check_keys(j, {"c_th", "beta", "grid", "tau_post", "s_post", "post_sigmoid"}, w);
  get_opt(j, "c_th", e.c_th, w);
  get_opt(j, "beta", e.beta, w);
  get_opt(j, "grid", e.grid, w);
  get_opt(j, "tau_post", e.tau_post, w);
  get_opt(j, "s_post", e.s_post, w);
  get_opt(j, "post_sigmoid", e.post_sigmoid, w);
}

json train_json(const train::TrainConfig& t) {
  return json{{"lambda_aux", t.lambda_aux},
              {"lambda_supcon", t.lambda_supcon},
              {"lambda_rate", t.lambda_rate},
              {"rate_target", t.rate_target},
              {"supcon_tau", t.supcon_tau},
              {"label_smoothing", t.label_smoothing},
              {"clip_norm", t.clip_norm},
              {"lr", t.lr},
              {"weight_decay", t.weight_decay},
              {"adam_beta1", t.adam_beta1},
              {"adam_beta2", t.adam_beta2},
              {"adam_eps", t.adam_eps},
              {"lambda_anom", t.lambda_anom},
              {"anom_margin", t.anom_margin},
              {"cosine", t.cosine},
              {"epochs", t.epochs},
              {"batch_size", t.batch_size},
              {"seed", t.seed}};
}

void train_from(const json& j, train::TrainConfig& t) {
  const std::string w = "train";
  check_keys(j, {"lambda_aux", "lambda_supcon", "lambda_rate", "rate_target", "supcon_tau",
                 "label_smoothing", "clip_norm", "lr", "weight_decay", "adam_beta1", "adam_beta2",
                 "adam_eps", "lambda_anom", "anom_margin", "cosine", "epochs", "batch_size", "seed"},
             w);
  get_opt(j, "lambda_aux", t.lambda_aux, w);
  get_opt(j, "lambda_supcon", t.lambda_supcon, w);
  get_opt(j, "lambda_rate", t.lambda_rate, w);
  get_opt(j, "rate_target", t.rate_target, w);
  get_opt(j, "supcon_tau", t.supcon_tau, w);
  get_opt(j, "label_smoothing", t.label_smoothing, w);
  get_opt(j, "clip_norm", t.clip_norm, w);
  get_opt(j, "lr", t.lr, w);
  get_opt(j, "weight_decay", t.weight_decay, w);
  get_opt(j, "adam_beta1", t.adam_beta1, w);
  get_opt(j, "adam_beta2", t.adam_beta2, w);
  get_opt(j, "adam_eps", t.adam_eps, w);
  get_opt(j, "lambda_anom", t.lambda_anom, w);
  get_opt(j, "anom_margin", t.anom_margin, w);
  get_opt(j, "cosine", t.cosine, w);
  get_opt(j, "epochs", t.epochs, w);
  get_opt(j, "batch_size", t.batch_size, w);
  get_opt(j, "seed", t.seed, w);
}

json full_model_json(const gatenet::GateNetConfig& c) {
  return json{{"model", model_json(c)}, {"lif", lif_json(c.lif)}, {"events", events_json(c.events)}};
}

gatenet::GateNetConfig full_model_from(const json& j) {
  gatenet::GateNetConfig c = gatenet::GateNetConfig::desk();
  if (j.contains("model")) model_from(j.at("model"), c);
  if (j.contains("lif")) lif_from(j.at("lif"), c.lif);
  if (j.contains("events")) events_from(j.at("events"), c.events);
  return c;
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string encode_ct01(const Tensor& t) {
  std::string out = "CT01";
  out.push_back(static_cast<char>(kDtypeF32));
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
  out.reserve(out.size() + 4 * t.size());
  for (double v : t.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

Tensor decode_ct01(const std::string& bytes) {
  Reader r(bytes, "CT01");
  if (std::memcmp(r.take(4), "CT01", 4) != 0) throw FormatError("CT01: bad magic");
  const auto dtype = r.uint(1);
  if (dtype != kDtypeF32) throw FormatError("CT01: unsupported dtype " + std::to_string(dtype));
  const auto rank = r.uint(4);
  if (rank > 16) throw FormatError("CT01: implausible rank " + std::to_string(rank));
  Shape shape;
  std::size_t n = 1;
  for (std::uint64_t i = 0; i < rank; ++i) {
    shape.push_back(static_cast<std::size_t>(r.uint(4)));
    n *= shape.back();
  }
  if (r.remaining() != 4 * n) {
    throw FormatError("CT01: payload holds " + std::to_string(r.remaining()) + " bytes, expected " +
                      std::to_string(4 * n));
  }
  Tensor t(shape);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(r.uint(4))));
  }
  return t;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed: " + path.string());
}

void write_ct01(const std::filesystem::path& path, const Tensor& t) {
  write_file(path, encode_ct01(t));
}

Tensor read_ct01(const std::filesystem::path& path) {
  try {
    return decode_ct01(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string manifest_json(const Manifest& m) {
  json entries = json::array();
  for (const ManifestEntry& e : m.entries) {
    json j{{"id", e.id}, {"clip", e.clip}, {"label", e.label}, {"seed", e.seed}};
    if (!e.embedding.empty()) j["embedding"] = e.embedding;
    entries.push_back(j);
  }
  return json{{"version", 1}, {"entries", entries}}.dump(2) + "\n";
}

Manifest parse_manifest(const std::string& text) {
  const json j = parse_json(text, "manifest");
  check_keys(j, {"version", "entries"}, "manifest");
  if (!j.contains("entries") || !j.at("entries").is_array()) {
    throw FormatError("manifest: missing entries array");
  }
  Manifest m;
  for (const json& e : j.at("entries")) {
    check_keys(e, {"id", "clip", "embedding", "label", "seed"}, "manifest entry");
    ManifestEntry me;
    if (!e.contains("clip") || !e.contains("label")) {
      throw FormatError("manifest entry: clip and label are required");
    }
    get_opt(e, "id", me.id, "manifest entry");
    get_opt(e, "clip", me.clip, "manifest entry");
    get_opt(e, "embedding", me.embedding, "manifest entry");
    get_opt(e, "label", me.label, "manifest entry");
    get_opt(e, "seed", me.seed, "manifest entry");
    if (me.label != 0 && me.label != 1) throw FormatError("manifest entry: label must be 0 or 1");
    if (me.id.empty()) me.id = me.clip;
    m.entries.push_back(std::move(me));
  }
  return m;
}

void write_manifest(const std::filesystem::path& dir, const Manifest& m) {
  write_file(dir / kManifestName, manifest_json(m));
}

Manifest read_manifest(const std::filesystem::path& dir) {
  return parse_manifest(read_file(dir / kManifestName));
}

std::string run_config_json(const RunConfig& c) {
  json j = full_model_json(c.model);
  j["train"] = train_json(c.train);
  return j.dump(2) + "\n";
}

RunConfig parse_run_config(const std::string& text) {
  const json j = parse_json(text, "config");
  check_keys(j, {"model", "lif", "events", "train"}, "config");
  RunConfig c;
  c.model = full_model_from(j);
  if (j.contains("train")) train_from(j.at("train"), c.train);
  try {
    c.model.validate();
    c.train.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig read_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file(path));
}

std::string encode_checkpoint(const gatenet::GateNet& net, std::size_t epoch) {
  json table = json::array();
  for (const auto& p : net.params()) {
    table.push_back(json{{"name", p->name()}, {"shape", p->value.shape()},
                         {"learnable", p->learnable()}});
  }
  const std::string header =
      json{{"config", full_model_json(net.config())}, {"epoch", epoch}, {"params", table}}.dump();
  std::string out = "SGCK";
  put_u32(out, 1);
  put_u64(out, header.size());
  out += header;
  for (const auto& p : net.params()) {
    for (double v : p->value.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

void write_checkpoint(const std::filesystem::path& path, const gatenet::GateNet& net,
                      std::size_t epoch) {
  write_file(path, encode_checkpoint(net, epoch));
}

LoadedCheckpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes, "checkpoint");
  if (std::memcmp(r.take(4), "SGCK", 4) != 0) throw FormatError("checkpoint: bad magic");
  const auto version = r.uint(4);
  if (version != 1) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  const auto len = r.uint(8);
  if (len > r.remaining()) throw FormatError("checkpoint: truncated header");
  const char* h = r.take(len);
  const json header = parse_json(std::string(h, len), "checkpoint header");
  LoadedCheckpoint ck;
  try {
    ck.config = full_model_from(header.at("config"));
    ck.epoch = header.at("epoch").get<std::size_t>();
    for (const json& p : header.at("params")) {
      ck.names.push_back(p.at("name").get<std::string>());
      Tensor t(p.at("shape").get<Shape>());
      for (double& v : t.values()) v = std::bit_cast<double>(r.uint(8));
      ck.values.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes");
  return ck;
}

LoadedCheckpoint read_checkpoint(const std::filesystem::path& path) {
  try {
    return decode_checkpoint(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void load_into(gatenet::GateNet& net, const LoadedCheckpoint& ck) {
  if (ck.names.size() != net.params().size()) {
    throw FormatError("checkpoint: parameter count differs from the model");
  }
  for (std::size_t i = 0; i < ck.names.size(); ++i) {
    Parameter* p = net.params().find(ck.names[i]);
    if (p == nullptr) throw FormatError("checkpoint: unknown parameter " + ck.names[i]);
    if (p->value.shape() != ck.values[i].shape()) {
      throw FormatError("checkpoint: shape mismatch for " + ck.names[i]);
    }
    p->value = ck.values[i];
  }
}

Tensor video_summary(const Tensor& patches) {
  if (patches.rank() != 3) throw ShapeError("video_summary: patches must be [T, N, D]");
  const std::size_t d = patches.dim(2), rows = patches.dim(0) * patches.dim(1);
  Tensor v(Shape{d});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t k = 0; k < d; ++k) v[k] += patches[r * d + k];
  for (double& x : v.values()) x /= static_cast<double>(rows);
  return v;
}

events::Clip load_clip(const std::filesystem::path& dir, const ManifestEntry& e) {
  events::Clip clip;
  clip.frames = read_ct01(dir / e.clip);
  clip.label = e.label;
  clip.source = e.id;
  clip.validate();
  return clip;
}

std::optional<events::EmbeddingSequence> load_embeddings(const std::filesystem::path& dir,
                                                         const ManifestEntry& e) {
  if (e.embedding.empty()) return std::nullopt;
  events::EmbeddingSequence emb;
  emb.patches = read_ct01(dir / e.embedding);
  emb.validate();
  emb.video = video_summary(emb.patches);
  return emb;
}

std::vector<train::Sample> load_samples(const std::filesystem::path& dir,
                                        const gatenet::GateNetConfig& config) {
  const Manifest m = read_manifest(dir);
  std::vector<train::Sample> out;
  for (const ManifestEntry& e : m.entries) {
    events::Clip clip = load_clip(dir, e);
    auto emb = load_embeddings(dir, e);
    if (clip.num_frames() != config.frames) {
      throw FormatError(e.clip + ": " + std::to_string(clip.num_frames()) +
                        " frames, model expects " + std::to_string(config.frames));
    }
    train::Sample s;
    s.id = e.id;
    s.label = e.label;
    s.pooled = events::pool_events(clip, emb ? &*emb : nullptr, config.events);
    if (s.pooled.maps.dim(0) != config.channels) {
      throw FormatError(e.id + ": " + std::to_string(s.pooled.maps.dim(0)) +
                        " event channels, model expects " + std::to_string(config.channels));
    }
    if (emb) s.video = emb->video;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace spikegate::io

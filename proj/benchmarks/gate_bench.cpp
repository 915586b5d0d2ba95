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


#include <benchmark/benchmark.h>

#include <random>

#include "spikegate/gatenet.hpp"
#include "spikegate/ops.hpp"
#include "spikegate/snn.hpp"
#include "spikegate/synthgen.hpp"
#include "spikegate/train.hpp"

namespace {

using namespace spikegate;

Tensor noise(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 3.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = u(rng);
  return t;
}

void BM_MultispikeForward(benchmark::State& state) {
  const Tensor x = noise(Shape{static_cast<std::size_t>(state.range(0))}, 1);
  for (auto _ : state) {
    Tape tape;
    tape.set_grad_enabled(false);
    benchmark::DoNotOptimize(snn::multispike(tape.constant(x), 1.0).value().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MultispikeForward)->Arg(1 << 12)->Arg(1 << 16);

void BM_MultispikeBackward(benchmark::State& state) {
  Parameter v("v", noise(Shape{static_cast<std::size_t>(state.range(0))}, 2));
  for (auto _ : state) {
    Tape tape;
    tape.backward(sum_all(snn::multispike(tape.param(v), 1.0)));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MultispikeBackward)->Arg(1 << 12)->Arg(1 << 16);

void BM_LifSequence(benchmark::State& state) {
  const Tensor x = noise(Shape{8, 14, 14}, 3, 0.0, 1.0);
  for (auto _ : state) {
    Tape tape;
    tape.set_grad_enabled(false);
    benchmark::DoNotOptimize(snn::lif_sequence(tape.constant(x), 2.0, 1.0).spikes.value().data());
  }
}
BENCHMARK(BM_LifSequence);

void BM_LinearAttention(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0)), d = 64;
  const Tensor q = noise(Shape{n, d}, 4, 0, 4), k = noise(Shape{n, d}, 5, 0, 4),
               v = noise(Shape{n, d}, 6, 0, 4);
  for (auto _ : state) {
    Tape tape;
    tape.set_grad_enabled(false);
    Var out = gatenet::linear_attention(tape.constant(q), tape.constant(k), tape.constant(v), 4,
                                        0.25);
    benchmark::DoNotOptimize(out.value().data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_LinearAttention)->RangeMultiplier(2)->Range(392, 3136)->Complexity(benchmark::oN);

struct Fixture {
  gatenet::GateNetConfig config = gatenet::GateNetConfig::desk();
  events::Clip clip;
  events::EmbeddingSequence emb;
  train::Sample sample;

  Fixture() {
    synthgen::SynthSpec s;
    s.seed = 9;
    clip = synthgen::gen_clip(s);
    emb = synthgen::gen_embeddings(s);
    sample.pooled = events::pool_events(clip, &emb, config.events);
    sample.id = "bench";
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_PoolEvents(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(events::pool_events(f.clip, &f.emb, f.config.events).maps.data());
  }
}
BENCHMARK(BM_PoolEvents)->Unit(benchmark::kMillisecond);

void BM_EncodeForward(benchmark::State& state) {
  const Fixture& f = fixture();
  gatenet::GateNet net(f.config, 1);
  for (auto _ : state) {
    Tape tape;
    tape.set_grad_enabled(false);
    benchmark::DoNotOptimize(net.encode(tape, f.sample.pooled).gates.value().data());
  }
}
BENCHMARK(BM_EncodeForward)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const Fixture& f = fixture();
  gatenet::GateNet net(f.config, 1);
  train::Trainer trainer(net, train::TrainConfig{});
  train::Sample other = f.sample;
  other.label = 1;
  const std::vector<const train::Sample*> batch{&f.sample, &other};
  for (auto _ : state) benchmark::DoNotOptimize(trainer.step(batch, 0.0).loss.total);
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

// Copyright 2026 The otafl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Microbenchmarks for the hot paths of the simulator: the privacy
// accountant, update clipping, gradient evaluation, the local solver,
// over-the-air aggregation, and a full trainer round.  Build with
// -DOTAFL_BUILD_BENCHMARKS=ON.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "otafl/channel.hpp"
#include "otafl/data.hpp"
#include "otafl/fl_protocol.hpp"
#include "otafl/model.hpp"
#include "otafl/power_control.hpp"
#include "otafl/privacy.hpp"
#include "otafl/rng.hpp"

namespace {

using namespace otafl;

// One mid-size non-IID federation reused by the data-dependent benchmarks.
std::vector<ClientRecord> bench_clients(std::size_t num_clients,
                                        std::size_t n_per_client) {
  SyntheticSpec spec;
  spec.num_clients = num_clients;
  spec.n_min = spec.n_max = n_per_client;
  spec.feat_dim = 32;
  spec.classes = 10;
  spec.mode = PartitionMode::kLabelShard;
  spec.shards_per_client = 5;
  auto clients = make_client_records(gen_synthetic(spec, 11));
  for (auto& c : clients) c.power_cap = 1e6;
  return clients;
}

ModelParams bench_model(std::size_t hidden) {
  const std::vector<LayerShape> shapes = {{32, hidden}, {hidden, 10}};
  return init_model(shapes, true, 11);
}

void BM_ComputeA(benchmark::State& state) {
  const double eps = state.range(0) / 100.0;
  for (auto _ : state) benchmark::DoNotOptimize(compute_a(eps, 1e-5));
}
BENCHMARK(BM_ComputeA)->Arg(10)->Arg(652);

void BM_AccountantHorizon(benchmark::State& state) {
  const int rounds = static_cast<int>(state.range(0));
  const std::vector<double> s(10, 1.0);
  for (auto _ : state) {
    PrivacyLedger ledger(1e-5, 4800, s.size());
    for (int m = 0; m < rounds; ++m) ledger.record_round({1e-3}, s);
    benchmark::DoNotOptimize(ledger.epsilon_upper_bound());
  }
  state.SetItemsProcessed(state.iterations() * rounds);
}
BENCHMARK(BM_AccountantHorizon)->Arg(64)->Arg(1024);

void BM_ClipUpdate(benchmark::State& state) {
  std::vector<double> delta(static_cast<std::size_t>(state.range(0)));
  StreamRng rng(11, "bench", 0);
  rng.fill_normal(delta, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(clip_update(delta, 1.0));
  state.SetBytesProcessed(state.iterations() * delta.size() * sizeof(double));
}
BENCHMARK(BM_ClipUpdate)->Range(1 << 10, 1 << 17);

void BM_Grad(benchmark::State& state) {
  const auto clients = bench_clients(1, 256);
  const auto m = bench_model(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(grad(m, clients[0].train));
  state.SetItemsProcessed(state.iterations() * clients[0].train.size());
}
BENCHMARK(BM_Grad)->Arg(16)->Arg(64)->Arg(256);

void BM_LocalSolve(benchmark::State& state) {
  const auto clients = bench_clients(1, 256);
  const auto m = bench_model(64);
  LocalHyper hyper;
  hyper.lr = 0.1;
  hyper.local_epochs = 1;
  hyper.batch_size = 32;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        local_solve(m, clients[0], hyper, Algorithm::kFedAvg, 11, 1));
}
BENCHMARK(BM_LocalSolve);

void BM_OtaAggregate(benchmark::State& state) {
  const std::size_t k = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = 8192;
  std::vector<std::vector<double>> signals(k, std::vector<double>(dim));
  StreamRng rng(11, "bench", 1);
  for (auto& x : signals) rng.fill_normal(x, 1.0);
  const ChannelDraw draw = draw_channels(k, 1, 11, 1.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(ota_aggregate(signals, draw, nullptr, 11));
  state.SetBytesProcessed(state.iterations() * k * dim * sizeof(double));
}
BENCHMARK(BM_OtaAggregate)->Arg(10)->Arg(100);

void BM_RunRound(benchmark::State& state) {
  GlobalSchedule schedule;
  schedule.algorithm = Algorithm::kFedAvg;
  schedule.rounds = 1 << 30;  // never exhausted within the benchmark
  LocalHyper hyper;
  hyper.lr = 0.1;
  hyper.local_epochs = 1;
  hyper.batch_size = 32;
  TrainerOptions options;
  options.sigma_c = 1.0;
  Trainer trainer(schedule, hyper, bench_clients(10, 128), bench_model(64),
                  options, 1e-5, 11, nullptr);
  int iteration = 0;
  for (auto _ : state) benchmark::DoNotOptimize(trainer.run_round(++iteration));
}
BENCHMARK(BM_RunRound);

}  // namespace

BENCHMARK_MAIN();

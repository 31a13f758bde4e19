// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <filesystem>

#include "lamosim/config_io.hpp"
#include "lamosim/d3flow.hpp"
#include "lamosim/parmap.hpp"
#include "lamosim/servesim.hpp"

namespace fs = std::filesystem;
using namespace lamosim;

namespace {

const fs::path kConfigs = LAMOSIM_CONFIG_DIR;

void BM_DataflowSearch(benchmark::State& st) {
  const hw::ChipletSpec c;
  const auto shape = comp::GemmShape::make(st.range(0), 4096, 4096);
  for (auto _ : st) {
    benchmark::DoNotOptimize(d3::search(shape, c.pe, c.dram, c.clock_hz, 65.0, 2));
  }
}
BENCHMARK(BM_DataflowSearch)->Arg(1)->Arg(128)->Arg(2048);

void BM_TpGroup(benchmark::State& st) {
  const auto sys = config::load_system(kConfigs / "system.json");
  std::vector<int> pcs;
  for (std::size_t i = 0; i < sys.chiplets.size(); ++i) {
    if (sys.chiplets[i].chiplet.role == hw::ChipletRole::Prefill) pcs.push_back(static_cast<int>(i));
  }
  const auto pes = par::pe_points(sys, pcs);
  const int tp = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(par::tp_group(pes, tp, {0.1, 200'000}));
}
BENCHMARK(BM_TpGroup)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& st) {
  const auto sys = config::load_system(kConfigs / "system.json");
  const auto model = config::load_model(kConfigs / "model_llama3_8b.json");
  const auto plan = par::build_pd_plan(sys, model, 8, 1, 4, 2);
  const auto tr = trace::gen_trace(trace::Source::Code, 2.0, st.range(0), 1);
  sim::SchedulerConfig cfg;
  cfg.record_activity = false;
  for (auto _ : st) benchmark::DoNotOptimize(sim::simulate(sys, model, plan, tr, cfg, {}));
}
BENCHMARK(BM_Simulate)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

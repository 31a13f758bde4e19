// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <map>

#include "lamosim/config_io.hpp"
#include "lamosim/servesim.hpp"
#include "lamosim/report_io.hpp"

namespace fs = std::filesystem;
using namespace lamosim;

namespace {

const fs::path kConfigs = LAMOSIM_CONFIG_DIR;

// One prefill chiplet next to one decode chiplet.
hw::SystemSpec pair_system() {
  hw::SystemSpec s;
  auto pc = config::load_chiplet(kConfigs / "chiplet_pc.json");
  auto dc = config::load_chiplet(kConfigs / "chiplet_dc.json");
  s.chiplets.push_back({0, 0, pc});
  s.chiplets.push_back({1, 0, dc});
  return s;
}

hw::ModelSpec tiny() { return config::load_model(kConfigs / "model_tiny.json"); }

trace::Trace single(std::int64_t in, std::int64_t out, double arrival) {
  trace::Trace t;
  t.requests.push_back({0, arrival, in, out});
  return t;
}

std::int64_t round_up(std::int64_t v, std::int64_t b) { return (v + b - 1) / b * b; }

}  // namespace

TEST(ServeSim, SingleRequestTtftMatchesHandComposition) {
  const auto sys = pair_system();
  const auto model = tiny();
  const auto plan = par::build_pd_plan(sys, model, 2, 2, 2, 1);
  const std::int64_t len = 100;
  sim::SchedulerConfig cfg;
  const auto r = sim::simulate(sys, model, plan, single(len, 5, 0.5), cfg, {});
  ASSERT_EQ(r.metrics.requests.size(), 1u);

  // Per-layer work for a 100-token prompt at TP 2, written out by hand.
  const auto& chip = sys.chiplets[0].chiplet;
  const int dt = model.dtype_bytes;
  const std::int64_t heads = 4, kv_heads = 1, dh = 64, d = 512, ffn = 768;
  const double hidden = static_cast<double>(len) * d;
  auto gemm = [&](std::int64_t m, std::int64_t n, std::int64_t k, std::int64_t g) {
    return sim::gemm_op_cost(comp::GemmShape::make(m, n, k, g), chip, 65.0, dt).seconds;
  };
  auto vec = [&](double e) { return sim::vector_op_cost(e, chip).seconds; };
  const std::int64_t ctx = round_up(len, cfg.attn_bucket);
  const double local = vec(2 * hidden) + gemm(len, (heads + 2 * kv_heads) * dh, d, 1) +
                       gemm(len * heads, ctx, dh, kv_heads) + vec(3.0 * heads * len * len) +
                       gemm(len * heads, dh, ctx, kv_heads) + gemm(len, d, heads * dh, 1) +
                       vec(3 * hidden) + gemm(len, 2 * ffn, d, 1) + vec(2.0 * len * ffn) +
                       gemm(len, d, ffn, 1) + vec(hidden);

  const comm::Topology topo(sys);
  const auto& pre = plan.prefill;
  const auto& stages = pre.instances.at(0).stage_group;
  ASSERT_EQ(stages.size(), 2u);
  auto allreduce = [&](int g) {
    return comm::collective_cost(comm::CollectiveKind::AllReduce, pre.group_coords(g),
                                 pre.center_coord(g), hidden * dt, topo)
        .seconds;
  };
  double t = 0;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const int g = stages[s];
    const int layers = pre.stage_layers[s].second - pre.stage_layers[s].first;
    t += layers * (local + 2 * allreduce(g));
    if (s == 0) {
      t += comm::collective_cost(comm::CollectiveKind::Multicast, pre.group_coords(g),
                                 pre.center_coord(g), hidden * dt, topo)
               .seconds;
    } else {
      t += comm::p2p_cost(pre.center_coord(stages[s - 1]), pre.center_coord(g), hidden * dt,
                          topo)
               .seconds;
    }
  }
  EXPECT_NEAR(r.metrics.requests[0].ttft, t, 1e-9 * t);
}

TEST(ServeSim, EndToEndIsTtftPlusGaps) {
  const auto sys = pair_system();
  const auto model = tiny();
  const auto plan = par::build_pd_plan(sys, model, 2, 2, 2, 1);
  const auto tr = trace::gen_trace(trace::Source::Code, 20, 40, 3);
  const auto r = sim::simulate(sys, model, plan, tr, {}, {});
  EXPECT_EQ(r.metrics.completed, 40);
  std::int64_t tokens = 0;
  for (std::size_t i = 0; i < tr.requests.size(); ++i) {
    const auto& m = r.metrics.requests[i];
    ASSERT_TRUE(m.completed);
    EXPECT_EQ(m.tokens, tr.requests[i].output_len);
    EXPECT_NEAR(m.e2e, m.ttft + m.decode_gaps, 1e-12 * m.e2e);
    if (m.tokens > 1) EXPECT_NEAR(m.tbt_mean, m.decode_gaps / (m.tokens - 1), 1e-15);
    EXPECT_GT(m.ttft, 0);
    tokens += m.tokens;
  }
  EXPECT_EQ(r.metrics.total_tokens, tokens);
  EXPECT_NEAR(r.metrics.energy, r.metrics.dynamic_energy + r.metrics.static_energy, 1e-9);
}

TEST(ServeSim, ContinuousBatchingBeatsStatic) {
  const auto sys = pair_system();
  const auto model = tiny();
  const auto plan = par::build_pd_plan(sys, model, 2, 2, 2, 1);
  const auto tr = trace::gen_trace(trace::Source::Reason, 50, 64, 9);
  sim::SchedulerConfig cont;
  cont.record_activity = false;
  auto stat = cont;
  stat.mode = sim::BatchMode::Static;
  const auto a = sim::simulate(sys, model, plan, tr, cont, {});
  const auto b = sim::simulate(sys, model, plan, tr, stat, {});
  EXPECT_GE(a.metrics.tpt, b.metrics.tpt);
}

TEST(ServeSim, Deterministic) {
  const auto sys = pair_system();
  const auto model = tiny();
  const auto plan = par::build_pd_plan(sys, model, 2, 2, 2, 1);
  const auto tr = trace::gen_trace(trace::Source::Code, 30, 32, 5);
  const auto a = report::to_json(sim::simulate(sys, model, plan, tr, {}, {}).metrics);
  const auto b = report::to_json(sim::simulate(sys, model, plan, tr, {}, {}).metrics);
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(ServeSim, ActivityDoesNotOverlapAndRooflineHolds) {
  const auto sys = pair_system();
  const auto model = tiny();
  const auto plan = par::build_pd_plan(sys, model, 2, 2, 2, 1);
  const auto tr = trace::gen_trace(trace::Source::Code, 30, 24, 2);
  const auto r = sim::simulate(sys, model, plan, tr, {}, {});
  std::map<int, std::vector<std::pair<double, double>>> per_pe;
  for (const auto& iv : r.activity.intervals) {
    EXPECT_LE(iv.start, iv.end);
    per_pe[iv.pe].push_back({iv.start, iv.end});
  }
  for (auto& [pe, v] : per_pe) {
    std::sort(v.begin(), v.end());
    for (std::size_t i = 1; i < v.size(); ++i) {
      EXPECT_LE(v[i - 1].second, v[i].first + 1e-15) << "pe " << pe;
    }
  }
  const auto rep = sim::roofline_check(r);
  EXPECT_EQ(rep.violations, 0);
  EXPECT_GT(rep.checked, 0);
  EXPECT_GT(rep.ai_prefill, rep.ai_decode);
}

TEST(ServeSim, HotterDramSlowsServing) {
  const auto sys = pair_system();
  const auto model = tiny();
  const auto plan = par::build_pd_plan(sys, model, 2, 2, 2, 1);
  const auto tr = trace::gen_trace(trace::Source::Code, 30, 16, 4);
  sim::SchedulerConfig cfg;
  cfg.record_activity = false;
  const auto cool = sim::simulate(sys, model, plan, tr, cfg, {60, 60});
  const auto hot = sim::simulate(sys, model, plan, tr, cfg, {105, 105});
  EXPECT_GE(hot.metrics.mean_ttft, cool.metrics.mean_ttft);
  EXPECT_GE(hot.metrics.mean_tbt, cool.metrics.mean_tbt);
}

TEST(ServeSim, OversizedRequestFlagged) {
  const auto sys = pair_system();
  const auto model = tiny();
  const auto plan = par::build_pd_plan(sys, model, 2, 2, 2, 1);
  sim::SchedulerConfig cfg;
  cfg.kv_pool_tokens = 50;
  const auto r = sim::simulate(sys, model, plan, single(100, 8, 0), cfg, {});
  EXPECT_EQ(r.metrics.kv_overflow, 1);
  EXPECT_TRUE(r.metrics.requests[0].kv_overflow);
  EXPECT_FALSE(r.metrics.requests[0].completed);
}

TEST(ServeSim, TemperatureMapSizeChecked) {
  const auto sys = pair_system();
  const auto model = tiny();
  const auto plan = par::build_pd_plan(sys, model, 2, 2, 2, 1);
  try {
    sim::simulate(sys, model, plan, single(10, 2, 0), {}, {65.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PlanMismatch);
  }
}

TEST(Trace, GeneratorDeterministicAndSorted) {
  const auto a = trace::gen_trace(trace::Source::LongBench, 2, 100, 17);
  const auto b = trace::gen_trace(trace::Source::LongBench, 2, 100, 17);
  EXPECT_EQ(a.requests, b.requests);
  for (std::size_t i = 1; i < a.requests.size(); ++i) {
    EXPECT_LE(a.requests[i - 1].arrival, a.requests[i].arrival);
  }
  EXPECT_NE(trace::gen_trace(trace::Source::LongBench, 2, 100, 18).requests, a.requests);
}

TEST(Trace, CsvRoundTrip) {
  const auto a = trace::gen_trace(trace::Source::Code, 3, 20, 1);
  const auto path = fs::temp_directory_path() / "lamosim_trace_rt.csv";
  trace::write_csv(a, path);
  const auto b = trace::read_csv(path);
  ASSERT_EQ(a.requests.size(), b.requests.size());
  for (std::size_t i = 0; i < a.requests.size(); ++i) {
    EXPECT_EQ(a.requests[i].input_len, b.requests[i].input_len);
    EXPECT_NEAR(a.requests[i].arrival, b.requests[i].arrival, 1e-9);
  }
  fs::remove(path);
}

TEST(Trace, UnknownSource) {
  try {
    trace::source_from_string("chat");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownSource);
  }
  EXPECT_EQ(trace::source_from_string("LongBench"), trace::Source::LongBench);
}

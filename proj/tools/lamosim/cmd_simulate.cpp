// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <memory>

#include "lamosim/common.hpp"
#include "lamosim/servesim.hpp"
#include "lamosim/thermal.hpp"

namespace lamosim::cli {

namespace {

struct SimArgs {
  Common common;
  PlanArgs plan;
  TraceArgs trace;
  bool thermal = false;
  std::string batching = "continuous";
  int max_batch = 32;
  int attn_bucket = 64;
};

int run(const SimArgs& a) {
  const fs::path out(a.common.out);
  report::Manifest man;
  man.command = "simulate";
  man.seed = a.common.seed;
  const auto tr = a.trace.load(a.common.seed, man);
  const auto lp = load_plan(a.plan, tr, a.common.seed, man);
  sim::SchedulerConfig cfg;
  cfg.mode = a.batching == "static" ? sim::BatchMode::Static : sim::BatchMode::Continuous;
  cfg.max_decode_batch = a.max_batch;
  cfg.attn_bucket = a.attn_bucket;

  sim::SimResult r;
  nlohmann::json thermal_j;
  if (a.thermal) {
    auto fp = thermal::thermal_fixed_point(lp.sys, lp.model, lp.plan, tr, cfg);
    thermal::write_thermal_csv(out / "thermal.csv", fp.power, fp.state);
    thermal_j = {{"iterations", fp.iterations},
                 {"delta_history_c", fp.delta_history},
                 {"t_max_c", fp.state.t_max()},
                 {"flow_level", fp.state.flow_level},
                 {"pump_w", fp.state.pump_w},
                 {"logic_c", fp.state.logic_c},
                 {"dram_c", fp.state.dram_c},
                 {"sim_temps_c", fp.sim_temps}};
    r = std::move(fp.sim);
  } else {
    r = sim::simulate(lp.sys, lp.model, lp.plan, tr, cfg, {});
  }
  const auto roof = sim::roofline_check(r);
  auto mj = report::to_json(r.metrics);
  mj["roofline"] = {{"checked", roof.checked},
                    {"violations", roof.violations},
                    {"worst_ratio", roof.worst_ratio},
                    {"ai_prefill", roof.ai_prefill},
                    {"ai_decode", roof.ai_decode}};
  if (a.thermal) mj["thermal"] = thermal_j;
  report::write_json(out / "metrics.json", mj);
  report::write_metrics_csv(out / "metrics.csv", r.metrics);
  report::write_activity_csv(out / "activity.csv", r.activity);
  report::write_json(out / "plan.json", par::to_json(lp.plan));
  report::write_manifest(out, man);

  const auto& m = r.metrics;
  std::printf("%-10s %-12s %-12s %-12s %-12s %s\n", "completed", "p99_ttft_s", "p99_tbt_s",
              "tokens/s", "avg_power_w", "tokens/J");
  std::printf("%-10lld %-12.6g %-12.6g %-12.6g %-12.6g %.6g\n",
              static_cast<long long>(m.completed), m.p99_ttft, m.p99_tbt, m.tpt, m.avg_power,
              m.tokens_per_joule);
  return kOk;
}

}  // namespace

void register_simulate(CLI::App& app, int& rc) {
  auto a = std::make_shared<SimArgs>();
  auto* sub = app.add_subcommand("simulate", "Simulate serving a trace on a planned system");
  a->common.add(*sub);
  a->plan.add(*sub);
  a->trace.add(*sub);
  sub->add_flag("--thermal", a->thermal, "Iterate simulation and thermal solve to a fixed point");
  sub->add_option("--batching", a->batching, "Decode batching")
      ->check(CLI::IsMember({"continuous", "static"}))
      ->capture_default_str();
  sub->add_option("--max-batch", a->max_batch, "Requests per decode micro-batch")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--attn-bucket", a->attn_bucket, "Context-length rounding for attention costs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->callback([a, &rc] { rc = run_action(a->common.out, [a] { return run(*a); }); });
}

}  // namespace lamosim::cli

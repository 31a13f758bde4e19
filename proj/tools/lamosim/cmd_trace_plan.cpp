// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <memory>

#include "lamosim/common.hpp"

namespace lamosim::cli {

namespace {

struct GenTraceArgs {
  Common common;
  TraceArgs trace;
};

struct PlanCmdArgs {
  Common common;
  PlanArgs plan;
  TraceArgs trace;
};

}  // namespace

void register_gen_trace(CLI::App& app, int& rc) {
  auto a = std::make_shared<GenTraceArgs>();
  auto* sub = app.add_subcommand("gen-trace", "Generate a synthetic request trace");
  a->common.add(*sub);
  sub->add_option("--source", a->trace.source, "Length profile")
      ->check(CLI::IsMember({"code", "reason", "longbench"}))
      ->capture_default_str();
  sub->add_option("--rate", a->trace.rate, "Arrival rate (req/s)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--requests", a->trace.requests, "Request count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->callback([a, &rc] {
    rc = run_action(a->common.out, [a] {
      const fs::path out(a->common.out);
      report::Manifest man;
      man.command = "gen-trace";
      man.seed = a->common.seed;
      const auto tr = a->trace.load(a->common.seed, man);
      trace::write_csv(tr, out / "trace.csv");
      report::write_manifest(out, man);
      double in = 0, outl = 0;
      for (const auto& r : tr.requests) {
        in += static_cast<double>(r.input_len);
        outl += static_cast<double>(r.output_len);
      }
      const double n = static_cast<double>(tr.requests.size());
      std::printf("%-10s %-10s %-14s %s\n", "requests", "rate", "mean_input", "mean_output");
      std::printf("%-10zu %-10.4g %-14.1f %.1f\n", tr.requests.size(), tr.rate, in / n, outl / n);
      return kOk;
    });
  });
}

void register_plan(CLI::App& app, int& rc) {
  auto a = std::make_shared<PlanCmdArgs>();
  auto* sub = app.add_subcommand("plan", "Map prefill and decode onto the system");
  a->common.add(*sub);
  a->plan.add(*sub);
  a->trace.add(*sub);
  sub->callback([a, &rc] {
    rc = run_action(a->common.out, [a] {
      const fs::path out(a->common.out);
      report::Manifest man;
      man.command = "plan";
      man.seed = a->common.seed;
      const auto tr = a->trace.load(a->common.seed, man);
      const auto lp = load_plan(a->plan, tr, a->common.seed, man);
      report::write_json(out / "plan.json", par::to_json(lp.plan));
      if (!lp.choice.is_null()) report::write_json(out / "mapping_search.json", lp.choice);
      report::write_manifest(out, man);
      std::printf("%-8s %-4s %-4s %-10s %s\n", "phase", "tp", "pp", "replicas", "objective");
      for (const auto* p : {&lp.plan.prefill, &lp.plan.decode}) {
        std::printf("%-8s %-4d %-4d %-10zu %.6g\n", std::string(par::to_string(p->phase)).c_str(),
                    p->tp, p->pp, p->instances.size(), p->objective);
      }
      return kOk;
    });
  });
}

}  // namespace lamosim::cli

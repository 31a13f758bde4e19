// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <iostream>
#include <memory>

#include "lamosim/common.hpp"
#include "lamosim/config_io.hpp"
#include "lamosim/dse.hpp"
#include "lamosim/error.hpp"

namespace lamosim::cli {

namespace {

struct DseArgs {
  Common common;
  TraceArgs trace;
  std::string level = "chiplet";
  std::string domain;
  std::string slo = "slo.json";
  std::string model = "model_tiny.json";
  int budget = 200;
  double epsilon = 0.05;
  bool nameplate = false;
};

int run_chiplet(const DseArgs& a, report::Manifest& man) {
  const fs::path out(a.common.out);
  const auto path = resolve_config(a.domain.empty() ? "domain_subset.json" : a.domain);
  const auto dj = config::load_json_file(path);
  man.config_hashes["domain"] = config::config_hash(dj);
  const auto dom = dse::ParamDomain::from_json(dj);
  const auto r = dse::chiplet_dse(dom, a.budget, a.common.seed, a.epsilon);
  report::write_json(out / "chiplet_dse.json", report::to_json(r));
  report::write_pareto_csv(out / "pareto.csv", r);
  man.extra["evaluations"] = r.evaluated.size();
  man.extra["space_size"] = r.space_size;
  report::write_manifest(out, man);
  std::printf("%-14s %-8s %s\n", "capacity_gib", "front", "near");
  for (const auto& [cap, ids] : r.front) {
    std::printf("%-14g %-8zu %zu\n", static_cast<double>(cap) / (1 << 30), ids.size(),
                r.near.count(cap) ? r.near.at(cap).size() : 0);
  }
  return kOk;
}

int run_system(const DseArgs& a, report::Manifest& man) {
  const fs::path out(a.common.out);
  const auto path = resolve_config(a.domain.empty() ? "system_space_toy.json" : a.domain);
  const auto sj = config::load_json_file(path);
  man.config_hashes["space"] = config::config_hash(sj);
  const auto space = dse::SystemSpace::from_json(sj, path.parent_path());
  const auto slo_j = config::load_json_file(resolve_config(a.slo));
  man.config_hashes["slo"] = config::config_hash(slo_j);
  const auto slo = dse::SloSpec::from_json(slo_j);
  const auto mj = config::load_json_file(resolve_config(a.model));
  man.config_hashes["model"] = config::config_hash(mj);
  const auto model = config::model_from_json(mj);
  const auto tr = a.trace.load(a.common.seed, man);

  dse::SystemDseOptions opt;
  opt.budget = a.budget;
  opt.seed = a.common.seed;
  opt.jobs = a.common.job_count();
  opt.nameplate = a.nameplate;
  opt.plan.seed = a.common.seed;
  const auto r = dse::system_dse(space, model, tr, slo, opt);
  report::write_json(out / "system_dse.json", report::to_json(r));
  report::write_ranking_csv(out / "ranking.csv", r);
  man.extra["evaluations"] = r.evaluated.size();
  man.extra["space_size"] = r.space_size;
  man.extra["binding_histogram"] = r.binding_histogram;
  report::write_manifest(out, man);
  std::printf("%-6s %-6s %-14s %-12s %s\n", "rank", "id", "objective", "p99_ttft_s", "t_max_c");
  int rank = 1;
  for (int id : r.ranked) {
    for (const auto& c : r.evaluated) {
      if (c.id == id) {
        std::printf("%-6d %-6d %-14.6g %-12.6g %.4g\n", rank++, id, c.objective, c.ttft_p99,
                    c.t_max);
      }
    }
  }
  dse::require_feasible(r);
  return kOk;
}

}  // namespace

void register_dse(CLI::App& app, int& rc) {
  auto a = std::make_shared<DseArgs>();
  auto* sub = app.add_subcommand("dse", "Explore chiplet or system designs");
  a->common.add(*sub, true);
  sub->add_option("--level", a->level, "Exploration level")
      ->check(CLI::IsMember({"chiplet", "system"}))
      ->capture_default_str();
  sub->add_option("--domain", a->domain,
                  "Parameter domain (chiplet) or system space (system); defaults per level");
  sub->add_option("--budget", a->budget, "Maximum design evaluations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--epsilon", a->epsilon, "Near-Pareto tolerance (chiplet level)")
      ->capture_default_str();
  sub->add_option("--slo", a->slo, "SLO and safety limits (system level)")->capture_default_str();
  sub->add_option("--model", a->model, "Model config (system level)")->capture_default_str();
  sub->add_flag("--nameplate", a->nameplate, "Rank by tokens per nameplate joule (TDP)");
  a->trace.add(*sub);
  sub->callback([a, &rc] {
    rc = run_action(a->common.out, [a] {
      report::Manifest man;
      man.command = "dse --level " + a->level;
      man.seed = a->common.seed;
      return a->level == "system" ? run_system(*a, man) : run_chiplet(*a, man);
    });
  });
}

}  // namespace lamosim::cli

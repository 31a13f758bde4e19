// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#include "lamosim/common.hpp"

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <thread>

#include "lamosim/config_io.hpp"
#include "lamosim/dse.hpp"
#include "lamosim/error.hpp"
#include "lamosim/hash.hpp"

namespace lamosim::cli {

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::AreaExceeded:
    case ErrorCode::PowerExceeded:
    case ErrorCode::InconsistentCapacity:
    case ErrorCode::InvalidRequest:
    case ErrorCode::UnknownSource:
    case ErrorCode::EmptyDomain:
      return kUsage;
    case ErrorCode::NoFeasibleMapping:
    case ErrorCode::Infeasible:
    case ErrorCode::TooManyStages:
    case ErrorCode::CapacityExceeded:
    case ErrorCode::KvOverflow:
    case ErrorCode::NonConvergence:
    case ErrorCode::NoFeasibleDesign:
      return kInfeasible;
    default:
      return kInternal;
  }
}

fs::path resolve_config(const std::string& name) {
  const fs::path p(name);
  if (fs::exists(p)) return p;
  if (p.is_relative()) {
    if (const char* env = std::getenv("LAMOSIM_CONFIG_DIR"); env && *env) {
      if (fs::exists(fs::path(env) / p)) return fs::path(env) / p;
    }
    if (fs::exists(fs::path(LAMOSIM_DEFAULT_CONFIG_DIR) / p)) {
      return fs::path(LAMOSIM_DEFAULT_CONFIG_DIR) / p;
    }
  }
  throw Error(ErrorCode::InvalidConfig, "config file not found: " + name);
}

void Common::add(CLI::App& app, bool with_jobs) {
  app.add_option("--out", out, "Output directory")->capture_default_str();
  app.add_option("--seed", seed, "Run seed; every random stream derives from it")
      ->capture_default_str();
  if (with_jobs) {
    app.add_option("--jobs", jobs, "Worker threads (0 = all cores); results do not depend on it")
        ->capture_default_str();
  }
}

void TraceArgs::add(CLI::App& app) {
  app.add_option("--trace", file, "Trace CSV; when absent a trace is generated");
  app.add_option("--source", source, "Length profile for generated traces")
      ->check(CLI::IsMember({"code", "reason", "longbench"}))
      ->capture_default_str();
  app.add_option("--rate", rate, "Arrival rate of generated traces (req/s)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--requests", requests, "Request count of generated traces")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

trace::Trace TraceArgs::load(std::uint64_t seed, report::Manifest& man) const {
  if (!file.empty()) {
    if (!fs::exists(file)) throw Error(ErrorCode::InvalidConfig, "trace file not found: " + file);
    man.config_hashes["trace"] = stable_hash(report::file_hash(file));
    return trace::read_csv(file);
  }
  man.extra["trace"] = {{"source", source}, {"rate", rate}, {"requests", requests}};
  return trace::gen_trace(trace::source_from_string(source), rate, requests, seed);
}

void PlanArgs::add(CLI::App& app) {
  app.add_option("--system", system, "System config")->capture_default_str();
  app.add_option("--model", model, "Model config")->capture_default_str();
  app.add_option("--plan", mapping, "tp_pre,pp_pre,tp_dec,pp_dec or 'auto' to optimize")
      ->capture_default_str();
}

LoadedPlan load_plan(const PlanArgs& a, const trace::Trace& tr, std::uint64_t seed,
                     report::Manifest& man) {
  LoadedPlan lp;
  const auto sj = config::load_json_file(resolve_config(a.system));
  const auto mj = config::load_json_file(resolve_config(a.model));
  lp.sys = config::system_from_json(sj);
  lp.model = config::model_from_json(mj);
  man.config_hashes["system"] = config::config_hash(sj);
  man.config_hashes["model"] = config::config_hash(mj);
  const auto v = hw::validate_system(lp.sys);
  if (!v.ok()) hw::throw_if_issues(v.issues);
  hw::throw_if_issues(hw::validate_model(lp.model));
  hw::throw_if_issues(hw::check_model_fits(lp.sys, lp.model));
  par::PlanOptions opt;
  opt.seed = seed;
  int m[4] = {0, 0, 0, 0};
  if (a.mapping == "auto") {
    const auto c = dse::optimize_mapping(lp.sys, lp.model, tr, opt);
    m[0] = c.prefill.tp;
    m[1] = c.prefill.pp;
    m[2] = c.decode.tp;
    m[3] = c.decode.pp;
    auto table = [](const std::vector<dse::PhaseChoice>& t) {
      nlohmann::json j = nlohmann::json::array();
      for (const auto& e : t) {
        j.push_back({{"tp", e.tp}, {"pp", e.pp}, {"objective", e.objective},
                     {"instances", e.instances}});
      }
      return j;
    };
    lp.choice = {{"prefill", table(c.prefill_table)}, {"decode", table(c.decode_table)}};
  } else if (std::sscanf(a.mapping.c_str(), "%d,%d,%d,%d", &m[0], &m[1], &m[2], &m[3]) != 4) {
    throw Error(ErrorCode::InvalidRequest, "bad --plan '" + a.mapping + "'");
  }
  lp.plan = par::build_pd_plan(lp.sys, lp.model, m[0], m[1], m[2], m[3], opt);
  man.extra["mapping"] = {m[0], m[1], m[2], m[3]};
  return lp;
}

int Common::job_count() const {
  if (jobs > 0) return jobs;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

int run_action(const fs::path& out, const Action& a) {
  const auto t0 = Clock::now();
  try {
    fs::create_directories(out);
    const int rc = a();
    report::write_timing(out, std::chrono::duration<double>(Clock::now() - t0).count());
    return rc;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed config: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}

}  // namespace lamosim::cli

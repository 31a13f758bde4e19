// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

#include <CLI11.hpp>

#include "lamosim/parmap.hpp"
#include "lamosim/report_io.hpp"
#include "lamosim/trace.hpp"

namespace lamosim::cli {

namespace fs = std::filesystem;

enum Exit : int { kOk = 0, kUsage = 2, kInfeasible = 3, kInternal = 4 };

int exit_code(ErrorCode c);

/// Path as given if it exists; else under $LAMOSIM_CONFIG_DIR; else under
/// the built-in config directory. Throws InvalidConfig naming the path.
fs::path resolve_config(const std::string& name);

/// Options shared by every subcommand.
struct Common {
  std::string out = "out";
  std::uint64_t seed = 1;
  int jobs = 0;  // 0 = hardware concurrency
  void add(CLI::App& app, bool with_jobs = false);
  int job_count() const;
};

/// A trace from --trace, or generated from --source/--rate/--requests.
struct TraceArgs {
  std::string file;
  std::string source = "code";
  double rate = 2.0;
  std::int64_t requests = 64;
  void add(CLI::App& app);
  trace::Trace load(std::uint64_t seed, report::Manifest& man) const;
};

/// `tp_pre,pp_pre,tp_dec,pp_dec` or `auto`.
struct PlanArgs {
  std::string system = "system.json";
  std::string model = "model_llama3_8b.json";
  std::string mapping = "8,1,4,2";
  void add(CLI::App& app);
};

struct LoadedPlan {
  hw::SystemSpec sys;
  hw::ModelSpec model;
  par::PdPlan plan;
  nlohmann::json choice;  ///< optimizer table when the mapping was `auto`
};

LoadedPlan load_plan(const PlanArgs& a, const trace::Trace& tr, std::uint64_t seed,
                     report::Manifest& man);

using Action = std::function<int()>;

/// Wraps an action: creates the output directory, times it, writes
/// timing.json and maps exceptions to exit codes.
int run_action(const fs::path& out, const Action& a);

using Clock = std::chrono::steady_clock;

void register_dataflow(CLI::App& app, int& rc);
void register_gen_trace(CLI::App& app, int& rc);
void register_plan(CLI::App& app, int& rc);
void register_simulate(CLI::App& app, int& rc);
void register_dse(CLI::App& app, int& rc);

}  // namespace lamosim::cli

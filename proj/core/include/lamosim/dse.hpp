// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Two-level design-space exploration. Chiplet level: sample the parameter
// domain, drop designs over area or power, keep Pareto and near-Pareto
// designs per DRAM capacity. System level: combine chiplet designs, counts
// and mappings, simulate with the thermal loop, filter by SLO, rank by
// tokens per joule.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lamosim/hwspec.hpp"
#include "lamosim/parmap.hpp"
#include "lamosim/servesim.hpp"
#include "lamosim/thermal.hpp"
#include "lamosim/trace.hpp"

namespace lamosim::dse {

/// Discrete value sets keyed by parameter name. Recognised keys:
/// dram_io_bits, dram_capacity_gib, dram_layers, dram_banks, page_size_bytes,
/// n_core, n_pe, sram_banks, sram_kib, sa_rows, sa_cols, base_sa_rows,
/// vector_regs, noc_flit_bits, nop_channels.
struct ParamDomain {
  std::map<std::string, std::vector<double>> values;
  hw::ChipletSpec base;  ///< fields not covered by the domain

  std::uint64_t size() const;
  static ParamDomain from_json(const nlohmann::json& j);
};

/// Applies one point (value index per key, in map order) to the base spec.
hw::ChipletSpec apply_point(const ParamDomain& d, const std::vector<int>& idx);

struct ChipletCandidate {
  int id = 0;
  std::vector<int> point;
  hw::ChipletSpec spec;
  hw::ChipletMetrics metrics;
  std::int64_t capacity_key = 0;  ///< requested DRAM capacity in bytes
  bool feasible = false;
  std::string reason;  ///< first violation when infeasible
};

struct ChipletDseResult {
  std::vector<ChipletCandidate> evaluated;
  std::map<std::int64_t, std::vector<int>> front;  ///< capacity -> candidate ids
  std::map<std::int64_t, std::vector<int>> near;   ///< near-Pareto, front excluded
  std::uint64_t space_size = 0;
};

/// a dominates b: flops and bandwidth at least as high, power at most as
/// high, one strictly better.
bool dominates(const hw::ChipletMetrics& a, const hw::ChipletMetrics& b);

/// Indices of the non-dominated entries.
std::vector<int> pareto_front(const std::vector<hw::ChipletMetrics>& pts);

/// Throws EmptyDomain if any key has no values or budget < 1.
ChipletDseResult chiplet_dse(const ParamDomain& domain, int budget, std::uint64_t seed,
                             double epsilon = 0.05);

struct SloSpec {
  double ttft_max = 10.0;  ///< s, applied to p99
  double tbt_max = 0.2;    ///< s, applied to p99
  double t_limit = 95.0;   ///< °C
  double p_rack = 10000.0;  ///< W, peak power including pumps
  double kv_budget = 0.0;   ///< bytes of decode KV capacity required

  static SloSpec from_json(const nlohmann::json& j);
};

struct Mapping {
  int tp_pre = 1;
  int pp_pre = 1;
  int tp_dec = 1;
  int pp_dec = 1;
  bool operator==(const Mapping&) const = default;
};

struct SystemSpace {
  std::vector<hw::ChipletSpec> pc;
  std::vector<hw::ChipletSpec> dc;
  std::vector<std::pair<int, int>> counts;  ///< (n_pc, n_dc)
  std::vector<Mapping> mappings;
  hw::SystemSpec base;  ///< interconnect, cooling and rack limit

  std::uint64_t size() const;
  /// Chiplet entries may be inline objects or paths relative to `base_dir`.
  static SystemSpace from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
};

struct DesignPoint {
  int pc = 0;
  int dc = 0;
  int counts = 0;
  int mapping = 0;
  auto operator<=>(const DesignPoint&) const = default;
};

/// Row-major placement on the smallest near-square mesh: PCs first.
hw::SystemSpec assemble(const SystemSpace& space, const DesignPoint& p);

struct SystemCandidate {
  int id = 0;  ///< flattened index in the space
  DesignPoint point;
  bool simulated = false;
  bool feasible = false;
  std::string binding;  ///< tightest constraint when infeasible
  double ttft_p99 = 0;
  double tbt_p99 = 0;
  double tpt = 0;
  double t_max = 0;
  double peak_power = 0;
  double avg_power = 0;
  double area_mm2 = 0;
  double kv_capacity = 0;
  double tokens_per_joule = 0;
  double nameplate_tokens_per_joule = 0;
  double objective = 0;
  double worst_ratio = 0;  ///< largest constraint value / limit
};

struct SystemDseOptions {
  int budget = 8;
  std::uint64_t seed = 1;
  int jobs = 1;
  bool nameplate = false;
  int round_size = 8;
  sim::SchedulerConfig sched;
  par::PlanOptions plan;
  thermal::FixedPointOptions thermal;
};

struct SystemDseResult {
  std::vector<SystemCandidate> evaluated;  ///< sorted by id
  std::vector<int> ranked;                 ///< feasible ids, best first
  std::map<std::string, int> binding_histogram;
  std::uint64_t space_size = 0;
  bool exhaustive = false;
};

/// Exhaustive when the budget covers the space; otherwise balanced seeds then
/// annealed neighbourhood rounds of fixed size, so results do not depend on
/// the job count.
SystemDseResult system_dse(const SystemSpace& space, const hw::ModelSpec& model,
                           const trace::Trace& tr, const SloSpec& slo,
                           const SystemDseOptions& opt);

/// Evaluates one design point (plan, thermal loop, constraint checks).
SystemCandidate evaluate_design(const SystemSpace& space, const DesignPoint& p,
                                const hw::ModelSpec& model, const trace::Trace& tr,
                                const SloSpec& slo, const SystemDseOptions& opt);

/// Re-derives feasibility from the recorded metrics alone.
bool satisfies(const SystemCandidate& c, const SloSpec& slo);

/// Throws NoFeasibleDesign with the binding-constraint histogram.
void require_feasible(const SystemDseResult& r);

// ---- mapping optimizer -----------------------------------------------------

struct PhaseChoice {
  int tp = 1;
  int pp = 1;
  double objective = 0;  ///< prefill: TTFT (s); decode: seconds per token
  int instances = 0;
};

struct PdChoice {
  PhaseChoice prefill;
  PhaseChoice decode;
  std::vector<PhaseChoice> prefill_table;
  std::vector<PhaseChoice> decode_table;
};

/// Searches tp in {1,2,4,8,16} dividing the head count and pp in {1,2,4,8}.
/// Prefill minimises the latency of a mean-length prompt; decode minimises
/// the pipeline beat per generated token across all replicas.
PdChoice optimize_mapping(const hw::SystemSpec& sys, const hw::ModelSpec& model,
                          const trace::Trace& tr, const par::PlanOptions& opt = {},
                          int max_decode_batch = 32);

/// Latency of one pass of `lens` through every stage of replica 0.
double phase_latency(const hw::SystemSpec& sys, const hw::ModelSpec& model,
                     const par::MappingPlan& plan, const std::vector<std::int64_t>& lens,
                     double temp_c = 65.0, bool beat_only = false);

nlohmann::json to_json(const SystemCandidate& c);

}  // namespace lamosim::dse

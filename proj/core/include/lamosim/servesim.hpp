// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Discrete-event simulator for disaggregated serving. Prefill instances run
// FCFS batches through their pipeline; each stage forwards its slice of the
// KV cache when it completes. Decode instances keep one micro-batch per
// pipeline stage and generate one token per request per iteration.
//
// Events pop in (time, seq) order and every resource is reserved in the
// order requests become ready, so a run is a pure function of its inputs.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lamosim/commmodel.hpp"
#include "lamosim/compmodel.hpp"
#include "lamosim/hwspec.hpp"
#include "lamosim/parmap.hpp"
#include "lamosim/trace.hpp"

namespace lamosim::sim {

enum class BatchMode { Continuous, Static };

struct SchedulerConfig {
  BatchMode mode = BatchMode::Continuous;
  int max_decode_batch = 32;  ///< requests per decode micro-batch
  int max_prefill_batch = 8;
  std::int64_t max_prefill_tokens = 16384;
  int attn_bucket = 64;            ///< context lengths round up to this multiple
  std::int64_t kv_pool_tokens = 0;  ///< per decode instance; 0 derives it from DRAM
  bool record_activity = true;
};

struct RequestMetrics {
  std::int64_t id = 0;
  double arrival = 0;
  double ttft = 0;       ///< first token time minus arrival
  double tbt_mean = 0;   ///< mean gap between consecutive tokens
  double e2e = 0;        ///< last token time minus arrival
  double decode_gaps = 0;  ///< sum of gaps after the first token
  std::int64_t tokens = 0;
  bool completed = false;
  bool kv_overflow = false;  ///< needed more KV than a whole decode pool
};

struct ServingMetrics {
  std::vector<RequestMetrics> requests;
  std::int64_t completed = 0;
  std::int64_t total_tokens = 0;
  double makespan = 0;  ///< first arrival to last token
  double mean_ttft = 0;
  double p50_ttft = 0;
  double p99_ttft = 0;
  double mean_tbt = 0;
  double p99_tbt = 0;
  double mean_e2e = 0;
  double tpt = 0;  ///< tokens / makespan
  double dynamic_energy = 0;
  double static_energy = 0;
  double energy = 0;
  double avg_power = 0;
  double tokens_per_joule = 0;
  std::int64_t kv_wait_events = 0;  ///< admissions deferred by a full KV pool
  std::int64_t kv_overflow = 0;     ///< requests that can never fit
  std::int64_t op_evaluations = 0;  ///< distinct operator costings
};

enum class ActivityKind { Compute, Mem, Comm, Idle };
std::string_view to_string(ActivityKind k);

struct Interval {
  int pe = 0;
  double start = 0;
  double end = 0;
  ActivityKind kind = ActivityKind::Compute;
  double energy = 0;
};

struct ActivityTrace {
  std::vector<comm::MeshCoord> pes;
  std::vector<int> pe_chiplet;
  std::vector<Interval> intervals;  ///< busy intervals, non-overlapping per PE
  double makespan = 0;
};

struct RooflineSample {
  par::Phase phase = par::Phase::Prefill;
  std::string op;
  double flops = 0;
  double bytes = 0;    ///< DRAM bytes moved
  double seconds = 0;
  double peak_flops = 0;
  double mem_ceiling = 0;  ///< AI x effective bandwidth at the op's temperature
};

struct SimResult {
  ServingMetrics metrics;
  ActivityTrace activity;
  std::vector<RooflineSample> roofline;  ///< one per distinct operator instance
};

/// Per-chiplet temperatures (°C), indexed like SystemSpec::chiplets.
using Temps = std::vector<double>;

/// Throws PlanMismatch when the plans do not fit the system or model.
SimResult simulate(const hw::SystemSpec& sys, const hw::ModelSpec& model, const par::PdPlan& plan,
                   const trace::Trace& tr, const SchedulerConfig& cfg, const Temps& temps);

struct RooflineReport {
  std::int64_t checked = 0;
  std::int64_t violations = 0;
  double worst_ratio = 0;  ///< achieved / ceiling
  double ai_prefill = 0;   ///< FLOP-weighted mean arithmetic intensity
  double ai_decode = 0;
};

/// Achieved FLOP/s never exceeds min(peak, AI x bandwidth) by more than
/// `tolerance`; throws RooflineViolation otherwise.
RooflineReport roofline_check(const SimResult& r, double tolerance = 1e-2);

/// Static power of every chiplet at the given temperatures (leakage, DRAM
/// layers, refresh).
double static_power_w(const hw::SystemSpec& sys, const Temps& temps);

/// Cost of a single operator on one PE of chiplet `c`; exposed for oracles.
struct OpCost {
  double seconds = 0;
  double energy = 0;
  double flops = 0;
  double dram_bytes = 0;
  ActivityKind kind = ActivityKind::Compute;
};

OpCost gemm_op_cost(const comp::GemmShape& s, const hw::ChipletSpec& c, double temp_c, int dtype,
                    comp::ComputeLut* lut = nullptr);
OpCost vector_op_cost(double elements, const hw::ChipletSpec& c);

}  // namespace lamosim::sim

// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Two-step parallel mapping. PEs are first clustered into tensor-parallel
// groups by an exact branch-and-bound over the span objective; pipeline
// stages are then placed on groups by simulated annealing.

#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lamosim/commmodel.hpp"
#include "lamosim/hwspec.hpp"

namespace lamosim::par {

enum class Phase { Prefill, Decode };
std::string_view to_string(Phase p);

/// A PE with its package-wide grid position.
struct PePoint {
  comm::MeshCoord coord;
  int gx = 0;
  int gy = 0;
};

/// All PEs of the given chiplets (indices into SystemSpec::chiplets).
std::vector<PePoint> pe_points(const hw::SystemSpec& sys, const std::vector<int>& chiplets);

struct TpGroup {
  std::vector<int> members;  ///< indices into the PE list, ascending
  int span = 0;              ///< bounding-box half perimeter
  double cx = 0;             ///< box midpoint
  double cy = 0;
  int center = -1;           ///< member closest to the midpoint
};

struct TpGrouping {
  int tp = 1;
  std::vector<TpGroup> groups;  ///< in chain order
  double objective = 0;         ///< sum of spans + w_inter * chain length
  bool exact = true;            ///< false if the node limit stopped the search
  std::int64_t nodes = 0;
};

struct TpGroupOptions {
  double w_inter = 0.0;
  std::int64_t node_limit = 2'000'000;
};

/// Smallest half-perimeter of any box holding `tp` cells.
int min_span(int tp);

/// Partitions floor(P / tp) groups of exactly tp PEs; leftover PEs stay idle.
/// Throws Infeasible when P < tp.
TpGrouping tp_group(const std::vector<PePoint>& pes, int tp, const TpGroupOptions& opt = {});

/// Chain length of groups in the given order (midpoint L1 distances).
double chain_length(const std::vector<TpGroup>& groups);

struct StageCosts {
  std::vector<double> layer_s;   ///< compute seconds per layer (already divided by TP)
  double allreduce_bytes = 0;    ///< payload of each of the two per-layer all-reduces
  double transfer_bytes = 0;     ///< activations passed between adjacent stages
};

struct AnnealOptions {
  double cooling = 0.95;
  int iters_per_temp = 200;
  double t0_fraction = 0.05;   ///< initial temperature relative to the greedy objective
  double t_min_fraction = 1e-4;
};

/// Contiguous, near-equal split of `n_layers` into `n_stages` ranges.
std::vector<std::pair<int, int>> split_layers(int n_layers, int n_stages);

struct StagePlacement {
  std::vector<int> stage_group;  ///< stage -> group index
  double objective = 0;
  double initial_objective = 0;
};

/// Stage-to-group cost model shared by the annealer and the oracles.
class PlacementProblem {
 public:
  PlacementProblem(const std::vector<PePoint>& pes, const TpGrouping& g, int n_stages,
                   const StageCosts& costs, const comm::Topology& topo);
  double stage_cost(int stage, int group) const;
  double transfer_cost(int from_group, int to_group) const;
  double objective(const std::vector<int>& stage_group) const;
  int n_stages() const { return n_stages_; }
  int n_groups() const { return n_groups_; }

 private:
  int n_stages_;
  int n_groups_;
  std::vector<std::vector<double>> stage_;     // [stage][group]
  std::vector<std::vector<double>> transfer_;  // [group][group]
};

/// Deterministic for a fixed seed; never worse than the greedy start.
/// Throws TooManyStages when there are fewer groups than stages.
StagePlacement place_stages(const PlacementProblem& prob, std::uint64_t seed,
                            const AnnealOptions& opt = {}, const std::vector<int>& banned = {});

struct KvRoute {
  int layer_begin = 0;
  int layer_end = 0;  ///< exclusive
  comm::MeshCoord src;
  comm::MeshCoord dst;
};

struct Instance {
  std::vector<int> stage_group;
};

struct MappingPlan {
  Phase phase = Phase::Prefill;
  int tp = 1;
  int pp = 1;
  std::vector<int> chiplets;      ///< pool used
  std::vector<PePoint> pes;       ///< pool PEs
  TpGrouping grouping;
  std::vector<std::pair<int, int>> stage_layers;  ///< [begin, end) per stage
  std::vector<Instance> instances;                ///< data-parallel replicas
  double objective = 0;

  std::vector<comm::MeshCoord> group_coords(int group) const;
  comm::MeshCoord center_coord(int group) const;
  int stage_of_layer(int layer) const;
};

struct PdPlan {
  MappingPlan prefill;
  MappingPlan decode;
  /// routes[prefill_instance] for each prefill instance: the decode
  /// instance it feeds and every shard-to-shard KV route.
  std::vector<int> decode_instance_of;
  std::vector<std::vector<KvRoute>> routes;
};

struct PlanOptions {
  double w_inter = 0.1;
  std::uint64_t seed = 1;
  std::int64_t prefill_kv_tokens = 8192;   ///< KV budget reserved per prefill group
  std::int64_t decode_kv_tokens = 16384;   ///< KV budget reserved per decode group
  int max_dp_prefill = 0;                  ///< 0 = as many replicas as fit
  int max_dp_decode = 0;
  std::int64_t probe_prefill_tokens = 1024;
  std::int64_t probe_decode_batch = 8;
  AnnealOptions anneal;
  std::int64_t node_limit = 200'000;
};

/// Plans one phase on its chiplet pool (prefill-role chiplets for prefill,
/// decode-role for decode, all chiplets if the role is absent).
MappingPlan plan_phase(const hw::SystemSpec& sys, const hw::ModelSpec& model, Phase phase, int tp,
                       int pp, const PlanOptions& opt = {});

/// Pairs prefill replicas with decode replicas and derives the KV routes.
PdPlan pair_plans(const hw::SystemSpec& sys, const hw::ModelSpec& model, MappingPlan prefill,
                  MappingPlan decode);

/// Prefill goes on prefill-role chiplets and decode on decode-role chiplets
/// (all chiplets if a role is absent). Throws CapacityExceeded naming the
/// first group that cannot hold its weights plus KV budget.
PdPlan build_pd_plan(const hw::SystemSpec& sys, const hw::ModelSpec& model, int tp_pre, int pp_pre,
                     int tp_dec, int pp_dec, const PlanOptions& opt = {});

/// Tokens of KV cache one replica can hold beside its weights: the minimum
/// over its stages of free group DRAM / KV bytes per token of the stage.
std::int64_t kv_pool_tokens(const MappingPlan& plan, const hw::SystemSpec& sys,
                            const hw::ModelSpec& model, int instance);

/// Throws PlanMismatch if the plan is inconsistent with system or model.
void validate_plan(const MappingPlan& plan, const hw::SystemSpec& sys, const hw::ModelSpec& model);

nlohmann::json to_json(const MappingPlan& p);
nlohmann::json to_json(const PdPlan& p);

}  // namespace lamosim::par

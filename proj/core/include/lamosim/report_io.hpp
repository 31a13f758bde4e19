// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0
//
// File writers for run outputs and the per-directory run manifest.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lamosim/d3flow.hpp"
#include "lamosim/dse.hpp"
#include "lamosim/servesim.hpp"

namespace lamosim::report {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr const char* kToolVersion = "0.1.0";

/// Pretty-printed with a trailing newline.
void write_json(const fs::path& path, const json& j);

json to_json(const sim::ServingMetrics& m);
/// One row per request.
void write_metrics_csv(const fs::path& path, const sim::ServingMetrics& m);

/// `pe,start_s,end_s,kind,energy_j`; gaps up to the makespan are written as
/// idle rows so every PE covers [0, makespan].
void write_activity_csv(const fs::path& path, const sim::ActivityTrace& a);

json to_json(const comp::GemmShape& s, const d3::DataflowResult& r);

/// Every (tiling, feasible policy) pair in search order. Returns the row count.
std::int64_t write_candidates_csv(const fs::path& path, const comp::GemmShape& s,
                                  const hw::ChipletSpec& c, double temp_c, int dtype_bytes,
                                  d3::TileGrid grid);

/// Front and near-front rows per capacity.
void write_pareto_csv(const fs::path& path, const dse::ChipletDseResult& r);
json to_json(const dse::ChipletDseResult& r);

void write_ranking_csv(const fs::path& path, const dse::SystemDseResult& r);
json to_json(const dse::SystemDseResult& r);

struct Manifest {
  std::string command;
  std::map<std::string, std::uint64_t> config_hashes;
  std::uint64_t seed = 0;
  json extra = json::object();  ///< command-specific counters
};

/// Hashes every regular file in `dir` (except the manifest and timing.json)
/// into `results` and writes `dir/manifest.json`. Wall time goes to
/// timing.json so the manifest stays byte-stable.
void write_manifest(const fs::path& dir, const Manifest& m);
void write_timing(const fs::path& dir, double wall_time_s);

/// Content hash of a file, as a 16-digit hex string.
std::string file_hash(const fs::path& path);

}  // namespace lamosim::report

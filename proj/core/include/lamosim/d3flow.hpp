// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Intra-PE dataflow search. One operand class is staged in SRAM per reuse
// policy (all three for ARU); the others stream straight from the DRAM stack
// and overlap with the array. Every (tiling, policy) pair is costed and the
// minimum is returned.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lamosim/compmodel.hpp"
#include "lamosim/hwspec.hpp"

namespace lamosim::d3 {

enum class ReusePolicy { IRU, WRU, ORU, ARU };
inline constexpr std::array<ReusePolicy, 4> kAllPolicies = {ReusePolicy::IRU, ReusePolicy::WRU,
                                                            ReusePolicy::ORU, ReusePolicy::ARU};

std::string_view to_string(ReusePolicy p);
ReusePolicy policy_from_string(std::string_view s);

enum class TileGrid { Pow2, AllDivisors };

struct Mapping {
  comp::TileMapping tile;
  ReusePolicy policy = ReusePolicy::IRU;
  bool operator==(const Mapping&) const = default;
};

struct MappingCost {
  double latency = 0;  ///< seconds
  double energy = 0;   ///< joules
  double compute_s = 0;
  double stream_s = 0;
  double staged_s = 0;
  double dram_bytes = 0;
  comp::ComputeCost compute;
};

struct DataflowResult {
  Mapping best;
  MappingCost cost;
  std::int64_t search_space_size = 0;  ///< tilings x policies considered
  std::int64_t evaluated = 0;          ///< feasible pairs costed
};

struct SearchOptions {
  TileGrid grid = TileGrid::Pow2;
  std::optional<ReusePolicy> only;  ///< fixed-policy baseline
  comp::ComputeLut* lut = nullptr;
};

/// Lexicographic (t_m, t_n, t_k); per dimension the powers of two below the
/// dim plus the dim itself (or all divisors).
std::vector<comp::TileMapping> enumerate_tilings(const comp::GemmShape& shape,
                                                 TileGrid grid = TileGrid::Pow2);

std::int64_t footprint_bytes(const comp::TileMapping& t, ReusePolicy p, int dtype_bytes);
std::vector<ReusePolicy> feasible_policies(const comp::TileMapping& t, std::int64_t s_buf,
                                           int dtype_bytes);

/// Cost of one mapping; the caller guarantees feasibility.
MappingCost evaluate(const comp::GemmShape& shape, const Mapping& m, const hw::PeSpec& pe,
                     const hw::DramStackSpec& dram, double clock_hz, double temp_c,
                     int dtype_bytes, comp::ComputeLut* lut = nullptr);

/// Strict ordering used to pick the winner: latency, energy, then mapping.
bool better(const MappingCost& a, const Mapping& ma, const MappingCost& b, const Mapping& mb);

/// Throws NoFeasibleMapping when nothing fits in SRAM.
DataflowResult search(const comp::GemmShape& shape, const hw::PeSpec& pe,
                      const hw::DramStackSpec& dram, double clock_hz, double temp_c,
                      int dtype_bytes, const SearchOptions& opt = {});

}  // namespace lamosim::d3

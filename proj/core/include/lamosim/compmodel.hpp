// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Systolic-array timing. Output-stationary accounting: every tile pass costs
// rows + cols + depth - 1 cycles (fill, stream, drain) on the array region it
// occupies. When a tile is shorter than the array, each instance takes whole
// base sub-arrays and independent instances (heads, batch rows) share a pass.

#pragma once

#include <cstdint>
#include <atomic>
#include <filesystem>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

#include "lamosim/hwspec.hpp"

namespace lamosim::comp {

enum class GemmKind { GEMM, GEMV };

struct GemmShape {
  std::int64_t m = 1;
  std::int64_t n = 1;
  std::int64_t k = 1;
  std::int64_t groups = 1;  ///< independent instances of the same (m, n, k)
  GemmKind kind = GemmKind::GEMM;

  static GemmShape make(std::int64_t m, std::int64_t n, std::int64_t k, std::int64_t groups = 1);
  double flops() const { return 2.0 * groups * m * n * k; }
  bool operator==(const GemmShape&) const = default;
};

struct TileMapping {
  std::int64_t t_m = 1;
  std::int64_t t_n = 1;
  std::int64_t t_k = 1;
  bool operator==(const TileMapping&) const = default;
};

/// Tile equal to the whole problem.
TileMapping whole(const GemmShape& s);

struct ComputeCost {
  std::int64_t cycles = 0;   ///< one core's array
  double utilization = 0;    ///< active cell-cycles / (cycles * rows * cols)
  double effective_cycles = 0;  ///< cycles / utilization, a scheduling weight
  double energy = 0;         ///< joules
  double flops = 0;
  bool operator==(const ComputeCost&) const = default;
};

/// Fraction of array rows doing work when `active_base_sas` sub-arrays each
/// hold an independent block of m rows.
double sa_utilization(const GemmShape& shape, const hw::PeSpec& pe, int active_base_sas);

/// Throws InfeasibleTiling for empty tiles or tiles larger than the problem.
ComputeCost gemm_cycles(const GemmShape& shape, const TileMapping& tiling, const hw::PeSpec& pe);

/// Elementwise work on the vector unit (lanes = vector_regs), one core.
double vpu_cycles(double elements, const hw::PeSpec& pe);

std::uint64_t pe_hash(const hw::PeSpec& pe);

struct MappingKey {
  GemmShape shape;
  TileMapping tiling;
  std::uint64_t pe_hash = 0;
  bool operator==(const MappingKey&) const = default;
};

struct MappingKeyHash {
  std::size_t operator()(const MappingKey& k) const noexcept;
};

/// Memo table for gemm_cycles. Many readers, serialized inserts.
class ComputeLut {
 public:
  ComputeCost get_or_compute(const GemmShape& shape, const TileMapping& tiling,
                             const hw::PeSpec& pe);
  std::int64_t hits() const { return hits_.load(); }
  std::int64_t misses() const { return misses_.load(); }
  std::size_t size() const;
  void clear();

  /// JSON cache; entries load only when the stored tag matches `tag`.
  void save(const std::filesystem::path& path, std::uint64_t tag) const;
  bool load(const std::filesystem::path& path, std::uint64_t tag);

 private:
  mutable std::shared_mutex mu_;
  std::unordered_map<MappingKey, ComputeCost, MappingKeyHash> table_;
  std::atomic<std::int64_t> hits_{0};
  std::atomic<std::int64_t> misses_{0};
};

}  // namespace lamosim::comp

// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "lamosim/hwspec.hpp"

namespace lamosim::mem {

enum class Access { Read, Write };

struct MemRequest {
  std::int64_t data_bits = 0;
  Access access = Access::Read;
  std::int64_t target_banks = 1;

  /// Throws Error(InvalidRequest) on a zero-size or zero-bank request.
  static MemRequest make(std::int64_t data_bits, std::int64_t target_banks,
                         Access access = Access::Read);
};

struct MemCost {
  std::int64_t commands = 0;
  double latency = 0;       ///< seconds
  double energy = 0;        ///< joules
  double effective_bw = 0;  ///< bytes/s
};

/// Bursts each bank must issue when the request is spread evenly; partial
/// bursts round up.
std::int64_t mem_commands(const MemRequest& req, const hw::DramStackSpec& d);

/// Fraction of time lost to refresh at `temp_c`. The refresh interval halves
/// per started 10 °C above the retention base and is flat below it.
double refresh_derate(const hw::DramStackSpec& d, double temp_c);

/// Closed-page streaming access: one activate/read/precharge fill, then
/// burst_len beats per command at the IO clock, plus TSV delay, inflated by
/// 1/(1 - derate). Throws RefreshStall when derate reaches 1.
MemCost mem_access_time(const MemRequest& req, const hw::DramStackSpec& d, double temp_c);

/// Layer static power plus refresh power scaled by the refresh rate
/// relative to the retention base.
double dram_static_w(const hw::DramStackSpec& d, double temp_c);

/// Convenience for byte-sized transfers over `banks` channels.
MemCost mem_access_bytes(double bytes, std::int64_t banks, const hw::DramStackSpec& d,
                         double temp_c);

}  // namespace lamosim::mem

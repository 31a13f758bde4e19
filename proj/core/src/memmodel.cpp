// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#include "lamosim/memmodel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lamosim::mem {

MemRequest MemRequest::make(std::int64_t data_bits, std::int64_t target_banks, Access access) {
  if (data_bits <= 0) throw Error(ErrorCode::InvalidRequest, "request size must be > 0 bits");
  if (target_banks < 1) throw Error(ErrorCode::InvalidRequest, "target_banks must be >= 1");
  return MemRequest{data_bits, access, target_banks};
}

std::int64_t mem_commands(const MemRequest& req, const hw::DramStackSpec& d) {
  const std::int64_t per_cmd = req.target_banks * d.n_io * d.burst_len;
  return std::max<std::int64_t>(1, (req.data_bits + per_cmd - 1) / per_cmd);
}

double refresh_derate(const hw::DramStackSpec& d, double temp_c) {
  const double above = temp_c - d.retention_base_temp_c;
  const double bins = std::max(0.0, std::ceil(above / 10.0));
  const double t_rfi = d.t_rfi_base_ns * std::exp2(-bins);
  return d.t_rfc_ns / t_rfi;
}

MemCost mem_access_time(const MemRequest& req, const hw::DramStackSpec& d, double temp_c) {
  if (req.data_bits <= 0 || req.target_banks < 1) {
    throw Error(ErrorCode::InvalidRequest, "malformed memory request");
  }
  if (req.target_banks > d.total_banks()) {
    throw Error(ErrorCode::InvalidRequest, "target_banks exceeds banks in the stack");
  }
  if (!(temp_c >= -40.0 && temp_c <= 125.0)) {
    throw Error(ErrorCode::InvalidRequest, "temperature out of range: " + std::to_string(temp_c));
  }
  const double derate = refresh_derate(d, temp_c);
  if (derate >= 1.0) {
    throw Error(ErrorCode::RefreshStall,
                "refresh consumes the whole interval at " + std::to_string(temp_c) + " C");
  }
  MemCost c;
  c.commands = mem_commands(req, d);
  const double fill_s = (d.t_rcd_ns + d.t_cas_ns + d.t_rp_ns + d.tsv_delay_ns) * 1e-9;
  const double stream_s = static_cast<double>(d.burst_len) * c.commands / d.io_clock_hz;
  c.latency = (fill_s + stream_s) / (1.0 - derate);
  const double refresh_share = d.refresh_energy_per_cmd_pj * derate * c.commands *
                               static_cast<double>(req.target_banks);
  c.energy = (static_cast<double>(req.data_bits) * d.energy_per_bit_pj + refresh_share) * 1e-12;
  c.effective_bw = static_cast<double>(req.data_bits) / 8.0 / c.latency;
  return c;
}

double dram_static_w(const hw::DramStackSpec& d, double temp_c) {
  const double ratio = refresh_derate(d, temp_c) / (d.t_rfc_ns / d.t_rfi_base_ns);
  return d.n_layer * d.static_power_w_per_layer + d.refresh_power_w * ratio;
}

MemCost mem_access_bytes(double bytes, std::int64_t banks, const hw::DramStackSpec& d,
                         double temp_c) {
  const auto bits = static_cast<std::int64_t>(std::ceil(std::max(1.0, bytes) * 8.0));
  return mem_access_time(MemRequest::make(bits, std::clamp<std::int64_t>(banks, 1, d.total_banks())),
                         d, temp_c);
}

}  // namespace lamosim::mem

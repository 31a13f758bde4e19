// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#include "lamosim/hwspec.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

namespace lamosim::hw {

namespace {

void require(std::vector<ValidationIssue>& out, bool cond, ErrorCode code,
             const std::string& subject, const std::string& msg) {
  if (!cond) out.push_back({code, subject, msg});
}

double chiplet_area_mm2(const ChipletSpec& c) {
  const double sram_mib = static_cast<double>(c.pe.sram_bytes) / (1024.0 * 1024.0);
  const double per_core = c.pe.core_area_mm2 + sram_mib * c.pe.sram_area_mm2_per_mib;
  return c.n_pe() * (c.pe.n_core * per_core + c.pe.pe_fixed_area_mm2);
}

}  // namespace

std::string_view to_string(ChipletRole r) {
  return r == ChipletRole::Prefill ? "prefill" : "decode";
}

std::string_view to_string(AttnVariant a) { return a == AttnVariant::MHA ? "MHA" : "GQA"; }

std::int64_t ModelSpec::weight_bytes_per_layer() const {
  const std::int64_t q = std::int64_t{d_model} * n_heads * d_head;
  const std::int64_t kv = std::int64_t{2} * d_model * n_kv_heads * d_head;
  const std::int64_t o = std::int64_t{n_heads} * d_head * d_model;
  const std::int64_t ffn = std::int64_t{ffn_gated ? 3 : 2} * d_model * d_ffn;
  return (q + kv + o + ffn) * dtype_bytes;
}

ChipletMetrics derive_chiplet_metrics(const ChipletSpec& c) {
  ChipletMetrics m;
  // 2 FLOPs per MAC, every cell of every core's array busy each cycle.
  m.peak_flops = static_cast<double>(c.n_pe()) * c.pe.n_core * 2.0 * c.pe.sa_rows *
                 c.pe.sa_cols * c.clock_hz * c.flops_calibration;
  m.peak_bw = c.dram.peak_bw();
  m.capacity = static_cast<double>(c.dram.capacity_bytes);
  m.area_mm2 = chiplet_area_mm2(c);
  const double compute_w = m.peak_flops * c.pe.pj_per_flop * 1e-12;
  const double dram_w = m.peak_bw * 8.0 * c.dram.energy_per_bit_pj * 1e-12;
  const double static_w =
      c.leak_base_w() + c.dram.n_layer * c.dram.static_power_w_per_layer + c.dram.refresh_power_w;
  m.peak_power = compute_w + dram_w + static_w;
  m.arithmetic_intensity_knee = m.peak_bw > 0 ? m.peak_flops / m.peak_bw : 0.0;
  return m;
}

std::vector<ValidationIssue> validate_chiplet(const ChipletSpec& c) {
  std::vector<ValidationIssue> out;
  const auto& s = c.name;
  const auto bad = ErrorCode::InvalidConfig;
  require(out, c.pe_rows >= 1 && c.pe_cols >= 1, bad, s, "pe grid must be at least 1x1");
  require(out, c.pe.n_core >= 1, bad, s, "n_core must be >= 1");
  require(out, c.pe.sa_rows >= 1 && c.pe.sa_cols >= 1, bad, s, "systolic array dims must be >= 1");
  require(out, c.pe.base_sa_rows >= 1 && c.pe.sa_rows % std::max(1, c.pe.base_sa_rows) == 0, bad,
          s, "base_sa_rows must divide sa_rows");
  require(out, c.pe.sram_bytes > 0, bad, s, "sram capacity must be > 0");
  require(out, c.pe.n_mc >= 1, bad, s, "n_mc must be >= 1");
  require(out, c.pe.vector_regs >= 1, bad, s, "vector_regs must be >= 1");
  require(out, c.clock_hz > 0, bad, s, "clock must be > 0");
  require(out, c.flops_calibration > 0, bad, s, "flops calibration must be > 0");

  const auto& d = c.dram;
  require(out, d.n_layer >= 1 && d.n_bank >= 1 && d.n_io >= 1 && d.burst_len >= 1, bad, s,
          "DRAM counts must be >= 1");
  require(out, d.energy_per_bit_pj > 0, bad, s, "energy_per_bit must be > 0");
  require(out, d.io_clock_hz > 0, bad, s, "io_clock must be > 0");
  require(out, d.t_rfc_ns < d.t_rfi_base_ns, bad, s, "t_rfc must be below t_rfi_base");
  require(out, d.t_rcd_ns >= 0 && d.t_cas_ns >= 0 && d.t_rp_ns >= 0 && d.tsv_delay_ns >= 0, bad,
          s, "DRAM timings must be non-negative");
  require(out, d.capacity_bytes == d.total_banks() * d.bank_capacity_bytes,
          ErrorCode::InconsistentCapacity, s,
          "capacity != n_layer * n_bank * bank capacity");
  require(out, std::int64_t{c.n_pe()} * c.pe.n_mc <= d.total_banks(),
          ErrorCode::InconsistentCapacity, s, "more memory controllers than DRAM banks");

  if (out.empty()) {
    const auto m = derive_chiplet_metrics(c);
    require(out, m.area_mm2 <= c.area_budget_mm2, ErrorCode::AreaExceeded, s,
            "derived area " + std::to_string(m.area_mm2) + " mm2 exceeds budget " +
                std::to_string(c.area_budget_mm2));
    require(out, m.peak_power <= c.tdp_w, ErrorCode::PowerExceeded, s,
            "derived peak power " + std::to_string(m.peak_power) + " W exceeds tdp " +
                std::to_string(c.tdp_w));
  }
  return out;
}

std::vector<ValidationIssue> validate_model(const ModelSpec& m) {
  std::vector<ValidationIssue> out;
  const auto bad = ErrorCode::InvalidConfig;
  require(out, m.n_layers >= 1 && m.n_heads >= 1 && m.n_kv_heads >= 1 && m.d_head >= 1 &&
                   m.d_model >= 1 && m.d_ffn >= 1 && m.dtype_bytes >= 1,
          bad, m.name, "model dims must be >= 1");
  if (!out.empty()) return out;
  require(out, m.attn_variant != AttnVariant::MHA || m.n_kv_heads == m.n_heads, bad, m.name,
          "MHA requires n_kv_heads == n_heads");
  require(out, m.d_model == m.n_heads * m.d_head, bad, m.name, "d_model != n_heads * d_head");
  require(out, m.n_heads % m.n_kv_heads == 0, bad, m.name, "n_kv_heads must divide n_heads");
  return out;
}

SystemValidation validate_system(const SystemSpec& spec) {
  SystemValidation result;
  auto& out = result.issues;
  const auto bad = ErrorCode::InvalidConfig;
  if (spec.chiplets.empty()) {
    out.push_back({ErrorCode::InconsistentCapacity, spec.name, "empty mesh"});
    return result;
  }
  std::set<std::pair<int, int>> seen;
  std::set<std::string> names;
  double total_peak = 0.0;
  std::vector<ChipletMetrics> metrics;
  for (const auto& pc : spec.chiplets) {
    require(out, pc.x >= 0 && pc.y >= 0, bad, pc.chiplet.name, "negative placement coordinate");
    require(out, seen.insert({pc.x, pc.y}).second, bad, pc.chiplet.name,
            "placement coordinate already occupied");
    require(out, names.insert(pc.chiplet.name).second, bad, pc.chiplet.name,
            "duplicate chiplet name");
    auto issues = validate_chiplet(pc.chiplet);
    out.insert(out.end(), issues.begin(), issues.end());
    metrics.push_back(derive_chiplet_metrics(pc.chiplet));
    total_peak += metrics.back().peak_power;
  }
  require(out, spec.noc_bandwidth > 0 && spec.nop_bandwidth > 0, bad, spec.name,
          "bandwidths must be > 0");
  require(out, spec.alpha_noc >= 0 && spec.alpha_nop >= 0 && spec.beta_noc >= 0 &&
                   spec.beta_nop >= 0,
          bad, spec.name, "link parameters must be non-negative");
  require(out, spec.edge_hops >= 0, bad, spec.name, "edge_hops must be >= 0");
  const auto& cool = spec.cooling;
  require(out, !cool.flow_levels.empty(), bad, spec.name, "cooling needs at least one flow level");
  for (std::size_t i = 1; i < cool.flow_levels.size(); ++i) {
    require(out,
            cool.flow_levels[i].resistance_scale < cool.flow_levels[i - 1].resistance_scale &&
                cool.flow_levels[i].pump_power_w > cool.flow_levels[i - 1].pump_power_w,
            bad, spec.name, "flow levels must lower resistance and raise pump power");
  }
  require(out, total_peak <= spec.rack_power_limit_w, ErrorCode::PowerExceeded, spec.name,
          "summed peak power " + std::to_string(total_peak) + " W exceeds rack limit");
  if (out.empty()) result.system = ValidatedSystem{spec, std::move(metrics)};
  return result;
}

std::vector<ValidationIssue> check_model_fits(const SystemSpec& spec, const ModelSpec& m) {
  std::vector<ValidationIssue> out = validate_model(m);
  std::int64_t total = 0;
  for (const auto& pc : spec.chiplets) total += pc.chiplet.dram.capacity_bytes;
  require(out, m.weight_bytes() <= total, ErrorCode::CapacityExceeded, m.name,
          "weight footprint exceeds total system DRAM");
  return out;
}

double leakage_w(const ChipletSpec& c, const CoolingSpec& cool, double temp_c) {
  const double dt = temp_c - cool.leak_ref_c;
  if (cool.leakage_model == LeakageModel::Exponential) {
    const double rate = std::log1p(cool.leak_coeff_per_c * 40.0) / 40.0;
    return c.leak_base_w() * std::exp(rate * dt);
  }
  return c.leak_base_w() * std::max(0.0, 1.0 + cool.leak_coeff_per_c * dt);
}

void throw_if_issues(const std::vector<ValidationIssue>& issues) {
  if (issues.empty()) return;
  const auto& first = issues.front();
  std::string msg = first.subject + ": " + first.message;
  if (issues.size() > 1) msg += " (+" + std::to_string(issues.size() - 1) + " more)";
  throw Error(first.code, msg);
}

}  // namespace lamosim::hw

// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Hardware and model descriptions shared by every other module. All types are
// plain values; once validated they are treated as immutable.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lamosim/error.hpp"

namespace lamosim::hw {

enum class ChipletRole { Prefill, Decode };
enum class AttnVariant { MHA, GQA };
enum class LeakageModel { Linear, Exponential };

/// Die-stacked DRAM organization and timing. Timing fields are in
/// nanoseconds, matching the `*_ns` keys of the JSON schema.
struct DramStackSpec {
  int n_layer = 4;
  int n_bank = 64;    ///< banks per layer
  int n_io = 256;     ///< TSV data bits per bank channel
  int burst_len = 8;  ///< beats per command
  std::int64_t page_size = 2048;  ///< bytes; carried for the closed-page policy
  std::int64_t bank_capacity_bytes = std::int64_t{128} << 20;
  std::int64_t capacity_bytes = std::int64_t{32} << 30;
  double t_rcd_ns = 2.5;
  double t_cas_ns = 2.5;
  double t_rp_ns = 2.5;
  double t_rfc_ns = 130.65;
  double t_rfi_base_ns = 3900.0;  ///< refresh interval at or below retention_base_temp_c
  double io_clock_hz = 1.294e9;
  double energy_per_bit_pj = 0.7;
  double retention_base_temp_c = 85.0;
  double tsv_delay_ns = 0.5;
  double refresh_energy_per_cmd_pj = 0.0;
  double static_power_w_per_layer = 10.5;
  double refresh_power_w = 2.0;  ///< refresh power at or below the retention base

  std::int64_t total_banks() const { return std::int64_t{n_layer} * n_bank; }
  /// Aggregate stack bandwidth in bytes/s.
  double peak_bw() const {
    return static_cast<double>(total_banks()) * n_io * io_clock_hz / 8.0;
  }
  bool operator==(const DramStackSpec&) const = default;
};

struct PeSpec {
  int n_core = 16;
  int sa_rows = 32;
  int sa_cols = 32;
  int base_sa_rows = 8;
  std::int64_t sram_bytes = 256 * 1024;  ///< per core
  int sram_banks = 8;
  int vector_regs = 32;  ///< also used as VPU lane count
  int noc_flit_bits = 512;
  int n_mc = 16;  ///< DRAM channels (banks) owned by this PE
  double pj_per_flop = 0.5;
  double sram_pj_per_bit = 0.3;
  double pe_leak_w = 4.0;    ///< router/controller/MC leakage at the reference temperature
  double core_leak_w = 0.25;
  double core_area_mm2 = 1.6;
  double sram_area_mm2_per_mib = 1.2;
  double pe_fixed_area_mm2 = 3.7;

  int n_base_sas() const { return sa_rows / base_sa_rows; }
  bool operator==(const PeSpec&) const = default;
};

struct ChipletSpec {
  std::string name = "chiplet";
  ChipletRole role = ChipletRole::Prefill;
  int pe_rows = 4;
  int pe_cols = 4;
  PeSpec pe;
  DramStackSpec dram;
  double clock_hz = 800e6;
  double area_budget_mm2 = 650.0;
  double tdp_w = 500.0;
  double flops_calibration = 1.0;

  int n_pe() const { return pe_rows * pe_cols; }
  std::int64_t dram_per_pe_bytes() const { return dram.capacity_bytes / n_pe(); }
  double leak_base_w() const { return n_pe() * (pe.pe_leak_w + pe.n_core * pe.core_leak_w); }
  bool operator==(const ChipletSpec&) const = default;
};

struct ChipletMetrics {
  double peak_flops = 0;  ///< FLOP/s
  double peak_bw = 0;     ///< bytes/s
  double capacity = 0;    ///< bytes
  double peak_power = 0;  ///< W
  double arithmetic_intensity_knee = 0;  ///< FLOP/byte
  double area_mm2 = 0;
};

struct FlowLevel {
  double resistance_scale = 1.0;  ///< multiplies the cold-plate resistance
  double pump_power_w = 0.0;
  bool operator==(const FlowLevel&) const = default;
};

struct CoolingSpec {
  double ambient_c = 45.0;
  double r_coldplate = 0.08;  ///< °C/W, cold plate to top DRAM layer at flow scale 1
  double r_dram_layer = 0.012;  ///< °C/W between adjacent DRAM layers
  double r_bond = 0.01;  ///< °C/W, bottom DRAM layer to logic die
  double r_lateral = 0.5;  ///< °C/W between logic dies of adjacent chiplets
  std::vector<FlowLevel> flow_levels = {{1.6, 10.0}, {1.0, 25.0}, {0.7, 60.0}};
  double t_limit_c = 95.0;
  double leak_coeff_per_c = 0.005;
  double leak_ref_c = 65.0;
  LeakageModel leakage_model = LeakageModel::Linear;
  double c_logic_j_per_k = 40.0;
  double c_layer_j_per_k = 6.0;
  bool calibration_required = true;
  bool operator==(const CoolingSpec&) const = default;
};

struct PlacedChiplet {
  int x = 0;
  int y = 0;
  ChipletSpec chiplet;
  bool operator==(const PlacedChiplet&) const = default;
};

struct SystemSpec {
  std::string name = "system";
  std::vector<PlacedChiplet> chiplets;
  double noc_bandwidth = 200e9;  ///< bytes/s per link
  double nop_bandwidth = 800e9;  ///< bytes/s per edge
  double alpha_noc = 5e-12;      ///< s/byte
  double alpha_nop = 1.25e-12;
  double beta_noc = 2.5e-9;  ///< s/hop
  double beta_nop = 10e-9;
  int edge_hops = 1;  ///< NoC hops from an edge PE to its D2D port
  double noc_pj_per_byte_hop = 0.5;
  double nop_pj_per_byte_hop = 2.0;
  double rack_power_limit_w = 10000.0;
  CoolingSpec cooling;
  bool operator==(const SystemSpec&) const = default;
};

struct ModelSpec {
  std::string name = "model";
  int n_layers = 32;
  int n_heads = 32;
  int n_kv_heads = 8;
  int d_head = 128;
  int d_model = 4096;
  int d_ffn = 14336;
  AttnVariant attn_variant = AttnVariant::GQA;
  int dtype_bytes = 2;
  bool ffn_gated = true;

  std::int64_t weight_bytes_per_layer() const;
  std::int64_t weight_bytes() const { return weight_bytes_per_layer() * n_layers; }
  /// K and V for one token in one layer.
  std::int64_t kv_bytes_per_token_layer() const {
    return std::int64_t{2} * n_kv_heads * d_head * dtype_bytes;
  }
  std::int64_t kv_bytes(std::int64_t tokens, int layers) const {
    return kv_bytes_per_token_layer() * tokens * layers;
  }
  bool operator==(const ModelSpec&) const = default;
};

struct ValidationIssue {
  ErrorCode code;
  std::string subject;  ///< offending chiplet (or model) name
  std::string message;
};

struct ValidatedSystem {
  SystemSpec spec;
  std::vector<ChipletMetrics> metrics;  ///< parallel to spec.chiplets
};

struct SystemValidation {
  std::optional<ValidatedSystem> system;
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
};

ChipletMetrics derive_chiplet_metrics(const ChipletSpec& c);

std::vector<ValidationIssue> validate_chiplet(const ChipletSpec& c);
std::vector<ValidationIssue> validate_model(const ModelSpec& m);

/// Checks every invariant and packaging limit; returns either the spec with
/// derived metrics or the complete list of violations.
SystemValidation validate_system(const SystemSpec& spec);

/// Rejects models whose weights exceed the total DRAM of the system.
std::vector<ValidationIssue> check_model_fits(const SystemSpec& spec, const ModelSpec& m);

/// Logic leakage of one chiplet at `temp_c`: linear in temperature by
/// default, or exponential with the same slope at 40 °C above the reference.
double leakage_w(const ChipletSpec& c, const CoolingSpec& cool, double temp_c);

/// Throws Error(InvalidConfig) carrying the first issue if any are present.
void throw_if_issues(const std::vector<ValidationIssue>& issues);

std::string_view to_string(ChipletRole r);
std::string_view to_string(AttnVariant a);

}  // namespace lamosim::hw

// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Compact thermal network. Each chiplet is a ladder from the coolant through
// its DRAM layers and the bond to the logic die; logic dies of neighbouring
// chiplets are coupled laterally.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lamosim/hwspec.hpp"
#include "lamosim/parmap.hpp"
#include "lamosim/servesim.hpp"

namespace lamosim::thermal {

struct ThermalState {
  std::vector<double> logic_c;  ///< per chiplet
  std::vector<double> dram_c;   ///< hottest DRAM layer per chiplet
  std::vector<std::vector<double>> layers_c;  ///< per chiplet, bottom layer first
  double ambient_c = 45;
  int flow_level = 0;
  double pump_w = 0;

  double t_max() const;
};

/// Per-chiplet heat sources in watts.
struct ChipletPower {
  std::vector<double> logic_w;
  std::vector<double> dram_w;  ///< spread evenly over the layers
};

struct PowerBlock {
  std::string name;
  int chiplet = 0;
  bool dram = false;
};

/// Binned power per block: dynamic from activity energy, static from
/// temperature.
struct PowerTrace {
  std::vector<PowerBlock> blocks;
  double bin_s = 0;
  double duration_s = 0;
  std::vector<std::vector<double>> dynamic_w;  ///< [block][bin]
  std::vector<double> static_w;                ///< [block]
  double pump_w = 0;

  /// Time-averaged per-chiplet sources (for the steady solve).
  ChipletPower average() const;
  /// Integral of all block power plus pump power over the duration.
  double energy_j() const;
};

/// Static logic power (leakage) and DRAM static/refresh at the given state.
PowerTrace power_from_activity(const sim::ActivityTrace& act, const hw::SystemSpec& sys,
                               const ThermalState& temps, double bin_s);

/// State with every node at ambient.
ThermalState ambient_state(const hw::SystemSpec& sys);

/// Throws SingularNetwork for negative or non-finite resistances.
ThermalState solve_steady(const hw::SystemSpec& sys, const ChipletPower& p, int flow_level);

/// Lowest flow level keeping the hottest node at or below the limit; the
/// highest level if none does.
ThermalState solve_with_flow_control(const hw::SystemSpec& sys, const ChipletPower& p);

/// Explicit Euler over the binned trace, starting from `init`.
/// Returns one state per bin.
std::vector<ThermalState> solve_transient(const hw::SystemSpec& sys, const PowerTrace& trace,
                                          const ThermalState& init, int flow_level);

struct FixedPointOptions {
  double relaxation = 0.5;
  double tolerance_c = 0.5;
  int max_iterations = 20;
  double bin_s = 0.0;  ///< 0 picks makespan / 200
  double initial_c = 65.0;
};

struct FixedPointResult {
  sim::SimResult sim;
  ThermalState state;           ///< solved at the final iteration
  std::vector<double> sim_temps;  ///< DRAM temps the final simulation used
  PowerTrace power;
  int iterations = 0;
  std::vector<double> delta_history;  ///< max |dT| per iteration
  int simulations = 0;          ///< distinct simulator runs
};

/// Alternates simulate -> power -> steady solve with under-relaxation until
/// the largest temperature change drops below tolerance. Throws
/// NonConvergence with the delta history otherwise.
FixedPointResult thermal_fixed_point(const hw::SystemSpec& sys, const hw::ModelSpec& model,
                                     const par::PdPlan& plan, const trace::Trace& tr,
                                     const sim::SchedulerConfig& cfg,
                                     const FixedPointOptions& opt = {});

/// CSV `block,time_s,power_w,temp_c`; temperatures from `states` (one per
/// bin) or the steady state when `states` is empty.
void write_thermal_csv(const std::filesystem::path& path, const PowerTrace& p,
                       const ThermalState& steady, const std::vector<ThermalState>& states = {});

}  // namespace lamosim::thermal

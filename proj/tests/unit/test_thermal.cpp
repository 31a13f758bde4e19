// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>

#include "lamosim/config_io.hpp"
#include "lamosim/thermal.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace lamosim;

namespace {

const fs::path kConfigs = LAMOSIM_CONFIG_DIR;

hw::SystemSpec row_of(int n) {
  hw::SystemSpec s;
  for (int i = 0; i < n; ++i) {
    hw::ChipletSpec c;
    c.name = "c" + std::to_string(i);
    s.chiplets.push_back({i, 0, c});
  }
  return s;
}

}  // namespace

TEST(Thermal, SingleStackMatchesLadder) {
  const auto sys = row_of(1);
  const auto& cool = sys.cooling;
  for (int lvl = 0; lvl < 3; ++lvl) {
    const auto st = thermal::solve_steady(sys, {{300.0}, {40.0}}, lvl);
    const double plate = cool.r_coldplate * cool.flow_levels[lvl].resistance_scale;
    const auto want = oracle::ladder_temps(cool.ambient_c, plate, cool.r_dram_layer, cool.r_bond,
                                           4, 300.0, 40.0);
    EXPECT_NEAR(st.logic_c[0], want[0], 1e-9);
    ASSERT_EQ(st.layers_c[0].size(), 4u);
    for (int l = 0; l < 4; ++l) EXPECT_NEAR(st.layers_c[0][l], want[l + 1], 1e-9);
    EXPECT_NEAR(st.dram_c[0], want[1], 1e-9);  // bottom layer is hottest
  }
}

TEST(Thermal, CoupledChipletsMatchDenseSolve) {
  const auto sys = row_of(3);
  const auto& c = sys.cooling;
  const std::vector<double> logic = {250, 50, 120}, dram = {30, 10, 60};
  const auto st = thermal::solve_steady(sys, {logic, dram}, 1);

  // Independent nodal analysis: 5 nodes per chiplet, logic first.
  const int per = 5, n = 3 * per;
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  std::vector<double> b(n, 0.0);
  auto link = [&](int i, int j, double r) {
    a[i][i] += 1 / r, a[j][j] += 1 / r, a[i][j] -= 1 / r, a[j][i] -= 1 / r;
  };
  const double plate = c.r_coldplate * c.flow_levels[1].resistance_scale;
  for (int k = 0; k < 3; ++k) {
    const int base = k * per;
    link(base, base + 1, c.r_bond);
    for (int l = 1; l < 4; ++l) link(base + l, base + l + 1, c.r_dram_layer);
    a[base + 4][base + 4] += 1 / plate;
    b[base + 4] += c.ambient_c / plate;
    b[base] += logic[k];
    for (int l = 1; l <= 4; ++l) b[base + l] += dram[k] / 4;
  }
  link(0, per, c.r_lateral);
  link(per, 2 * per, c.r_lateral);
  const auto x = oracle::solve_dense(a, b);
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(st.logic_c[k], x[k * per], 1e-8);
    for (int l = 0; l < 4; ++l) EXPECT_NEAR(st.layers_c[k][l], x[k * per + 1 + l], 1e-8);
  }
  // Heat flows sideways into the cooler middle chiplet.
  const auto alone = thermal::solve_steady(row_of(1), {{50.0}, {10.0}}, 1);
  EXPECT_GT(st.logic_c[1], alone.logic_c[0]);
}

TEST(Thermal, EnergyBalance) {
  const auto sys = row_of(2);
  const auto st = thermal::solve_steady(sys, {{200, 100}, {20, 20}}, 0);
  const double plate = sys.cooling.r_coldplate * sys.cooling.flow_levels[0].resistance_scale;
  double out = 0;
  for (const auto& l : st.layers_c) out += (l.back() - sys.cooling.ambient_c) / plate;
  EXPECT_NEAR(out, 340.0, 1e-6);
}

TEST(Thermal, MonotonicInPowerAndFlow) {
  const auto sys = row_of(1);
  double prev = 0;
  for (double w = 0; w <= 500; w += 50) {
    const auto st = thermal::solve_steady(sys, {{w}, {20.0}}, 1);
    EXPECT_GE(st.t_max(), prev);
    prev = st.t_max();
  }
  const thermal::ChipletPower p{{400.0}, {30.0}};
  EXPECT_GT(thermal::solve_steady(sys, p, 0).t_max(), thermal::solve_steady(sys, p, 2).t_max());
}

TEST(Thermal, FlowControlPicksLowestSufficientLevel) {
  auto sys = row_of(1);
  const thermal::ChipletPower p{{400.0}, {30.0}};
  const auto t0 = thermal::solve_steady(sys, p, 0).t_max();
  const auto t1 = thermal::solve_steady(sys, p, 1).t_max();
  sys.cooling.t_limit_c = (t0 + t1) / 2;
  const auto st = thermal::solve_with_flow_control(sys, p);
  EXPECT_EQ(st.flow_level, 1);
  EXPECT_DOUBLE_EQ(st.pump_w, sys.cooling.flow_levels[1].pump_power_w);
  sys.cooling.t_limit_c = 0;
  EXPECT_EQ(thermal::solve_with_flow_control(sys, p).flow_level, 2);
}

TEST(Thermal, TransientApproachesSteadyState) {
  const auto sys = row_of(2);
  thermal::PowerTrace tr;
  tr.blocks = {{"l0", 0, false}, {"d0", 0, true}, {"l1", 1, false}, {"d1", 1, true}};
  tr.bin_s = 5.0;
  tr.duration_s = 400.0;
  tr.dynamic_w.assign(4, std::vector<double>(80, 0.0));
  tr.static_w = {150, 20, 60, 10};
  const auto states = thermal::solve_transient(sys, tr, thermal::ambient_state(sys), 1);
  ASSERT_EQ(states.size(), 80u);
  const auto steady = thermal::solve_steady(sys, {{150, 60}, {20, 10}}, 1);
  EXPECT_NEAR(states.back().logic_c[0], steady.logic_c[0], 0.05);
  EXPECT_NEAR(states.back().logic_c[1], steady.logic_c[1], 0.05);
  for (std::size_t i = 1; i < states.size(); ++i) {
    EXPECT_GE(states[i].logic_c[0], states[i - 1].logic_c[0] - 1e-9);
  }
}

TEST(Thermal, SingularNetworkRejected) {
  auto sys = row_of(1);
  sys.cooling.r_bond = -1;
  try {
    thermal::solve_steady(sys, {{1.0}, {1.0}}, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularNetwork);
  }
}

TEST(Thermal, FixedPointConvergesAndDecodeRunsHotter) {
  const auto sys = config::load_system(kConfigs / "system.json");
  const auto model = config::load_model(kConfigs / "model_llama3_8b.json");
  const auto plan = par::build_pd_plan(sys, model, 8, 1, 4, 2);
  const auto tr = trace::gen_trace(trace::Source::Code, 2, 24, 1);
  sim::SchedulerConfig cfg;
  const auto r = thermal::thermal_fixed_point(sys, model, plan, tr, cfg);
  ASSERT_FALSE(r.delta_history.empty());
  EXPECT_LT(r.delta_history.back(), 0.5);
  EXPECT_LE(r.iterations, 20);
  double pc = 0, dc = 0;
  for (std::size_t i = 0; i < sys.chiplets.size(); ++i) {
    auto& v = sys.chiplets[i].chiplet.role == hw::ChipletRole::Decode ? dc : pc;
    v = std::max(v, r.state.dram_c[i]);
  }
  EXPECT_GE(dc, pc);
  EXPECT_GT(r.power.energy_j(), 0);
}

TEST(Thermal, TooFewIterationsFails) {
  const auto sys = config::load_system(kConfigs / "system.json");
  const auto model = config::load_model(kConfigs / "model_llama3_8b.json");
  const auto plan = par::build_pd_plan(sys, model, 8, 1, 4, 2);
  const auto tr = trace::gen_trace(trace::Source::Code, 2, 8, 1);
  thermal::FixedPointOptions opt;
  opt.max_iterations = 1;
  opt.tolerance_c = 1e-9;
  try {
    thermal::thermal_fixed_point(sys, model, plan, tr, {}, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonConvergence);
  }
}

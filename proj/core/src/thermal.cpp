// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#include "lamosim/thermal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include <Eigen/Dense>

#include "lamosim/memmodel.hpp"

namespace lamosim::thermal {

namespace {

// A zero resistance is a near-short; negative or non-finite ones are errors.
double conductance(double r, const char* what) {
  if (!std::isfinite(r) || r < 0) {
    throw Error(ErrorCode::SingularNetwork, std::string("invalid thermal resistance ") + what);
  }
  return r == 0 ? 1e9 : 1.0 / r;
}

struct Network {
  std::vector<int> base;  // logic node index per chiplet; layers follow
  int n = 0;
  Eigen::MatrixXd g;
  Eigen::VectorXd g_amb;
  Eigen::VectorXd cap;
};

Network build(const hw::SystemSpec& sys, int flow_level) {
  const auto& cool = sys.cooling;
  if (cool.flow_levels.empty()) throw Error(ErrorCode::InvalidConfig, "no cooling flow levels");
  const int lvl = std::clamp(flow_level, 0, static_cast<int>(cool.flow_levels.size()) - 1);
  Network net;
  for (const auto& pc : sys.chiplets) {
    net.base.push_back(net.n);
    net.n += 1 + pc.chiplet.dram.n_layer;
  }
  net.g = Eigen::MatrixXd::Zero(net.n, net.n);
  net.g_amb = Eigen::VectorXd::Zero(net.n);
  net.cap = Eigen::VectorXd::Zero(net.n);
  auto link = [&](int a, int b, double gab) {
    net.g(a, a) += gab;
    net.g(b, b) += gab;
    net.g(a, b) -= gab;
    net.g(b, a) -= gab;
  };
  const double g_cp = conductance(cool.r_coldplate * cool.flow_levels[static_cast<std::size_t>(lvl)].resistance_scale,
                                  "coldplate");
  const double g_layer = conductance(cool.r_dram_layer, "dram layer");
  const double g_bond = conductance(cool.r_bond, "bond");
  for (std::size_t i = 0; i < sys.chiplets.size(); ++i) {
    const int logic = net.base[i];
    const int layers = sys.chiplets[i].chiplet.dram.n_layer;
    net.cap(logic) = cool.c_logic_j_per_k;
    link(logic, logic + 1, g_bond);
    for (int l = 1; l <= layers; ++l) {
      net.cap(logic + l) = cool.c_layer_j_per_k;
      if (l < layers) link(logic + l, logic + l + 1, g_layer);
    }
    net.g(logic + layers, logic + layers) += g_cp;
    net.g_amb(logic + layers) = g_cp;
  }
  const double g_lat = sys.chiplets.size() > 1 ? conductance(cool.r_lateral, "lateral") : 0.0;
  for (std::size_t i = 0; i < sys.chiplets.size(); ++i) {
    for (std::size_t j = i + 1; j < sys.chiplets.size(); ++j) {
      const auto& a = sys.chiplets[i];
      const auto& b = sys.chiplets[j];
      if (std::abs(a.x - b.x) + std::abs(a.y - b.y) == 1) link(net.base[i], net.base[j], g_lat);
    }
  }
  return net;
}

Eigen::VectorXd sources(const hw::SystemSpec& sys, const Network& net, const ChipletPower& p) {
  Eigen::VectorXd q = Eigen::VectorXd::Zero(net.n);
  for (std::size_t i = 0; i < sys.chiplets.size(); ++i) {
    const int layers = sys.chiplets[i].chiplet.dram.n_layer;
    q(net.base[i]) = i < p.logic_w.size() ? p.logic_w[i] : 0.0;
    const double per_layer = (i < p.dram_w.size() ? p.dram_w[i] : 0.0) / layers;
    for (int l = 1; l <= layers; ++l) q(net.base[i] + l) = per_layer;
  }
  return q;
}

ThermalState unpack(const hw::SystemSpec& sys, const Network& net, const Eigen::VectorXd& t,
                    int level) {
  ThermalState s;
  s.ambient_c = sys.cooling.ambient_c;
  s.flow_level = level;
  s.pump_w = sys.cooling.flow_levels[static_cast<std::size_t>(level)].pump_power_w;
  for (std::size_t i = 0; i < sys.chiplets.size(); ++i) {
    const int layers = sys.chiplets[i].chiplet.dram.n_layer;
    s.logic_c.push_back(t(net.base[i]));
    std::vector<double> lc;
    double hottest = -1e300;
    for (int l = 1; l <= layers; ++l) {
      lc.push_back(t(net.base[i] + l));
      hottest = std::max(hottest, t(net.base[i] + l));
    }
    s.layers_c.push_back(std::move(lc));
    s.dram_c.push_back(hottest);
  }
  return s;
}

Eigen::VectorXd pack(const Network& net, const ThermalState& s) {
  Eigen::VectorXd t = Eigen::VectorXd::Constant(net.n, s.ambient_c);
  for (std::size_t i = 0; i < net.base.size() && i < s.logic_c.size(); ++i) {
    t(net.base[i]) = s.logic_c[i];
    for (std::size_t l = 0; l < s.layers_c[i].size(); ++l) {
      t(net.base[i] + 1 + static_cast<int>(l)) = s.layers_c[i][l];
    }
  }
  return t;
}

}  // namespace

double ThermalState::t_max() const {
  double m = ambient_c;
  for (double v : logic_c) m = std::max(m, v);
  for (double v : dram_c) m = std::max(m, v);
  return m;
}

ChipletPower PowerTrace::average() const {
  ChipletPower p;
  int n_chip = 0;
  for (const auto& b : blocks) n_chip = std::max(n_chip, b.chiplet + 1);
  p.logic_w.assign(static_cast<std::size_t>(n_chip), 0.0);
  p.dram_w.assign(static_cast<std::size_t>(n_chip), 0.0);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    double dyn = 0;
    if (duration_s > 0) {
      for (double w : dynamic_w[b]) dyn += w * bin_s;
      dyn /= duration_s;
    }
    auto& slot = blocks[b].dram ? p.dram_w : p.logic_w;
    slot[static_cast<std::size_t>(blocks[b].chiplet)] += dyn + static_w[b];
  }
  return p;
}

double PowerTrace::energy_j() const {
  double e = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (double w : dynamic_w[b]) e += w * bin_s;
    e += static_w[b] * duration_s;
  }
  return e + pump_w * duration_s;
}

ThermalState ambient_state(const hw::SystemSpec& sys) {
  const Network net = build(sys, 0);
  return unpack(sys, net, Eigen::VectorXd::Constant(net.n, sys.cooling.ambient_c), 0);
}

PowerTrace power_from_activity(const sim::ActivityTrace& act, const hw::SystemSpec& sys,
                               const ThermalState& temps, double bin_s) {
  PowerTrace p;
  p.duration_s = act.makespan;
  const std::size_t n_chip = sys.chiplets.size();
  const std::size_t bins =
      act.makespan > 0 && bin_s > 0
          ? std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(act.makespan / bin_s)))
          : 1;
  p.bin_s = act.makespan > 0 ? act.makespan / static_cast<double>(bins) : 0.0;
  for (std::size_t i = 0; i < n_chip; ++i) {
    const auto& c = sys.chiplets[i].chiplet;
    const double t_logic = i < temps.logic_c.size() ? temps.logic_c[i] : 65.0;
    const double t_dram = i < temps.dram_c.size() ? temps.dram_c[i] : 65.0;
    p.blocks.push_back({c.name + "/logic", static_cast<int>(i), false});
    p.static_w.push_back(hw::leakage_w(c, sys.cooling, t_logic));
    p.blocks.push_back({c.name + "/dram", static_cast<int>(i), true});
    p.static_w.push_back(mem::dram_static_w(c.dram, t_dram));
  }
  p.dynamic_w.assign(p.blocks.size(), std::vector<double>(bins, 0.0));
  if (p.bin_s <= 0) return p;
  // Energy of each interval is spread over the bins it overlaps.
  for (const auto& iv : act.intervals) {
    const int chip = act.pe_chiplet[static_cast<std::size_t>(iv.pe)];
    auto& row = p.dynamic_w[static_cast<std::size_t>(2 * chip)];
    const double len = iv.end - iv.start;
    if (len <= 0) {
      const auto b = std::min(bins - 1, static_cast<std::size_t>(iv.start / p.bin_s));
      row[b] += iv.energy / p.bin_s;
      continue;
    }
    auto b = std::min(bins - 1, static_cast<std::size_t>(iv.start / p.bin_s));
    for (; b < bins; ++b) {
      const double lo = std::max(iv.start, static_cast<double>(b) * p.bin_s);
      const double hi = b + 1 == bins ? iv.end : std::min(iv.end, static_cast<double>(b + 1) * p.bin_s);
      if (hi > lo) row[b] += iv.energy * (hi - lo) / len / p.bin_s;
      if (hi >= iv.end) break;
    }
  }
  return p;
}

ThermalState solve_steady(const hw::SystemSpec& sys, const ChipletPower& p, int flow_level) {
  const Network net = build(sys, flow_level);
  const Eigen::VectorXd rhs = sources(sys, net, p) + net.g_amb * sys.cooling.ambient_c;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(net.g);
  if (!lu.isInvertible()) throw Error(ErrorCode::SingularNetwork, "thermal network is singular");
  const Eigen::VectorXd t = lu.solve(rhs);
  if (!t.allFinite()) throw Error(ErrorCode::SingularNetwork, "non-finite temperatures");
  const int lvl = std::clamp(flow_level, 0, static_cast<int>(sys.cooling.flow_levels.size()) - 1);
  return unpack(sys, net, t, lvl);
}

ThermalState solve_with_flow_control(const hw::SystemSpec& sys, const ChipletPower& p) {
  const int levels = static_cast<int>(sys.cooling.flow_levels.size());
  ThermalState s;
  for (int l = 0; l < levels; ++l) {
    s = solve_steady(sys, p, l);
    if (s.t_max() <= sys.cooling.t_limit_c) return s;
  }
  return s;
}

std::vector<ThermalState> solve_transient(const hw::SystemSpec& sys, const PowerTrace& trace,
                                          const ThermalState& init, int flow_level) {
  const Network net = build(sys, flow_level);
  const int lvl = std::clamp(flow_level, 0, static_cast<int>(sys.cooling.flow_levels.size()) - 1);
  Eigen::VectorXd t = pack(net, init);
  // Stable explicit step: well below the smallest node time constant.
  double tau = 1e300;
  for (int i = 0; i < net.n; ++i) tau = std::min(tau, net.cap(i) / net.g(i, i));
  const std::size_t bins = trace.dynamic_w.empty() ? 0 : trace.dynamic_w.front().size();
  std::vector<ThermalState> out;
  if (trace.bin_s <= 0) return out;
  const int sub = std::max(1, static_cast<int>(std::ceil(trace.bin_s / (0.5 * tau))));
  const double dt = trace.bin_s / sub;
  for (std::size_t b = 0; b < bins; ++b) {
    ChipletPower p;
    p.logic_w.assign(sys.chiplets.size(), 0.0);
    p.dram_w.assign(sys.chiplets.size(), 0.0);
    for (std::size_t k = 0; k < trace.blocks.size(); ++k) {
      auto& slot = trace.blocks[k].dram ? p.dram_w : p.logic_w;
      slot[static_cast<std::size_t>(trace.blocks[k].chiplet)] += trace.dynamic_w[k][b] + trace.static_w[k];
    }
    const Eigen::VectorXd q = sources(sys, net, p) + net.g_amb * sys.cooling.ambient_c;
    for (int s = 0; s < sub; ++s) {
      t += dt * (q - net.g * t).cwiseQuotient(net.cap);
    }
    out.push_back(unpack(sys, net, t, lvl));
  }
  return out;
}

FixedPointResult thermal_fixed_point(const hw::SystemSpec& sys, const hw::ModelSpec& model,
                                     const par::PdPlan& plan, const trace::Trace& tr,
                                     const sim::SchedulerConfig& cfg,
                                     const FixedPointOptions& opt) {
  FixedPointResult r;
  ThermalState cur = ambient_state(sys);
  for (auto& v : cur.logic_c) v = opt.initial_c;
  for (auto& v : cur.dram_c) v = opt.initial_c;
  for (auto& l : cur.layers_c) std::fill(l.begin(), l.end(), opt.initial_c);

  std::vector<double> last_derate;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    // Memory timing only sees temperature through the refresh step, so a
    // simulation is rerun only when some chiplet changes refresh bin.
    std::vector<double> sim_t;
    std::vector<double> derate;
    for (std::size_t i = 0; i < sys.chiplets.size(); ++i) {
      sim_t.push_back(std::clamp(cur.dram_c[i], -40.0, 125.0));
      derate.push_back(mem::refresh_derate(sys.chiplets[i].chiplet.dram, sim_t.back()));
    }
    if (r.simulations == 0 || derate != last_derate) {
      r.sim = sim::simulate(sys, model, plan, tr, cfg, sim_t);
      ++r.simulations;
      last_derate = derate;
    }
    r.sim_temps = sim_t;
    const double bin = opt.bin_s > 0 ? opt.bin_s : r.sim.activity.makespan / 200.0;
    r.power = power_from_activity(r.sim.activity, sys, cur, bin);
    r.state = solve_with_flow_control(sys, r.power.average());
    r.power.pump_w = r.state.pump_w;

    double delta = 0;
    ThermalState next = r.state;
    auto relax = [&](double& c, double target) {
      delta = std::max(delta, std::abs(target - c));
      return c + opt.relaxation * (target - c);
    };
    for (std::size_t i = 0; i < sys.chiplets.size(); ++i) {
      next.logic_c[i] = relax(cur.logic_c[i], r.state.logic_c[i]);
      next.dram_c[i] = relax(cur.dram_c[i], r.state.dram_c[i]);
      for (std::size_t l = 0; l < next.layers_c[i].size(); ++l) {
        next.layers_c[i][l] = cur.layers_c[i][l] + opt.relaxation * (r.state.layers_c[i][l] - cur.layers_c[i][l]);
      }
    }
    r.delta_history.push_back(delta);
    r.iterations = it;
    // Converged only once the simulated refresh rates agree with the solved
    // DRAM temperatures; otherwise restart from the solved state.
    bool same_refresh = true;
    for (std::size_t i = 0; i < sys.chiplets.size(); ++i) {
      const double t = std::clamp(r.state.dram_c[i], -40.0, 125.0);
      same_refresh =
          same_refresh && mem::refresh_derate(sys.chiplets[i].chiplet.dram, t) == derate[i];
    }
    if (delta < opt.tolerance_c && !same_refresh) {
      cur = r.state;
      continue;
    }
    if (delta < opt.tolerance_c) {
      r.power = power_from_activity(r.sim.activity, sys, r.state, bin);
      r.power.pump_w = r.state.pump_w;
      auto& m = r.sim.metrics;
      // Static energy at the solved temperatures, plus pumping.
      double static_w = 0;
      for (std::size_t b = 0; b < r.power.blocks.size(); ++b) static_w += r.power.static_w[b];
      m.static_energy = static_w * m.makespan;
      m.energy = m.dynamic_energy + m.static_energy + r.state.pump_w * m.makespan;
      m.avg_power = m.makespan > 0 ? m.energy / m.makespan : 0.0;
      m.tokens_per_joule = m.energy > 0 ? static_cast<double>(m.total_tokens) / m.energy : 0.0;
      return r;
    }
    cur = next;
  }
  std::string hist;
  for (double d : r.delta_history) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%.3f", hist.empty() ? "" : " ", d);
    hist += buf;
  }
  throw Error(ErrorCode::NonConvergence, "temperature did not settle after " +
                                             std::to_string(opt.max_iterations) +
                                             " iterations; |dT| history: " + hist);
}

void write_thermal_csv(const std::filesystem::path& path, const PowerTrace& p,
                       const ThermalState& steady, const std::vector<ThermalState>& states) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write " + path.string());
  out << "block,time_s,power_w,temp_c\n";
  char buf[160];
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    const auto& blk = p.blocks[b];
    for (std::size_t i = 0; i < p.dynamic_w[b].size(); ++i) {
      const ThermalState& s = i < states.size() ? states[i] : steady;
      const auto c = static_cast<std::size_t>(blk.chiplet);
      const double temp = blk.dram ? s.dram_c[c] : s.logic_c[c];
      std::snprintf(buf, sizeof buf, "%s,%.9g,%.9g,%.6g\n", blk.name.c_str(),
                    static_cast<double>(i) * p.bin_s, p.dynamic_w[b][i] + p.static_w[b], temp);
      out << buf;
    }
  }
}

}  // namespace lamosim::thermal

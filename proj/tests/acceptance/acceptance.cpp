// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "lamosim/config_io.hpp"
#include "lamosim/d3flow.hpp"
#include "lamosim/dse.hpp"
#include "lamosim/memmodel.hpp"
#include "lamosim/opgraph.hpp"
#include "lamosim/servesim.hpp"
#include "lamosim/thermal.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace lamosim;
using Clock = std::chrono::steady_clock;

namespace {

const fs::path kConfigs = LAMOSIM_CONFIG_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const std::array<trace::Source, 3> kSources = {trace::Source::Code, trace::Source::Reason,
                                               trace::Source::LongBench};

hw::SystemSpec default_system() { return config::load_system(kConfigs / "system.json"); }
hw::ModelSpec default_model() { return config::load_model(kConfigs / "model_llama3_8b.json"); }
hw::ModelSpec tiny_model() { return config::load_model(kConfigs / "model_tiny.json"); }

// Trace used by the CLI defaults: 64 requests at 2 req/s, seed 1.
trace::Trace default_trace(trace::Source s) { return trace::gen_trace(s, 2.0, 64, 1); }

// ---- 1 ---------------------------------------------------------------------

Outcome dataflow_optimality() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::int64_t> dim(1, 512);
  std::uniform_int_distribution<int> pick_chip(0, 2);
  hw::ChipletSpec chips[3];
  chips[1].pe.sram_bytes = 16 * 1024;
  chips[2].pe.sram_bytes = 2 * 1024;
  int mismatches = 0;
  for (int i = 0; i < 50; ++i) {
    const auto m = dim(rng), n = dim(rng), k = dim(rng);
    const auto& c = chips[pick_chip(rng)];
    const auto r = d3::search(comp::GemmShape::make(m, n, k), c.pe, c.dram, c.clock_hz, 65.0, 2);
    const auto b = oracle::dataflow_brute(m, n, k, 1, c, 65.0, 2);
    const bool same = r.best.tile == comp::TileMapping{b.tm, b.tn, b.tk} &&
                      static_cast<int>(r.best.policy) == b.policy &&
                      r.cost.latency == b.cost.latency && r.cost.energy == b.cost.energy &&
                      r.evaluated == b.evaluated;
    if (!same) ++mismatches;
  }
  const double secs = since(t0);
  return {mismatches == 0 && secs < 10.0,
          std::to_string(50 - mismatches) + "/50 shapes identical, " + fmt("%.2f s", secs)};
}

// ---- 2 ---------------------------------------------------------------------

Outcome dataflow_dominance() {
  const auto model = default_model();
  const hw::ChipletSpec normal = config::load_chiplet(kConfigs / "chiplet_pc.json");
  const hw::ChipletSpec tight = config::load_chiplet(kConfigs / "chiplet_pc_tiny_sram.json");
  constexpr double kInf = std::numeric_limits<double>::infinity();

  auto best = [&](const comp::GemmShape& s, const hw::ChipletSpec& c,
                  std::optional<d3::ReusePolicy> only) {
    d3::SearchOptions o;
    o.only = only;
    try {
      return d3::search(s, c.pe, c.dram, c.clock_hz, 65.0, model.dtype_bytes, o).cost.latency;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoFeasibleMapping) throw;
      return kInf;
    }
  };

  int cases = 0, violations = 0, strict = 0;
  // Per GEMM: the joint search is never worse than any single-policy search.
  // Per decode layer: one policy for every GEMM versus a policy per GEMM.
  auto check_layer = [&](const std::vector<ops::Op>& layer, const hw::ChipletSpec& c,
                         bool decode) {
    double joint = 0;
    std::array<double, 4> fixed{};
    for (const auto& op : layer) {
      if (op.kind != ops::OpKind::Gemm) continue;
      const double j = best(op.shape, c, std::nullopt);
      joint += j;
      for (int p = 0; p < 4; ++p) {
        const double f = best(op.shape, c, d3::kAllPolicies[p]);
        fixed[p] += f;
        ++cases;
        if (j > f) ++violations;
      }
    }
    const double min_fixed = *std::min_element(fixed.begin(), fixed.end());
    if (decode && &c == &tight && joint < min_fixed * (1 - 1e-12)) ++strict;
  };
  for (std::int64_t seq = 64; seq <= 8192; seq *= 2) {
    for (const auto* c : {&normal, &tight}) check_layer(ops::prefill_layer(model, 8, {seq}), *c, false);
  }
  for (int b = 1; b <= 32; b *= 2) {
    for (const auto* c : {&normal, &tight}) {
      check_layer(ops::decode_layer(model, 4, std::vector<std::int64_t>(b, 1024)), *c, true);
    }
  }
  return {violations == 0 && strict >= 1,
          std::to_string(cases) + " GEMM/policy comparisons, " + std::to_string(violations) +
              " worse than a fixed policy, " + std::to_string(strict) +
              " constrained-SRAM decode layers strictly better than every fixed policy"};
}

// ---- 3 ---------------------------------------------------------------------

Outcome tp_grouping_exactness() {
  const auto t0 = Clock::now();
  int meshes = 0, wrong = 0;
  // Every rectangle with at most 9 cells plus every subset shape of a 3x3
  // window with at least 2 cells.
  std::vector<std::vector<oracle::Cell>> all;
  for (int w = 1; w <= 9; ++w) {
    for (int h = 1; w * h <= 9; ++h) {
      std::vector<oracle::Cell> c;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) c.push_back({x, y});
      }
      all.push_back(c);
    }
  }
  for (int mask = 0; mask < (1 << 9); ++mask) {
    if (__builtin_popcount(mask) < 2) continue;
    std::vector<oracle::Cell> c;
    for (int i = 0; i < 9; ++i) {
      if (mask >> i & 1) c.push_back({i % 3, i / 3});
    }
    all.push_back(c);
  }
  for (const auto& cells : all) {
    for (int tp : {2, 3}) {
      if (static_cast<int>(cells.size()) < tp) continue;
      std::vector<par::PePoint> pts;
      for (const auto& c : cells) pts.push_back({{0, 0, c.x, c.y}, c.x, c.y});
      const auto g = par::tp_group(pts, tp);
      ++meshes;
      if (!g.exact || g.objective != oracle::min_total_span(cells, tp)) ++wrong;
    }
  }
  const double secs = since(t0);
  return {wrong == 0 && secs < 60.0, std::to_string(meshes - wrong) + "/" +
                                         std::to_string(meshes) + " meshes optimal, " +
                                         fmt("%.2f s", secs)};
}

// ---- 4 ---------------------------------------------------------------------

Outcome placement_quality() {
  int instances = 0, bad = 0;
  double worst = 0;
  // Packages of 2x2-PE chiplets; TP 2 gives 2..8 groups.
  for (int chiplets = 1; chiplets <= 4; ++chiplets) {
    hw::SystemSpec sys;
    for (int i = 0; i < chiplets; ++i) {
      hw::ChipletSpec c;
      c.name = "c" + std::to_string(i);
      c.pe_rows = c.pe_cols = 2;
      sys.chiplets.push_back({i % 2, i / 2, c});
    }
    const comm::Topology topo(sys);
    std::vector<int> idx(sys.chiplets.size());
    std::iota(idx.begin(), idx.end(), 0);
    const auto pes = par::pe_points(sys, idx);
    const auto grouping = par::tp_group(pes, 2, {0.1});
    for (int stages = 1; stages <= std::min(4, static_cast<int>(grouping.groups.size()));
         ++stages) {
      for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 rng(seed * 131 + stages);
        std::uniform_real_distribution<double> u(0.5, 2.0);
        par::StageCosts costs;
        for (int l = 0; l < 8; ++l) costs.layer_s.push_back(1e-6 * u(rng));
        costs.allreduce_bytes = 2e5 * u(rng);
        costs.transfer_bytes = 2e7 * u(rng);
        const par::PlacementProblem prob(pes, grouping, stages, costs, topo);
        const auto placed = par::place_stages(prob, seed);
        const double brute = oracle::placement_brute(
            stages, prob.n_groups(), [&](int s, int g) { return prob.stage_cost(s, g); },
            [&](int a, int b) { return prob.transfer_cost(a, b); });
        const double gap = placed.objective / brute - 1.0;
        worst = std::max(worst, gap);
        ++instances;
        if (gap > 0.01) ++bad;
      }
    }
  }
  return {bad == 0, std::to_string(instances) + " instances, worst gap " +
                        fmt("%.4f%%", 100 * worst)};
}

// ---- 5 ---------------------------------------------------------------------

Outcome refresh_and_leakage() {
  const hw::DramStackSpec d;
  const double bytes = 1e9;
  const double bw65 = mem::mem_access_bytes(bytes, d.total_banks(), d, 65).effective_bw;
  const double bw105 = mem::mem_access_bytes(bytes, d.total_banks(), d, 105).effective_bw;
  const double k = (d.t_rfc_ns / d.t_rfi_base_ns) / 0.05;
  const double formula = (1 - 0.20 * k) / (1 - 0.05 * k);
  const double ratio = bw105 / bw65;
  const double drop = 1 - ratio;

  const hw::ChipletSpec c;
  hw::CoolingSpec cool;
  const double leak = hw::leakage_w(c, cool, cool.leak_ref_c + 40) / hw::leakage_w(c, cool, cool.leak_ref_c) - 1;
  cool.leakage_model = hw::LeakageModel::Exponential;
  const double leak_exp =
      hw::leakage_w(c, cool, cool.leak_ref_c + 40) / hw::leakage_w(c, cool, cool.leak_ref_c) - 1;

  const bool ok = std::abs(ratio - formula) < 1e-9 && std::abs(drop - 0.10) <= 0.01 &&
                  std::abs(leak - 0.20) <= 0.005 && std::abs(leak_exp - 0.20) <= 0.005;
  return {ok, "k=" + fmt("%.3f", k) + ", bandwidth drop " + fmt("%.2f%%", 100 * drop) +
                  " (formula " + fmt("%.2f%%", 100 * (1 - formula)) + "), leakage +" +
                  fmt("%.2f%%", 100 * leak) + " linear, +" + fmt("%.2f%%", 100 * leak_exp) +
                  " exponential"};
}

// ---- 6 ---------------------------------------------------------------------

Outcome roofline_consistency() {
  const auto sys = default_system();
  const auto model = default_model();
  const auto plan = par::build_pd_plan(sys, model, 8, 1, 4, 2);
  std::int64_t checked = 0, violations = 0;
  double worst = 0;
  for (auto s : kSources) {
    sim::SchedulerConfig cfg;
    cfg.record_activity = false;
    const auto r = sim::simulate(sys, model, plan, default_trace(s), cfg, {});
    try {
      const auto rep = sim::roofline_check(r, 1e-2);
      checked += rep.checked;
      worst = std::max(worst, rep.worst_ratio);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::RooflineViolation) throw;
      ++violations;
    }
  }
  return {violations == 0 && checked > 0,
          std::to_string(checked) + " operator samples over 3 traces, " +
              std::to_string(violations) + " violations, worst achieved/ceiling " +
              fmt("%.6f", worst)};
}

// ---- 7 ---------------------------------------------------------------------

hw::SystemSpec pair_system() {
  hw::SystemSpec s;
  s.chiplets.push_back({0, 0, config::load_chiplet(kConfigs / "chiplet_pc.json")});
  s.chiplets.push_back({1, 0, config::load_chiplet(kConfigs / "chiplet_dc.json")});
  return s;
}

Outcome serving_semantics() {
  const auto sys = pair_system();
  const auto model = tiny_model();
  const auto plan = par::build_pd_plan(sys, model, 2, 2, 2, 1);
  const sim::SchedulerConfig cfg;

  // Hand composition for one 200-token prompt.
  const std::int64_t len = 200;
  trace::Trace one;
  one.requests.push_back({0, 1.0, len, 4});
  const double ttft = sim::simulate(sys, model, plan, one, cfg, {}).metrics.requests[0].ttft;

  const auto& chip = sys.chiplets[0].chiplet;
  const int dt = model.dtype_bytes;
  const std::int64_t heads = model.n_heads / 2, kvh = model.n_kv_heads / 2, dh = model.d_head,
                     d = model.d_model, ffn = model.d_ffn / 2;
  const std::int64_t ctx = (len + cfg.attn_bucket - 1) / cfg.attn_bucket * cfg.attn_bucket;
  const double hidden = static_cast<double>(len) * d;
  auto gemm = [&](std::int64_t m, std::int64_t n, std::int64_t k, std::int64_t g) {
    return sim::gemm_op_cost(comp::GemmShape::make(m, n, k, g), chip, 65.0, dt).seconds;
  };
  auto vec = [&](double e) { return sim::vector_op_cost(e, chip).seconds; };
  const double local = vec(2 * hidden) + gemm(len, (heads + 2 * kvh) * dh, d, 1) +
                       gemm(len * (heads / kvh), ctx, dh, kvh) +
                       vec(3.0 * heads * len * len) + gemm(len * (heads / kvh), dh, ctx, kvh) +
                       gemm(len, d, heads * dh, 1) + vec(3 * hidden) + gemm(len, 2 * ffn, d, 1) +
                       vec(2.0 * len * ffn) + gemm(len, d, ffn, 1) + vec(hidden);
  const comm::Topology topo(sys);
  const auto& pre = plan.prefill;
  const auto& sg = pre.instances.at(0).stage_group;
  double hand = 0;
  for (std::size_t s = 0; s < sg.size(); ++s) {
    const int g = sg[s];
    const auto coords = pre.group_coords(g);
    const auto ctr = pre.center_coord(g);
    const double ar =
        comm::collective_cost(comm::CollectiveKind::AllReduce, coords, ctr, hidden * dt, topo)
            .seconds;
    hand += (pre.stage_layers[s].second - pre.stage_layers[s].first) * (local + 2 * ar);
    hand += s == 0 ? comm::collective_cost(comm::CollectiveKind::Multicast, coords, ctr,
                                           hidden * dt, topo)
                         .seconds
                   : comm::p2p_cost(pre.center_coord(sg[s - 1]), ctr, hidden * dt, topo).seconds;
  }
  const double rel = std::abs(ttft - hand) / hand;

  // Mixed trace: the three length profiles interleaved.
  trace::Trace mixed;
  for (auto s : kSources) {
    auto t = trace::gen_trace(s, 6.0, 16, 7);
    mixed.requests.insert(mixed.requests.end(), t.requests.begin(), t.requests.end());
  }
  std::stable_sort(mixed.requests.begin(), mixed.requests.end(),
                   [](const auto& a, const auto& b) { return a.arrival < b.arrival; });
  for (std::size_t i = 0; i < mixed.requests.size(); ++i) {
    mixed.requests[i].id = static_cast<std::int64_t>(i);
  }
  auto cont = cfg;
  auto stat = cfg;
  stat.mode = sim::BatchMode::Static;
  const auto a = sim::simulate(sys, model, plan, mixed, cont, {});
  const auto b = sim::simulate(sys, model, plan, mixed, stat, {});
  int e2e_bad = 0;
  for (const auto* r : {&a, &b}) {
    for (const auto& m : r->metrics.requests) {
      if (m.completed && m.e2e != m.ttft + m.decode_gaps) ++e2e_bad;
    }
  }
  const bool ok = rel <= 1e-9 && e2e_bad == 0 && a.metrics.tpt >= b.metrics.tpt;
  return {ok, "TTFT rel. error " + fmt("%.2e", rel) + ", e2e mismatches " +
                  std::to_string(e2e_bad) + ", TPT continuous " + fmt("%.1f", a.metrics.tpt) +
                  " vs static " + fmt("%.1f", b.metrics.tpt) + " tok/s"};
}

// ---- 8 ---------------------------------------------------------------------

Outcome pd_mapping_trend() {
  const auto sys = default_system();
  const auto model = default_model();
  bool ok = true;
  std::string detail;
  for (auto s : kSources) {
    const auto c = dse::optimize_mapping(sys, model, default_trace(s));
    ok = ok && c.prefill.tp >= c.decode.tp;
    detail += std::string(trace::to_string(s)) + " (" + std::to_string(c.prefill.tp) + "," +
              std::to_string(c.prefill.pp) + ")/(" + std::to_string(c.decode.tp) + "," +
              std::to_string(c.decode.pp) + ") ";
  }
  return {ok, "prefill/decode (TP,PP): " + detail};
}

// ---- 9 ---------------------------------------------------------------------

Outcome thermal_fixed_point() {
  const auto sys = default_system();
  const auto model = default_model();
  const auto plan = par::build_pd_plan(sys, model, 8, 1, 4, 2);
  bool ok = true;
  int max_iter = 0;
  double max_delta = 0, max_leak_err = 0;
  for (auto s : kSources) {
    sim::SchedulerConfig cfg;
    const auto r = thermal::thermal_fixed_point(sys, model, plan, default_trace(s), cfg);
    max_iter = std::max(max_iter, r.iterations);
    max_delta = std::max(max_delta, r.delta_history.back());
    ok = ok && r.iterations <= 20 && r.delta_history.back() < 0.5;
    // The refresh step the simulator used is the one the steady state implies.
    for (std::size_t i = 0; i < sys.chiplets.size(); ++i) {
      const auto& dram = sys.chiplets[i].chiplet.dram;
      ok = ok && mem::refresh_derate(dram, r.sim_temps[i]) ==
                     mem::refresh_derate(dram, std::clamp(r.state.dram_c[i], -40.0, 125.0));
    }
    // Static power recomputed at the solved temperatures.
    const auto again = thermal::power_from_activity(r.sim.activity, sys, r.state, r.power.bin_s);
    for (std::size_t b = 0; b < again.static_w.size(); ++b) {
      const double err = std::abs(again.static_w[b] - r.power.static_w[b]) / again.static_w[b];
      max_leak_err = std::max(max_leak_err, err);
    }
  }
  ok = ok && max_leak_err <= 0.005;

  // Equal power into a 4-layer and an 8-layer stack.
  hw::SystemSpec two;
  two.chiplets.push_back({0, 0, config::load_chiplet(kConfigs / "chiplet_pc.json")});
  two.chiplets.push_back({2, 0, config::load_chiplet(kConfigs / "chiplet_dc.json")});
  two.chiplets[1].chiplet.name = "dc";
  const auto st = thermal::solve_steady(two, {{300, 300}, {40, 40}}, 1);
  const bool dc_hotter = st.logic_c[1] >= st.logic_c[0] && st.dram_c[1] >= st.dram_c[0];
  ok = ok && dc_hotter;
  return {ok, "max iterations " + std::to_string(max_iter) + ", final max|dT| " +
                  fmt("%.3f C", max_delta) + ", static power mismatch " +
                  fmt("%.3f%%", 100 * max_leak_err) + ", DC/PC DRAM at equal power " +
                  fmt("%.1f", st.dram_c[1]) + "/" + fmt("%.1f C", st.dram_c[0])};
}

// ---- 10 --------------------------------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LAMOSIM_BIN) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

Outcome dse_correctness(const fs::path& scratch) {
  bool ok = true;
  int pools = 0, front_bad = 0;
  for (const char* domain_file : {"domain_subset.json", "domain.json"}) {
    const auto domain = dse::ParamDomain::from_json(config::load_json_file(kConfigs / domain_file));
    const auto r = dse::chiplet_dse(domain, 200, 1);
    std::map<std::int64_t, std::vector<int>> pool;
    for (const auto& c : r.evaluated) {
      if (c.feasible) pool[c.capacity_key].push_back(c.id);
    }
    for (const auto& [cap, ids] : pool) {
      std::vector<std::array<double, 3>> pts;
      for (int id : ids) {
        const auto& m = r.evaluated[static_cast<std::size_t>(id)].metrics;
        pts.push_back({m.peak_flops, m.peak_bw, m.peak_power});
      }
      std::set<int> want;
      for (int i : oracle::nondominated(pts)) want.insert(ids[static_cast<std::size_t>(i)]);
      const auto it = r.front.find(cap);
      const std::set<int> got = it == r.front.end() ? std::set<int>{}
                                                    : std::set<int>(it->second.begin(), it->second.end());
      ++pools;
      if (got != want) ++front_bad;
    }
  }
  ok = ok && front_bad == 0;

  // Toy system space: DSE ranking against evaluating every design directly.
  const auto space = dse::SystemSpace::from_json(
      config::load_json_file(kConfigs / "system_space_toy.json"), kConfigs);
  const auto model = tiny_model();
  const auto tr = trace::gen_trace(trace::Source::Code, 2.0, 64, 1);
  const auto slo = dse::SloSpec::from_json(config::load_json_file(kConfigs / "slo.json"));
  dse::SystemDseOptions opt;
  opt.budget = 200;
  opt.jobs = 0;
  const auto r = dse::system_dse(space, model, tr, slo, opt);
  std::vector<std::pair<double, int>> direct;
  opt.jobs = 1;
  for (int pc = 0; pc < static_cast<int>(space.pc.size()); ++pc) {
    for (int dc = 0; dc < static_cast<int>(space.dc.size()); ++dc) {
      for (int n = 0; n < static_cast<int>(space.counts.size()); ++n) {
        for (int m = 0; m < static_cast<int>(space.mappings.size()); ++m) {
          const auto c = dse::evaluate_design(space, {pc, dc, n, m}, model, tr, slo, opt);
          if (c.feasible) direct.push_back({-c.objective, c.id});
        }
      }
    }
  }
  std::stable_sort(direct.begin(), direct.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<int> want;
  for (const auto& [o, id] : direct) want.push_back(id);
  const bool rank_ok = r.exhaustive && r.evaluated.size() == space.size() && r.ranked == want;
  ok = ok && rank_ok;

  int recheck_bad = 0;
  for (int id : r.ranked) {
    const auto& c = *std::find_if(r.evaluated.begin(), r.evaluated.end(),
                                  [&](const auto& x) { return x.id == id; });
    const bool pass = c.simulated && c.ttft_p99 <= slo.ttft_max && c.tbt_p99 <= slo.tbt_max &&
                      c.t_max <= slo.t_limit && c.peak_power <= slo.p_rack &&
                      c.kv_capacity >= slo.kv_budget;
    if (!pass) ++recheck_bad;
  }
  ok = ok && recheck_bad == 0 && !r.ranked.empty();

  const auto t0 = Clock::now();
  const int rc = run_cli("dse --level system --out " + (scratch / "demo").string());
  const double demo = since(t0);
  ok = ok && rc == 0 && demo < 300.0;
  return {ok, std::to_string(pools - front_bad) + "/" + std::to_string(pools) +
                  " Pareto pools exact, toy ranking " + (rank_ok ? "matches" : "differs") +
                  " (" + std::to_string(r.ranked.size()) + " feasible of " +
                  std::to_string(r.evaluated.size()) + "), " + std::to_string(recheck_bad) +
                  " re-check failures, demo " + fmt("%.1f s", demo)};
}

// ---- 11 --------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Every file except timing.json must be identical.
bool same_outputs(const fs::path& a, const fs::path& b, std::string& why) {
  std::set<std::string> na, nb;
  for (const auto& e : fs::directory_iterator(a)) na.insert(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(b)) nb.insert(e.path().filename().string());
  if (na != nb) {
    why = "file sets differ";
    return false;
  }
  for (const auto& n : na) {
    if (n == "timing.json") continue;
    if (slurp(a / n) != slurp(b / n)) {
      why = n;
      return false;
    }
  }
  return true;
}

Outcome determinism(const fs::path& scratch) {
  const std::vector<std::pair<std::string, std::string>> cmds = {
      {"dataflow", "dataflow --shape 128x4096x4096 --dump-all"},
      {"gen-trace", "gen-trace --source reason"},
      {"plan", "plan --plan auto --requests 32"},
      {"simulate", "simulate --requests 32"},
      {"simulate-thermal", "simulate --thermal --requests 16 --source longbench"},
      {"dse-chiplet", "dse --budget 60"},
      {"dse-system", "dse --level system --budget 6 --requests 16"},
  };
  int runs = 0;
  std::string failed;
  for (const auto& [name, args] : cmds) {
    const bool jobs = name.rfind("dse", 0) == 0;
    const std::vector<std::string> variants =
        jobs ? std::vector<std::string>{" --jobs 1", " --jobs 1", " --jobs 4", " --jobs 0"}
             : std::vector<std::string>{"", ""};
    std::vector<fs::path> dirs;
    for (std::size_t v = 0; v < variants.size(); ++v) {
      const auto dir = scratch / (name + "_" + std::to_string(v));
      const int rc = run_cli(args + variants[v] + " --out " + dir.string());
      ++runs;
      if (rc != 0) failed += name + " exit " + std::to_string(rc) + "; ";
      dirs.push_back(dir);
    }
    for (std::size_t v = 1; v < dirs.size(); ++v) {
      std::string why;
      if (fs::exists(dirs[0]) && fs::exists(dirs[v]) && !same_outputs(dirs[0], dirs[v], why)) {
        failed += name + variants[v] + ": " + why + "; ";
      }
    }
  }
  return {failed.empty(), std::to_string(runs) + " runs of " + std::to_string(cmds.size()) +
                              " commands" + (failed.empty() ? ", all byte-identical" : ": " + failed)};
}

}  // namespace

int main() {
  const auto scratch = fs::temp_directory_path() / "lamosim_acceptance";
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"dataflow search matches brute force", dataflow_optimality},
      {"dataflow search dominates fixed policies", dataflow_dominance},
      {"TP grouping exact on small meshes", tp_grouping_exactness},
      {"stage placement within 1% of brute force", placement_quality},
      {"refresh derating and leakage calibration", refresh_and_leakage},
      {"roofline consistency on default system", roofline_consistency},
      {"serving semantics on tiny model", serving_semantics},
      {"prefill TP >= decode TP", pd_mapping_trend},
      {"thermal fixed point", thermal_fixed_point},
      {"DSE correctness", [&] { return dse_correctness(scratch); }},
      {"determinism across reruns and --jobs", [&] { return determinism(scratch); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << (i + 1) << "] " << criteria[i].first
              << ": " << o.detail << fmt(" (%.1f s)", since(t0)) << std::endl;
  }
  fs::remove_all(scratch);
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failures == 0 ? 0 : 1;
}

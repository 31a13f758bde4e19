// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <set>

#include "lamosim/config_io.hpp"
#include "lamosim/dse.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace lamosim;

namespace {

const fs::path kConfigs = LAMOSIM_CONFIG_DIR;

std::array<double, 3> key(const hw::ChipletMetrics& m) {
  return {m.peak_flops, m.peak_bw, m.peak_power};
}

struct ToySetup {
  dse::SystemSpace space;
  hw::ModelSpec model;
  trace::Trace trace;
  dse::SloSpec slo;
};

ToySetup toy() {
  ToySetup t;
  t.space = dse::SystemSpace::from_json(
      config::load_json_file(kConfigs / "system_space_toy.json"), kConfigs);
  t.model = config::load_model(kConfigs / "model_tiny.json");
  t.trace = trace::gen_trace(trace::Source::Code, 4, 12, 1);
  t.slo = dse::SloSpec::from_json(config::load_json_file(kConfigs / "slo.json"));
  return t;
}

}  // namespace

TEST(Dse, ParetoFrontMatchesBruteForce) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> v(0, 6);  // small range forces ties
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<hw::ChipletMetrics> pts(30);
    std::vector<std::array<double, 3>> raw;
    for (auto& p : pts) {
      p.peak_flops = v(rng);
      p.peak_bw = v(rng);
      p.peak_power = v(rng);
      raw.push_back(key(p));
    }
    EXPECT_EQ(dse::pareto_front(pts), oracle::nondominated(raw));
  }
}

TEST(Dse, DominanceIsStrict) {
  hw::ChipletMetrics a, b;
  a.peak_flops = b.peak_flops = 1;
  a.peak_bw = b.peak_bw = 1;
  a.peak_power = b.peak_power = 1;
  EXPECT_FALSE(dse::dominates(a, b));
  a.peak_power = 0.5;
  EXPECT_TRUE(dse::dominates(a, b));
  EXPECT_FALSE(dse::dominates(b, a));
}

TEST(Dse, ExhaustiveChipletSearchFindsEveryFrontPoint) {
  const auto domain = dse::ParamDomain::from_json(config::load_json_file(kConfigs / "domain_subset.json"));
  const auto n = static_cast<int>(domain.size());
  const auto r = dse::chiplet_dse(domain, n, 1);
  ASSERT_EQ(static_cast<int>(r.evaluated.size()), n);

  std::map<std::int64_t, std::vector<int>> feasible;
  for (const auto& c : r.evaluated) {
    EXPECT_EQ(c.feasible, hw::validate_chiplet(c.spec).empty());
    if (c.feasible) feasible[c.capacity_key].push_back(c.id);
  }
  ASSERT_FALSE(feasible.empty());
  for (const auto& [cap, ids] : feasible) {
    std::vector<std::array<double, 3>> raw;
    for (int id : ids) raw.push_back(key(r.evaluated[static_cast<std::size_t>(id)].metrics));
    std::set<int> want;
    for (int i : oracle::nondominated(raw)) want.insert(ids[static_cast<std::size_t>(i)]);
    const auto& got = r.front.at(cap);
    EXPECT_EQ(std::set<int>(got.begin(), got.end()), want) << "capacity " << cap;
    if (r.near.count(cap)) {
      for (int id : r.near.at(cap)) EXPECT_EQ(want.count(id), 0u);
    }
  }
}

TEST(Dse, ChipletBudgetRespectedAndSeeded) {
  const auto domain = dse::ParamDomain::from_json(config::load_json_file(kConfigs / "domain.json"));
  const auto a = dse::chiplet_dse(domain, 25, 3);
  const auto b = dse::chiplet_dse(domain, 25, 3);
  EXPECT_LE(a.evaluated.size(), 25u);
  EXPECT_GT(a.evaluated.size(), 0u);
  ASSERT_EQ(a.evaluated.size(), b.evaluated.size());
  for (std::size_t i = 0; i < a.evaluated.size(); ++i) {
    EXPECT_EQ(a.evaluated[i].point, b.evaluated[i].point);
  }
}

TEST(Dse, EmptyDomainRejected) {
  auto j = config::load_json_file(kConfigs / "domain_subset.json");
  j["values"]["n_core"] = nlohmann::json::array();
  try {
    dse::chiplet_dse(dse::ParamDomain::from_json(j), 10, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyDomain);
  }
}

TEST(Dse, AssemblePlacesPrefillFirst) {
  const auto t = toy();
  const auto sys = dse::assemble(t.space, {0, 0, 1, 0});  // 2 PC + 1 DC
  ASSERT_EQ(sys.chiplets.size(), 3u);
  EXPECT_EQ(sys.chiplets[0].chiplet.role, hw::ChipletRole::Prefill);
  EXPECT_EQ(sys.chiplets[1].chiplet.role, hw::ChipletRole::Prefill);
  EXPECT_EQ(sys.chiplets[2].chiplet.role, hw::ChipletRole::Decode);
  EXPECT_EQ(sys.chiplets[2].x, 0);
  EXPECT_EQ(sys.chiplets[2].y, 1);
}

TEST(Dse, ExhaustiveSystemRankingAndConstraints) {
  const auto t = toy();
  dse::SystemDseOptions opt;
  opt.budget = static_cast<int>(t.space.size());
  opt.jobs = 2;
  const auto r = dse::system_dse(t.space, t.model, t.trace, t.slo, opt);
  EXPECT_TRUE(r.exhaustive);
  ASSERT_EQ(r.evaluated.size(), t.space.size());

  std::vector<const dse::SystemCandidate*> feasible;
  for (const auto& c : r.evaluated) {
    EXPECT_EQ(c.feasible, dse::satisfies(c, t.slo));
    if (!c.feasible) {
      EXPECT_FALSE(c.binding.empty());
      continue;
    }
    EXPECT_LE(c.ttft_p99, t.slo.ttft_max);
    EXPECT_LE(c.tbt_p99, t.slo.tbt_max);
    EXPECT_LE(c.t_max, t.slo.t_limit);
    EXPECT_LE(c.peak_power, t.slo.p_rack);
    feasible.push_back(&c);
  }
  ASSERT_FALSE(feasible.empty());
  std::stable_sort(feasible.begin(), feasible.end(),
                   [](const auto* a, const auto* b) { return a->objective > b->objective; });
  ASSERT_EQ(r.ranked.size(), feasible.size());
  for (std::size_t i = 0; i < feasible.size(); ++i) EXPECT_EQ(r.ranked[i], feasible[i]->id);

  int hist = 0;
  for (const auto& [k, v] : r.binding_histogram) hist += v;
  EXPECT_EQ(hist, static_cast<int>(r.evaluated.size() - feasible.size()));
}

TEST(Dse, TightSloMakesEverythingInfeasible) {
  auto t = toy();
  t.slo.ttft_max = 1e-9;
  dse::SystemDseOptions opt;
  opt.budget = 8;
  const auto r = dse::system_dse(t.space, t.model, t.trace, t.slo, opt);
  EXPECT_TRUE(r.ranked.empty());
  try {
    dse::require_feasible(r);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoFeasibleDesign);
  }
}

TEST(Dse, PartialBudgetIsExactAndJobInvariant) {
  const auto t = toy();
  dse::SystemDseOptions opt;
  opt.budget = 3;
  opt.round_size = 2;
  opt.jobs = 1;
  const auto a = dse::system_dse(t.space, t.model, t.trace, t.slo, opt);
  opt.jobs = 3;
  const auto b = dse::system_dse(t.space, t.model, t.trace, t.slo, opt);
  EXPECT_FALSE(a.exhaustive);
  EXPECT_EQ(a.evaluated.size(), 3u);
  ASSERT_EQ(a.evaluated.size(), b.evaluated.size());
  for (std::size_t i = 0; i < a.evaluated.size(); ++i) {
    EXPECT_EQ(dse::to_json(a.evaluated[i]).dump(), dse::to_json(b.evaluated[i]).dump());
  }
}

TEST(Dse, MappingOptimizerPrefersWiderPrefill) {
  const auto sys = config::load_system(kConfigs / "system.json");
  const auto model = config::load_model(kConfigs / "model_llama3_8b.json");
  const auto tr = trace::gen_trace(trace::Source::Code, 2, 32, 1);
  const auto c = dse::optimize_mapping(sys, model, tr);
  EXPECT_GE(c.prefill.tp, c.decode.tp);
  EXPECT_FALSE(c.prefill_table.empty());
  for (const auto& row : c.prefill_table) EXPECT_GE(row.objective, c.prefill.objective);
  for (const auto& row : c.decode_table) EXPECT_GE(row.objective, c.decode.objective);
}

TEST(Dse, SloParsing) {
  const auto s = dse::SloSpec::from_json(nlohmann::json::parse(R"({"ttft_max_s": 2.5})"));
  EXPECT_DOUBLE_EQ(s.ttft_max, 2.5);
  EXPECT_DOUBLE_EQ(s.tbt_max, 0.2);
  EXPECT_THROW(dse::SloSpec::from_json(nlohmann::json::parse(R"({"ttft": 1})")), Error);
}

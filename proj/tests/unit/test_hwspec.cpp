// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>

#include "lamosim/config_io.hpp"
#include "lamosim/hwspec.hpp"

namespace fs = std::filesystem;
using namespace lamosim;

namespace {

const fs::path kConfigs = LAMOSIM_CONFIG_DIR;

bool has_code(const std::vector<hw::ValidationIssue>& v, ErrorCode c) {
  for (const auto& i : v) {
    if (i.code == c) return true;
  }
  return false;
}

hw::SystemSpec one_chiplet() {
  hw::SystemSpec s;
  s.chiplets.push_back({0, 0, hw::ChipletSpec{}});
  return s;
}

}  // namespace

TEST(HwSpec, DefaultChipletIsValid) {
  EXPECT_TRUE(hw::validate_chiplet(hw::ChipletSpec{}).empty());
}

TEST(HwSpec, DerivedMetricsMatchHandComputation) {
  hw::ChipletSpec c;
  const auto m = hw::derive_chiplet_metrics(c);
  // 16 PEs x 16 cores x 32x32 array x 2 FLOP x 0.8 GHz
  EXPECT_DOUBLE_EQ(m.peak_flops, 16.0 * 16 * 32 * 32 * 2 * 800e6);
  // 256 banks x 256 bits x 1.294 GHz / 8
  EXPECT_DOUBLE_EQ(m.peak_bw, 256.0 * 256 * 1.294e9 / 8);
  EXPECT_DOUBLE_EQ(m.capacity, static_cast<double>(std::int64_t{32} << 30));
  const double area = 16 * (16 * (1.6 + 0.25 * 1.2) + 3.7);
  EXPECT_NEAR(m.area_mm2, area, 1e-9);
  const double power = m.peak_flops * 0.5e-12 + m.peak_bw * 8 * 0.7e-12 +
                       16 * (4.0 + 16 * 0.25) + 4 * 10.5 + 2.0;
  EXPECT_NEAR(m.peak_power, power, 1e-9);
  EXPECT_NEAR(m.arithmetic_intensity_knee, m.peak_flops / m.peak_bw, 1e-12);
}

TEST(HwSpec, InconsistentCapacityIsReported) {
  hw::ChipletSpec c;
  c.dram.capacity_bytes += 1;
  EXPECT_TRUE(has_code(hw::validate_chiplet(c), ErrorCode::InconsistentCapacity));
}

TEST(HwSpec, TooManyMemoryControllers) {
  hw::ChipletSpec c;
  c.pe.n_mc = 64;
  EXPECT_TRUE(has_code(hw::validate_chiplet(c), ErrorCode::InconsistentCapacity));
}

TEST(HwSpec, AreaAndPowerBudgets) {
  hw::ChipletSpec c;
  c.area_budget_mm2 = 10;
  EXPECT_TRUE(has_code(hw::validate_chiplet(c), ErrorCode::AreaExceeded));
  c = {};
  c.tdp_w = 10;
  EXPECT_TRUE(has_code(hw::validate_chiplet(c), ErrorCode::PowerExceeded));
}

TEST(HwSpec, RefreshLongerThanIntervalRejected) {
  hw::ChipletSpec c;
  c.dram.t_rfc_ns = c.dram.t_rfi_base_ns;
  EXPECT_TRUE(has_code(hw::validate_chiplet(c), ErrorCode::InvalidConfig));
}

TEST(HwSpec, SystemCollectsEveryIssue) {
  auto s = one_chiplet();
  s.chiplets.push_back(s.chiplets[0]);  // same name, same coordinate
  s.chiplets[1].chiplet.tdp_w = 1;
  const auto v = hw::validate_system(s);
  EXPECT_FALSE(v.ok());
  EXPECT_FALSE(v.system.has_value());
  EXPECT_GE(v.issues.size(), 3u);
  EXPECT_TRUE(has_code(v.issues, ErrorCode::PowerExceeded));
}

TEST(HwSpec, RackLimit) {
  auto s = one_chiplet();
  s.rack_power_limit_w = 100;
  EXPECT_TRUE(has_code(hw::validate_system(s).issues, ErrorCode::PowerExceeded));
}

TEST(HwSpec, EmptyMeshRejected) {
  hw::SystemSpec s;
  EXPECT_FALSE(hw::validate_system(s).ok());
}

TEST(HwSpec, ValidSystemCarriesMetrics) {
  const auto v = hw::validate_system(one_chiplet());
  ASSERT_TRUE(v.ok());
  ASSERT_EQ(v.system->metrics.size(), 1u);
  EXPECT_GT(v.system->metrics[0].peak_flops, 0);
}

TEST(HwSpec, LeakageRisesTwentyPercentOverFortyDegrees) {
  hw::ChipletSpec c;
  hw::CoolingSpec cool;
  for (auto model : {hw::LeakageModel::Linear, hw::LeakageModel::Exponential}) {
    cool.leakage_model = model;
    const double lo = hw::leakage_w(c, cool, 65.0);
    const double hi = hw::leakage_w(c, cool, 105.0);
    EXPECT_NEAR(hi / lo, 1.20, 0.005) << static_cast<int>(model);
    EXPECT_DOUBLE_EQ(lo, c.leak_base_w());
  }
}

TEST(HwSpec, LeakageMonotonicInTemperature) {
  hw::ChipletSpec c;
  hw::CoolingSpec cool;
  double prev = 0;
  for (double t = 20; t <= 130; t += 5) {
    const double w = hw::leakage_w(c, cool, t);
    EXPECT_GE(w, prev);
    prev = w;
  }
}

TEST(HwSpec, ModelWeightsAndKv) {
  hw::ModelSpec m;  // 8B-class defaults
  const std::int64_t per_layer =
      (4096LL * 4096 + 2LL * 4096 * 1024 + 4096LL * 4096 + 3LL * 4096 * 14336) * 2;
  EXPECT_EQ(m.weight_bytes_per_layer(), per_layer);
  EXPECT_EQ(m.kv_bytes_per_token_layer(), 2 * 8 * 128 * 2);
  EXPECT_EQ(m.kv_bytes(10, 3), 10 * 3 * m.kv_bytes_per_token_layer());
}

TEST(HwSpec, ModelThatDoesNotFit) {
  auto s = one_chiplet();
  hw::ModelSpec m;
  m.n_layers = 2000;
  EXPECT_TRUE(has_code(hw::check_model_fits(s, m), ErrorCode::CapacityExceeded));
  m.n_layers = 4;
  EXPECT_TRUE(hw::check_model_fits(s, m).empty());
}

TEST(HwSpec, InvalidModelRejected) {
  hw::ModelSpec m;
  m.n_kv_heads = 5;  // does not divide 32 heads
  EXPECT_FALSE(hw::validate_model(m).empty());
}

TEST(ConfigIo, ChipletRoundTrip) {
  hw::ChipletSpec c;
  c.name = "rt";
  c.pe.sram_bytes = 123456;
  c.dram.t_rcd_ns = 3.25;
  c.role = hw::ChipletRole::Decode;
  EXPECT_EQ(config::chiplet_from_json(config::to_json(c)), c);
}

TEST(ConfigIo, SystemAndModelRoundTrip) {
  const auto s = config::load_system(kConfigs / "system.json");
  EXPECT_EQ(config::system_from_json(config::to_json(s)), s);
  const auto m = config::load_model(kConfigs / "model_llama3_8b.json");
  EXPECT_EQ(config::model_from_json(config::to_json(m)), m);
}

TEST(ConfigIo, UnknownKeyRejected) {
  auto j = config::to_json(hw::ChipletSpec{});
  j["pe"]["sa_rowz"] = 4;
  try {
    config::chiplet_from_json(j);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
    EXPECT_NE(std::string(e.what()).find("sa_rowz"), std::string::npos);
  }
}

TEST(ConfigIo, MissingFileNamesPath) {
  try {
    config::load_system("/nonexistent/sys.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/sys.json"), std::string::npos);
  }
}

TEST(ConfigIo, ShippedConfigsValidate) {
  const auto s = config::load_system(kConfigs / "system.json");
  EXPECT_TRUE(hw::validate_system(s).ok());
  EXPECT_TRUE(hw::validate_chiplet(config::load_chiplet(kConfigs / "chiplet_dc.json")).empty());
  EXPECT_TRUE(hw::check_model_fits(s, config::load_model(kConfigs / "model_llama3_8b.json"))
                  .empty());
}

TEST(ConfigIo, HashStableUnderKeyOrder) {
  const auto a = nlohmann::json::parse(R"({"a":1,"b":[1,2]})");
  const auto b = nlohmann::json::parse(R"({"b":[1,2],"a":1})");
  EXPECT_EQ(config::config_hash(a), config::config_hash(b));
  EXPECT_NE(config::config_hash(a), config::config_hash(nlohmann::json::parse(R"({"a":2})")));
}

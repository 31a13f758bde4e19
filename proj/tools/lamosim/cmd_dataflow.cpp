// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <memory>
#include <sstream>

#include "lamosim/common.hpp"
#include "lamosim/config_io.hpp"
#include "lamosim/d3flow.hpp"
#include "lamosim/error.hpp"

namespace lamosim::cli {

namespace {

struct DataflowArgs {
  Common common;
  std::string pe = "chiplet_pc.json";
  std::string model;
  std::string shape;
  double temp_c = 65.0;
  std::string grid = "pow2";
  std::string policy;
  bool dump_all = false;
};

comp::GemmShape parse_shape(const std::string& s) {
  std::vector<std::int64_t> v;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stoll(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidRequest, "bad --shape '" + s + "', expected MxNxK[xG]");
    }
  }
  if (v.size() != 3 && v.size() != 4) {
    throw Error(ErrorCode::InvalidRequest, "bad --shape '" + s + "', expected MxNxK[xG]");
  }
  return comp::GemmShape::make(v[0], v[1], v[2], v.size() == 4 ? v[3] : 1);
}

int run(const DataflowArgs& a) {
  const fs::path out(a.common.out);
  report::Manifest man;
  man.command = "dataflow";
  man.seed = a.common.seed;
  const auto pe_path = resolve_config(a.pe);
  const auto chip_json = config::load_json_file(pe_path);
  const auto chip = config::chiplet_from_json(chip_json);
  man.config_hashes["pe"] = config::config_hash(chip_json);
  int dtype = 2;
  if (!a.model.empty()) {
    const auto mj = config::load_json_file(resolve_config(a.model));
    dtype = config::model_from_json(mj).dtype_bytes;
    man.config_hashes["model"] = config::config_hash(mj);
  }
  const auto shape = parse_shape(a.shape);
  d3::SearchOptions opt;
  opt.grid = a.grid == "divisors" ? d3::TileGrid::AllDivisors : d3::TileGrid::Pow2;
  if (!a.policy.empty()) opt.only = d3::policy_from_string(a.policy);
  comp::ComputeLut lut;
  opt.lut = &lut;
  const auto r = d3::search(shape, chip.pe, chip.dram, chip.clock_hz, a.temp_c, dtype, opt);
  report::write_json(out / "dataflow.json", report::to_json(shape, r));
  man.extra["evaluated"] = r.evaluated;
  if (a.dump_all) {
    man.extra["candidates"] =
        report::write_candidates_csv(out / "candidates.csv", shape, chip, a.temp_c, dtype, opt.grid);
  }
  report::write_manifest(out, man);
  std::printf("%-8s %-6s %-6s %-6s %-12s %-12s %s\n", "policy", "t_m", "t_n", "t_k", "latency_s",
              "energy_j", "evaluated");
  std::printf("%-8s %-6lld %-6lld %-6lld %-12.6g %-12.6g %lld\n",
              std::string(d3::to_string(r.best.policy)).c_str(),
              static_cast<long long>(r.best.tile.t_m), static_cast<long long>(r.best.tile.t_n),
              static_cast<long long>(r.best.tile.t_k), r.cost.latency, r.cost.energy,
              static_cast<long long>(r.evaluated));
  return kOk;
}

}  // namespace

void register_dataflow(CLI::App& app, int& rc) {
  auto a = std::make_shared<DataflowArgs>();
  auto* sub = app.add_subcommand("dataflow", "Search the best tiling and reuse policy for one GEMM");
  a->common.add(*sub);
  sub->add_option("--shape", a->shape, "GEMM shape MxNxK or MxNxKxG")->required();
  sub->add_option("--pe", a->pe, "Chiplet config supplying the PE and DRAM spec")
      ->capture_default_str();
  sub->add_option("--model", a->model, "Model config (only its dtype is used)");
  sub->add_option("--temp", a->temp_c, "DRAM temperature in C")->capture_default_str();
  sub->add_option("--grid", a->grid, "Tile grid")
      ->check(CLI::IsMember({"pow2", "divisors"}))
      ->capture_default_str();
  sub->add_option("--policy", a->policy, "Restrict to one reuse policy (IRU, WRU, ORU, ARU)")
      ->check(CLI::IsMember({"IRU", "WRU", "ORU", "ARU"}));
  sub->add_flag("--dump-all", a->dump_all, "Also write candidates.csv with every evaluated mapping");
  sub->callback([a, &rc] { rc = run_action(a->common.out, [a] { return run(*a); }); });
}

}  // namespace lamosim::cli

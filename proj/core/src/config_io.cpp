// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#include "lamosim/config_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "lamosim/hash.hpp"

namespace lamosim::config {

StrictObject::StrictObject(const json& j, std::string context)
    : j_(j), context_(std::move(context)) {
  if (!j_.is_object()) throw Error(ErrorCode::InvalidConfig, context_ + ": expected an object");
}

const json& StrictObject::child(const std::string& key) {
  used_.push_back(key);
  auto it = j_.find(key);
  if (it == j_.end()) throw_bad(key, "missing required key");
  return *it;
}

void StrictObject::finish() const {
  for (auto it = j_.begin(); it != j_.end(); ++it) {
    if (std::find(used_.begin(), used_.end(), it.key()) == used_.end()) {
      throw Error(ErrorCode::InvalidConfig, context_ + ": unknown field '" + it.key() + "'");
    }
  }
}

void StrictObject::throw_bad(const std::string& key, const std::string& why) const {
  throw Error(ErrorCode::InvalidConfig, context_ + "." + key + ": " + why);
}

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
}

std::uint64_t config_hash(const json& j) { return stable_hash(j.dump()); }

namespace {

void check_schema(StrictObject& o, const std::string& ctx) {
  const int v = o.get<int>("schema", kSchemaVersion);
  if (v != kSchemaVersion) {
    throw Error(ErrorCode::InvalidConfig,
                ctx + ": unsupported schema " + std::to_string(v));
  }
}

hw::ChipletRole role_from(const std::string& s) {
  if (s == "prefill") return hw::ChipletRole::Prefill;
  if (s == "decode") return hw::ChipletRole::Decode;
  throw Error(ErrorCode::InvalidConfig, "unknown chiplet role '" + s + "'");
}

hw::PeSpec pe_from_json(const json& j) {
  StrictObject o(j, "pe");
  hw::PeSpec d;
  hw::PeSpec p;
  p.n_core = o.get("n_core", d.n_core);
  p.sa_rows = o.get("sa_rows", d.sa_rows);
  p.sa_cols = o.get("sa_cols", d.sa_cols);
  p.base_sa_rows = o.get("base_sa_rows", d.base_sa_rows);
  p.sram_bytes = o.get("sram_bytes", d.sram_bytes);
  p.sram_banks = o.get("sram_banks", d.sram_banks);
  p.vector_regs = o.get("vector_regs", d.vector_regs);
  p.noc_flit_bits = o.get("noc_flit_bits", d.noc_flit_bits);
  p.n_mc = o.get("n_mc", d.n_mc);
  p.pj_per_flop = o.get("pj_per_flop", d.pj_per_flop);
  p.sram_pj_per_bit = o.get("sram_pj_per_bit", d.sram_pj_per_bit);
  p.pe_leak_w = o.get("pe_leak_w", d.pe_leak_w);
  p.core_leak_w = o.get("core_leak_w", d.core_leak_w);
  p.core_area_mm2 = o.get("core_area_mm2", d.core_area_mm2);
  p.sram_area_mm2_per_mib = o.get("sram_area_mm2_per_mib", d.sram_area_mm2_per_mib);
  p.pe_fixed_area_mm2 = o.get("pe_fixed_area_mm2", d.pe_fixed_area_mm2);
  o.finish();
  return p;
}

json pe_to_json(const hw::PeSpec& p) {
  return json{{"n_core", p.n_core},
              {"sa_rows", p.sa_rows},
              {"sa_cols", p.sa_cols},
              {"base_sa_rows", p.base_sa_rows},
              {"sram_bytes", p.sram_bytes},
              {"sram_banks", p.sram_banks},
              {"vector_regs", p.vector_regs},
              {"noc_flit_bits", p.noc_flit_bits},
              {"n_mc", p.n_mc},
              {"pj_per_flop", p.pj_per_flop},
              {"sram_pj_per_bit", p.sram_pj_per_bit},
              {"pe_leak_w", p.pe_leak_w},
              {"core_leak_w", p.core_leak_w},
              {"core_area_mm2", p.core_area_mm2},
              {"sram_area_mm2_per_mib", p.sram_area_mm2_per_mib},
              {"pe_fixed_area_mm2", p.pe_fixed_area_mm2}};
}

hw::DramStackSpec dram_from_json(const json& j) {
  StrictObject o(j, "dram");
  hw::DramStackSpec d;
  hw::DramStackSpec r;
  r.n_layer = o.get("n_layer", d.n_layer);
  r.n_bank = o.get("n_bank", d.n_bank);
  r.n_io = o.get("n_io_bits", d.n_io);
  r.burst_len = o.get("burst_len", d.burst_len);
  r.page_size = o.get("page_size_bytes", d.page_size);
  r.bank_capacity_bytes = o.get("bank_capacity_bytes", d.bank_capacity_bytes);
  r.capacity_bytes = o.get("capacity_bytes", r.total_banks() * r.bank_capacity_bytes);
  r.t_rcd_ns = o.get("t_rcd_ns", d.t_rcd_ns);
  r.t_cas_ns = o.get("t_cas_ns", d.t_cas_ns);
  r.t_rp_ns = o.get("t_rp_ns", d.t_rp_ns);
  r.t_rfc_ns = o.get("t_rfc_ns", d.t_rfc_ns);
  r.t_rfi_base_ns = o.get("t_rfi_base_ns", d.t_rfi_base_ns);
  r.io_clock_hz = o.get("io_clock_hz", d.io_clock_hz);
  r.energy_per_bit_pj = o.get("energy_per_bit_pj", d.energy_per_bit_pj);
  r.retention_base_temp_c = o.get("retention_base_temp_c", d.retention_base_temp_c);
  r.tsv_delay_ns = o.get("tsv_delay_ns", d.tsv_delay_ns);
  r.refresh_energy_per_cmd_pj = o.get("refresh_energy_per_cmd_pj", d.refresh_energy_per_cmd_pj);
  r.static_power_w_per_layer = o.get("static_power_w_per_layer", d.static_power_w_per_layer);
  r.refresh_power_w = o.get("refresh_power_w", d.refresh_power_w);
  o.finish();
  return r;
}

json dram_to_json(const hw::DramStackSpec& d) {
  return json{{"n_layer", d.n_layer},
              {"n_bank", d.n_bank},
              {"n_io_bits", d.n_io},
              {"burst_len", d.burst_len},
              {"page_size_bytes", d.page_size},
              {"bank_capacity_bytes", d.bank_capacity_bytes},
              {"capacity_bytes", d.capacity_bytes},
              {"t_rcd_ns", d.t_rcd_ns},
              {"t_cas_ns", d.t_cas_ns},
              {"t_rp_ns", d.t_rp_ns},
              {"t_rfc_ns", d.t_rfc_ns},
              {"t_rfi_base_ns", d.t_rfi_base_ns},
              {"io_clock_hz", d.io_clock_hz},
              {"energy_per_bit_pj", d.energy_per_bit_pj},
              {"retention_base_temp_c", d.retention_base_temp_c},
              {"tsv_delay_ns", d.tsv_delay_ns},
              {"refresh_energy_per_cmd_pj", d.refresh_energy_per_cmd_pj},
              {"static_power_w_per_layer", d.static_power_w_per_layer},
              {"refresh_power_w", d.refresh_power_w}};
}

hw::ChipletSpec chiplet_body_from(StrictObject& o) {
  hw::ChipletSpec d;
  hw::ChipletSpec c;
  c.name = o.get("name", d.name);
  c.role = role_from(o.get<std::string>("role", "prefill"));
  c.pe_rows = o.get("pe_rows", d.pe_rows);
  c.pe_cols = o.get("pe_cols", d.pe_cols);
  c.clock_hz = o.get("clock_hz", d.clock_hz);
  c.area_budget_mm2 = o.get("area_budget_mm2", d.area_budget_mm2);
  c.tdp_w = o.get("tdp_w", d.tdp_w);
  c.flops_calibration = o.get("flops_calibration", d.flops_calibration);
  if (o.has("pe")) c.pe = pe_from_json(o.child("pe"));
  if (o.has("dram")) c.dram = dram_from_json(o.child("dram"));
  return c;
}

hw::CoolingSpec cooling_from_json(const json& j) {
  StrictObject o(j, "cooling");
  hw::CoolingSpec d;
  hw::CoolingSpec c;
  c.ambient_c = o.get("ambient_c", d.ambient_c);
  c.r_coldplate = o.get("r_coldplate_c_per_w", d.r_coldplate);
  c.r_dram_layer = o.get("r_dram_layer_c_per_w", d.r_dram_layer);
  c.r_bond = o.get("r_bond_c_per_w", d.r_bond);
  c.r_lateral = o.get("r_lateral_c_per_w", d.r_lateral);
  c.t_limit_c = o.get("t_limit_c", d.t_limit_c);
  c.leak_coeff_per_c = o.get("leak_coeff_per_c", d.leak_coeff_per_c);
  c.leak_ref_c = o.get("leak_ref_c", d.leak_ref_c);
  const auto model = o.get<std::string>("leakage_model", "linear");
  if (model == "linear") {
    c.leakage_model = hw::LeakageModel::Linear;
  } else if (model == "exponential") {
    c.leakage_model = hw::LeakageModel::Exponential;
  } else {
    throw Error(ErrorCode::InvalidConfig, "cooling.leakage_model: unknown '" + model + "'");
  }
  c.c_logic_j_per_k = o.get("c_logic_j_per_k", d.c_logic_j_per_k);
  c.c_layer_j_per_k = o.get("c_layer_j_per_k", d.c_layer_j_per_k);
  c.calibration_required = o.get("calibration_required", d.calibration_required);
  if (o.has("flow_levels")) {
    c.flow_levels.clear();
    for (const auto& lv : o.child("flow_levels")) {
      StrictObject lo(lv, "cooling.flow_levels[]");
      hw::FlowLevel f;
      f.resistance_scale = lo.require<double>("resistance_scale");
      f.pump_power_w = lo.require<double>("pump_power_w");
      lo.finish();
      c.flow_levels.push_back(f);
    }
  }
  o.finish();
  return c;
}

json cooling_to_json(const hw::CoolingSpec& c) {
  json levels = json::array();
  for (const auto& f : c.flow_levels) {
    levels.push_back({{"resistance_scale", f.resistance_scale}, {"pump_power_w", f.pump_power_w}});
  }
  return json{{"ambient_c", c.ambient_c},
              {"r_coldplate_c_per_w", c.r_coldplate},
              {"r_dram_layer_c_per_w", c.r_dram_layer},
              {"r_bond_c_per_w", c.r_bond},
              {"r_lateral_c_per_w", c.r_lateral},
              {"flow_levels", levels},
              {"t_limit_c", c.t_limit_c},
              {"leak_coeff_per_c", c.leak_coeff_per_c},
              {"leak_ref_c", c.leak_ref_c},
              {"leakage_model",
               c.leakage_model == hw::LeakageModel::Linear ? "linear" : "exponential"},
              {"c_logic_j_per_k", c.c_logic_j_per_k},
              {"c_layer_j_per_k", c.c_layer_j_per_k},
              {"calibration_required", c.calibration_required}};
}

json chiplet_body_to_json(const hw::ChipletSpec& c) {
  return json{{"name", c.name},
              {"role", std::string(hw::to_string(c.role))},
              {"pe_rows", c.pe_rows},
              {"pe_cols", c.pe_cols},
              {"clock_hz", c.clock_hz},
              {"area_budget_mm2", c.area_budget_mm2},
              {"tdp_w", c.tdp_w},
              {"flops_calibration", c.flops_calibration},
              {"pe", pe_to_json(c.pe)},
              {"dram", dram_to_json(c.dram)}};
}

}  // namespace

hw::ChipletSpec chiplet_from_json(const json& j) {
  StrictObject o(j, "chiplet");
  check_schema(o, "chiplet");
  auto c = chiplet_body_from(o);
  o.finish();
  return c;
}

json to_json(const hw::ChipletSpec& c) {
  json j = chiplet_body_to_json(c);
  j["schema"] = kSchemaVersion;
  return j;
}

// Placement entries either embed a full chiplet or reference an entry of
// `chiplet_types` by name (`"type": "pc"`), optionally overriding its name.
hw::SystemSpec system_from_json(const json& j) {
  StrictObject o(j, "system");
  check_schema(o, "system");
  hw::SystemSpec d;
  hw::SystemSpec s;
  s.name = o.get("name", d.name);
  std::map<std::string, hw::ChipletSpec> types;
  if (o.has("chiplet_types")) {
    const auto& t = o.child("chiplet_types");
    if (!t.is_object()) throw Error(ErrorCode::InvalidConfig, "system.chiplet_types: expected object");
    for (auto it = t.begin(); it != t.end(); ++it) {
      StrictObject co(it.value(), "system.chiplet_types." + it.key());
      types[it.key()] = chiplet_body_from(co);
      co.finish();
    }
  }
  for (const auto& pj : o.child("placement")) {
    StrictObject po(pj, "system.placement[]");
    hw::PlacedChiplet pc;
    pc.x = po.require<int>("x");
    pc.y = po.require<int>("y");
    if (po.has("type")) {
      const auto type = po.get<std::string>("type", "");
      auto it = types.find(type);
      if (it == types.end()) {
        throw Error(ErrorCode::InvalidConfig, "system.placement: unknown chiplet type '" + type + "'");
      }
      pc.chiplet = it->second;
      pc.chiplet.name = po.get("name", pc.chiplet.name);
    } else {
      StrictObject co(po.child("chiplet"), "system.placement[].chiplet");
      pc.chiplet = chiplet_body_from(co);
      co.finish();
    }
    po.finish();
    s.chiplets.push_back(std::move(pc));
  }
  if (o.has("interconnect")) {
    StrictObject io(o.child("interconnect"), "system.interconnect");
    s.noc_bandwidth = io.get("noc_bandwidth_bytes_per_s", d.noc_bandwidth);
    s.nop_bandwidth = io.get("nop_bandwidth_bytes_per_s", d.nop_bandwidth);
    s.alpha_noc = io.get("alpha_noc_s_per_byte", 1.0 / s.noc_bandwidth);
    s.alpha_nop = io.get("alpha_nop_s_per_byte", 1.0 / s.nop_bandwidth);
    s.beta_noc = io.get("beta_noc_s_per_hop", d.beta_noc);
    s.beta_nop = io.get("beta_nop_s_per_hop", d.beta_nop);
    s.edge_hops = io.get("edge_hops", d.edge_hops);
    s.noc_pj_per_byte_hop = io.get("noc_pj_per_byte_hop", d.noc_pj_per_byte_hop);
    s.nop_pj_per_byte_hop = io.get("nop_pj_per_byte_hop", d.nop_pj_per_byte_hop);
    io.finish();
  }
  s.rack_power_limit_w = o.get("rack_power_limit_w", d.rack_power_limit_w);
  if (o.has("cooling")) s.cooling = cooling_from_json(o.child("cooling"));
  o.finish();
  return s;
}

json to_json(const hw::SystemSpec& s) {
  // Deduplicate identical chiplet bodies into chiplet_types.
  json types = json::object();
  std::vector<std::pair<std::string, hw::ChipletSpec>> seen;
  json placement = json::array();
  for (const auto& pc : s.chiplets) {
    hw::ChipletSpec body = pc.chiplet;
    std::string type;
    for (const auto& [name, spec] : seen) {
      hw::ChipletSpec cmp = spec;
      cmp.name = body.name;
      if (cmp == body) {
        type = name;
        break;
      }
    }
    if (type.empty()) {
      type = "t" + std::to_string(seen.size());
      seen.emplace_back(type, body);
      types[type] = chiplet_body_to_json(body);
    }
    placement.push_back({{"x", pc.x}, {"y", pc.y}, {"type", type}, {"name", body.name}});
  }
  return json{{"schema", kSchemaVersion},
              {"name", s.name},
              {"chiplet_types", types},
              {"placement", placement},
              {"interconnect",
               {{"noc_bandwidth_bytes_per_s", s.noc_bandwidth},
                {"nop_bandwidth_bytes_per_s", s.nop_bandwidth},
                {"alpha_noc_s_per_byte", s.alpha_noc},
                {"alpha_nop_s_per_byte", s.alpha_nop},
                {"beta_noc_s_per_hop", s.beta_noc},
                {"beta_nop_s_per_hop", s.beta_nop},
                {"edge_hops", s.edge_hops},
                {"noc_pj_per_byte_hop", s.noc_pj_per_byte_hop},
                {"nop_pj_per_byte_hop", s.nop_pj_per_byte_hop}}},
              {"rack_power_limit_w", s.rack_power_limit_w},
              {"cooling", cooling_to_json(s.cooling)}};
}

hw::ModelSpec model_from_json(const json& j) {
  StrictObject o(j, "model");
  check_schema(o, "model");
  hw::ModelSpec d;
  hw::ModelSpec m;
  m.name = o.get("name", d.name);
  m.n_layers = o.get("n_layers", d.n_layers);
  m.n_heads = o.get("n_heads", d.n_heads);
  m.n_kv_heads = o.get("n_kv_heads", d.n_kv_heads);
  m.d_head = o.get("d_head", d.d_head);
  m.d_model = o.get("d_model", d.d_model);
  m.d_ffn = o.get("d_ffn", d.d_ffn);
  const auto variant = o.get<std::string>("attn_variant", "GQA");
  if (variant == "MHA") {
    m.attn_variant = hw::AttnVariant::MHA;
  } else if (variant == "GQA") {
    m.attn_variant = hw::AttnVariant::GQA;
  } else {
    throw Error(ErrorCode::InvalidConfig, "model.attn_variant: unknown '" + variant + "'");
  }
  m.dtype_bytes = o.get("dtype_bytes", d.dtype_bytes);
  m.ffn_gated = o.get("ffn_gated", d.ffn_gated);
  o.finish();
  return m;
}

json to_json(const hw::ModelSpec& m) {
  return json{{"schema", kSchemaVersion},
              {"name", m.name},
              {"n_layers", m.n_layers},
              {"n_heads", m.n_heads},
              {"n_kv_heads", m.n_kv_heads},
              {"d_head", m.d_head},
              {"d_model", m.d_model},
              {"d_ffn", m.d_ffn},
              {"attn_variant", std::string(hw::to_string(m.attn_variant))},
              {"dtype_bytes", m.dtype_bytes},
              {"ffn_gated", m.ffn_gated}};
}

hw::SystemSpec load_system(const std::filesystem::path& path) {
  return system_from_json(load_json_file(path));
}

hw::ChipletSpec load_chiplet(const std::filesystem::path& path) {
  return chiplet_from_json(load_json_file(path));
}

hw::ModelSpec load_model(const std::filesystem::path& path) {
  return model_from_json(load_json_file(path));
}

}  // namespace lamosim::config

// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#include "lamosim/report_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "lamosim/error.hpp"
#include "lamosim/hash.hpp"

namespace lamosim::report {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write " + path.string());
  return out;
}

}  // namespace

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

json to_json(const sim::ServingMetrics& m) {
  return {{"completed", m.completed},
          {"requests", m.requests.size()},
          {"total_tokens", m.total_tokens},
          {"makespan_s", m.makespan},
          {"mean_ttft_s", m.mean_ttft},
          {"p50_ttft_s", m.p50_ttft},
          {"p99_ttft_s", m.p99_ttft},
          {"mean_tbt_s", m.mean_tbt},
          {"p99_tbt_s", m.p99_tbt},
          {"mean_e2e_s", m.mean_e2e},
          {"tpt_tokens_per_s", m.tpt},
          {"dynamic_energy_j", m.dynamic_energy},
          {"static_energy_j", m.static_energy},
          {"energy_j", m.energy},
          {"avg_power_w", m.avg_power},
          {"tokens_per_joule", m.tokens_per_joule},
          {"kv_wait_events", m.kv_wait_events},
          {"kv_overflow", m.kv_overflow},
          {"op_evaluations", m.op_evaluations}};
}

void write_metrics_csv(const fs::path& path, const sim::ServingMetrics& m) {
  auto out = open_out(path);
  out << "id,arrival_s,ttft_s,tbt_mean_s,e2e_s,tokens,completed,kv_overflow\n";
  for (const auto& r : m.requests) {
    out << r.id << ',' << num(r.arrival) << ',' << num(r.ttft) << ',' << num(r.tbt_mean) << ','
        << num(r.e2e) << ',' << r.tokens << ',' << (r.completed ? 1 : 0) << ','
        << (r.kv_overflow ? 1 : 0) << '\n';
  }
}

void write_activity_csv(const fs::path& path, const sim::ActivityTrace& a) {
  std::vector<std::vector<const sim::Interval*>> per_pe(a.pes.size());
  for (const auto& iv : a.intervals) per_pe.at(static_cast<std::size_t>(iv.pe)).push_back(&iv);
  auto out = open_out(path);
  out << "pe,start_s,end_s,kind,energy_j\n";
  auto row = [&](std::size_t pe, double s, double e, sim::ActivityKind k, double j) {
    out << pe << ',' << num(s) << ',' << num(e) << ',' << sim::to_string(k) << ',' << num(j)
        << '\n';
  };
  for (std::size_t pe = 0; pe < per_pe.size(); ++pe) {
    auto& v = per_pe[pe];
    std::stable_sort(v.begin(), v.end(),
                     [](const auto* x, const auto* y) { return x->start < y->start; });
    double t = 0;
    for (const auto* iv : v) {
      if (iv->start > t) row(pe, t, iv->start, sim::ActivityKind::Idle, 0.0);
      row(pe, iv->start, iv->end, iv->kind, iv->energy);
      t = std::max(t, iv->end);
    }
    if (a.makespan > t) row(pe, t, a.makespan, sim::ActivityKind::Idle, 0.0);
  }
}

json to_json(const comp::GemmShape& s, const d3::DataflowResult& r) {
  const auto& c = r.cost;
  return {{"shape", {{"m", s.m}, {"n", s.n}, {"k", s.k}, {"groups", s.groups}}},
          {"mapping",
           {{"t_m", r.best.tile.t_m},
            {"t_n", r.best.tile.t_n},
            {"t_k", r.best.tile.t_k},
            {"policy", std::string(d3::to_string(r.best.policy))}}},
          {"latency_s", c.latency},
          {"energy_j", c.energy},
          {"compute_s", c.compute_s},
          {"stream_s", c.stream_s},
          {"staged_s", c.staged_s},
          {"dram_bytes", c.dram_bytes},
          {"cycles", c.compute.cycles},
          {"utilization", c.compute.utilization},
          {"search_space_size", r.search_space_size},
          {"evaluated", r.evaluated}};
}

std::int64_t write_candidates_csv(const fs::path& path, const comp::GemmShape& s,
                                  const hw::ChipletSpec& c, double temp_c, int dtype_bytes,
                                  d3::TileGrid grid) {
  auto out = open_out(path);
  out << "t_m,t_n,t_k,policy,latency_s,energy_j,compute_s,stream_s,staged_s,dram_bytes\n";
  std::int64_t rows = 0;
  comp::ComputeLut lut;
  for (const auto& t : d3::enumerate_tilings(s, grid)) {
    for (auto p : d3::feasible_policies(t, c.pe.sram_bytes, dtype_bytes)) {
      const auto m = d3::evaluate(s, {t, p}, c.pe, c.dram, c.clock_hz, temp_c, dtype_bytes, &lut);
      out << t.t_m << ',' << t.t_n << ',' << t.t_k << ',' << d3::to_string(p) << ','
          << num(m.latency) << ',' << num(m.energy) << ',' << num(m.compute_s) << ','
          << num(m.stream_s) << ',' << num(m.staged_s) << ',' << num(m.dram_bytes) << '\n';
      ++rows;
    }
  }
  return rows;
}

void write_pareto_csv(const fs::path& path, const dse::ChipletDseResult& r) {
  auto out = open_out(path);
  out << "capacity_gib,id,set,peak_tflops,peak_bw_gbs,peak_power_w,area_mm2\n";
  auto rows = [&](const std::map<std::int64_t, std::vector<int>>& m, const char* set) {
    for (const auto& [cap, ids] : m) {
      for (int id : ids) {
        const auto& c = r.evaluated.at(static_cast<std::size_t>(id));
        out << num(static_cast<double>(cap) / static_cast<double>(std::int64_t{1} << 30)) << ','
            << id << ',' << set << ',' << num(c.metrics.peak_flops / 1e12) << ','
            << num(c.metrics.peak_bw / 1e9) << ',' << num(c.metrics.peak_power) << ','
            << num(c.metrics.area_mm2) << '\n';
      }
    }
  };
  rows(r.front, "front");
  rows(r.near, "near");
}

json to_json(const dse::ChipletDseResult& r) {
  json cands = json::array();
  for (const auto& c : r.evaluated) {
    cands.push_back({{"id", c.id},
                     {"point", c.point},
                     {"feasible", c.feasible},
                     {"reason", c.reason},
                     {"capacity_bytes", c.capacity_key},
                     {"peak_flops", c.metrics.peak_flops},
                     {"peak_bw", c.metrics.peak_bw},
                     {"peak_power_w", c.metrics.peak_power},
                     {"area_mm2", c.metrics.area_mm2}});
  }
  json front = json::object(), near = json::object();
  for (const auto& [cap, ids] : r.front) front[std::to_string(cap)] = ids;
  for (const auto& [cap, ids] : r.near) near[std::to_string(cap)] = ids;
  return {{"space_size", r.space_size},
          {"evaluations", r.evaluated.size()},
          {"candidates", cands},
          {"front", front},
          {"near", near}};
}

void write_ranking_csv(const fs::path& path, const dse::SystemDseResult& r) {
  auto out = open_out(path);
  out << "rank,id,pc,dc,counts,mapping,objective,tokens_per_joule,tpt,ttft_p99_s,tbt_p99_s,"
         "t_max_c,peak_power_w\n";
  int rank = 1;
  for (int id : r.ranked) {
    const auto it = std::find_if(r.evaluated.begin(), r.evaluated.end(),
                                 [&](const dse::SystemCandidate& c) { return c.id == id; });
    const auto& c = *it;
    out << rank++ << ',' << c.id << ',' << c.point.pc << ',' << c.point.dc << ','
        << c.point.counts << ',' << c.point.mapping << ',' << num(c.objective) << ','
        << num(c.tokens_per_joule) << ',' << num(c.tpt) << ',' << num(c.ttft_p99) << ','
        << num(c.tbt_p99) << ',' << num(c.t_max) << ',' << num(c.peak_power) << '\n';
  }
}

json to_json(const dse::SystemDseResult& r) {
  json cands = json::array();
  for (const auto& c : r.evaluated) cands.push_back(dse::to_json(c));
  return {{"space_size", r.space_size},
          {"exhaustive", r.exhaustive},
          {"evaluations", r.evaluated.size()},
          {"ranked", r.ranked},
          {"binding_histogram", r.binding_histogram},
          {"candidates", cands}};
}

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read " + path.string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return hex64(stable_hash(data));
}

void write_manifest(const fs::path& dir, const Manifest& m) {
  json results = json::object();
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto fn = e.path().filename();
    if (e.is_regular_file() && fn != "manifest.json" && fn != "timing.json") {
      names.insert(e.path().filename().string());
    }
  }
  for (const auto& n : names) results[n] = file_hash(dir / n);
  json hashes = json::object();
  for (const auto& [k, v] : m.config_hashes) hashes[k] = hex64(v);
  json j = {{"command", m.command},
            {"config_hashes", hashes},
            {"seed", m.seed},
            {"tool_version", kToolVersion},
            {"outputs", json(names)},
            {"results", results}};
  for (const auto& [k, v] : m.extra.items()) j[k] = v;
  write_json(dir / "manifest.json", j);
}

void write_timing(const fs::path& dir, double wall_time_s) {
  write_json(dir / "timing.json", {{"wall_time_s", wall_time_s}});
}

}  // namespace lamosim::report

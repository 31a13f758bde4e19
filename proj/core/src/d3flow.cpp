// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#include "lamosim/d3flow.hpp"

#include <algorithm>
#include <tuple>

#include "lamosim/memmodel.hpp"

namespace lamosim::d3 {

namespace {

std::vector<std::int64_t> candidates(std::int64_t dim, TileGrid grid) {
  std::vector<std::int64_t> out;
  if (grid == TileGrid::Pow2) {
    for (std::int64_t v = 1; v < dim; v *= 2) out.push_back(v);
    out.push_back(dim);
  } else {
    for (std::int64_t v = 1; v <= dim; ++v) {
      if (dim % v == 0) out.push_back(v);
    }
  }
  return out;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

double mem_time(double bytes, const hw::PeSpec& pe, const hw::DramStackSpec& dram, double temp,
                double* energy) {
  if (bytes <= 0) return 0.0;
  const auto c = mem::mem_access_bytes(bytes, pe.n_mc, dram, temp);
  *energy += c.energy;
  return c.latency;
}

}  // namespace

std::string_view to_string(ReusePolicy p) {
  switch (p) {
    case ReusePolicy::IRU: return "IRU";
    case ReusePolicy::WRU: return "WRU";
    case ReusePolicy::ORU: return "ORU";
    case ReusePolicy::ARU: return "ARU";
  }
  return "?";
}

ReusePolicy policy_from_string(std::string_view s) {
  for (auto p : kAllPolicies) {
    if (to_string(p) == s) return p;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown reuse policy '" + std::string(s) + "'");
}

std::vector<comp::TileMapping> enumerate_tilings(const comp::GemmShape& shape, TileGrid grid) {
  const auto ms = candidates(shape.m, grid);
  const auto ns = candidates(shape.n, grid);
  const auto ks = candidates(shape.k, grid);
  std::vector<comp::TileMapping> out;
  out.reserve(ms.size() * ns.size() * ks.size());
  for (auto m : ms) {
    for (auto n : ns) {
      for (auto k : ks) out.push_back({m, n, k});
    }
  }
  return out;
}

std::int64_t footprint_bytes(const comp::TileMapping& t, ReusePolicy p, int dtype_bytes) {
  const std::int64_t a = t.t_m * t.t_k;
  const std::int64_t b = t.t_n * t.t_k;
  const std::int64_t c = t.t_m * t.t_n;
  switch (p) {
    case ReusePolicy::IRU: return a * dtype_bytes;
    case ReusePolicy::WRU: return b * dtype_bytes;
    case ReusePolicy::ORU: return c * dtype_bytes;
    case ReusePolicy::ARU: return (a + b + c) * dtype_bytes;
  }
  return 0;
}

std::vector<ReusePolicy> feasible_policies(const comp::TileMapping& t, std::int64_t s_buf,
                                           int dtype_bytes) {
  std::vector<ReusePolicy> out;
  for (auto p : kAllPolicies) {
    if (footprint_bytes(t, p, dtype_bytes) <= s_buf) out.push_back(p);
  }
  return out;
}

MappingCost evaluate(const comp::GemmShape& shape, const Mapping& map, const hw::PeSpec& pe,
                     const hw::DramStackSpec& dram, double clock_hz, double temp_c,
                     int dtype_bytes, comp::ComputeLut* lut) {
  const auto& t = map.tile;
  const double e = dtype_bytes;
  const double g = static_cast<double>(shape.groups);
  const double a_full = g * shape.m * shape.k * e;
  const double b_full = g * shape.k * shape.n * e;
  const double c_full = g * shape.m * shape.n * e;
  const double tm = static_cast<double>(ceil_div(shape.m, t.t_m));
  const double tn = static_cast<double>(ceil_div(shape.n, t.t_n));
  const double tk = static_cast<double>(ceil_div(shape.k, t.t_k));

  // Staged bytes are loaded once into SRAM; streamed bytes are re-fetched
  // per reuse round. Partial sums spill (write + read back) between k tiles.
  double staged = 0;
  double streamed = 0;
  double staged_loads = 1;
  switch (map.policy) {
    case ReusePolicy::IRU:
      staged = a_full;
      streamed = tm * b_full + (2 * tk - 1) * c_full;
      staged_loads = tm * tk;
      break;
    case ReusePolicy::WRU:
      staged = b_full;
      streamed = tn * a_full + (2 * tk - 1) * c_full;
      staged_loads = tn * tk;
      break;
    case ReusePolicy::ORU:
      staged = c_full;
      streamed = tn * a_full + tm * b_full;
      staged_loads = tm * tn;
      break;
    case ReusePolicy::ARU:
      staged = tn * a_full + tm * b_full + c_full;
      streamed = 0;
      staged_loads = tm * tn * tk;
      break;
  }

  MappingCost c;
  c.compute = lut ? lut->get_or_compute(shape, t, pe) : comp::gemm_cycles(shape, t, pe);
  c.compute_s = static_cast<double>(c.compute.cycles) / pe.n_core / clock_hz;
  double dram_energy = 0;
  c.stream_s = mem_time(streamed, pe, dram, temp_c, &dram_energy);
  c.staged_s = mem_time(staged, pe, dram, temp_c, &dram_energy);
  // Each additional staged tile load pays the activate/precharge fill again.
  const double derate = mem::refresh_derate(dram, temp_c);
  const double fixed_s =
      (dram.t_rcd_ns + dram.t_cas_ns + dram.t_rp_ns + dram.tsv_delay_ns) * 1e-9 / (1.0 - derate);
  c.staged_s += (staged_loads - 1) * fixed_s;
  c.latency = std::max(c.compute_s, c.stream_s) + c.staged_s;
  c.dram_bytes = staged + streamed;
  c.energy = dram_energy + staged * 8.0 * pe.sram_pj_per_bit * 1e-12 + c.compute.energy;
  return c;
}

bool better(const MappingCost& a, const Mapping& ma, const MappingCost& b, const Mapping& mb) {
  auto key = [](const MappingCost& c, const Mapping& m) {
    return std::make_tuple(c.latency, c.energy, m.tile.t_m, m.tile.t_n, m.tile.t_k,
                           static_cast<int>(m.policy));
  };
  return key(a, ma) < key(b, mb);
}

DataflowResult search(const comp::GemmShape& shape, const hw::PeSpec& pe,
                      const hw::DramStackSpec& dram, double clock_hz, double temp_c,
                      int dtype_bytes, const SearchOptions& opt) {
  const auto tilings = enumerate_tilings(shape, opt.grid);
  DataflowResult r;
  r.search_space_size =
      static_cast<std::int64_t>(tilings.size()) * (opt.only ? 1 : std::int64_t{kAllPolicies.size()});
  bool found = false;
  for (const auto& t : tilings) {
    for (auto p : feasible_policies(t, pe.sram_bytes, dtype_bytes)) {
      if (opt.only && *opt.only != p) continue;
      const Mapping m{t, p};
      const auto c = evaluate(shape, m, pe, dram, clock_hz, temp_c, dtype_bytes, opt.lut);
      ++r.evaluated;
      if (!found || better(c, m, r.cost, r.best)) {
        r.best = m;
        r.cost = c;
        found = true;
      }
    }
  }
  if (!found) {
    throw Error(ErrorCode::NoFeasibleMapping,
                "no tiling fits " + std::to_string(pe.sram_bytes) + " B of SRAM");
  }
  return r;
}

}  // namespace lamosim::d3

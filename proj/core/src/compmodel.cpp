// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#include "lamosim/compmodel.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "lamosim/hash.hpp"

namespace lamosim::comp {

namespace {

// (size, count) pairs: full tiles plus the remainder tile.
std::array<std::pair<std::int64_t, std::int64_t>, 2> split(std::int64_t dim, std::int64_t tile) {
  return {{{tile, dim / tile}, {dim % tile, dim % tile ? 1 : 0}}};
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

}  // namespace

GemmShape GemmShape::make(std::int64_t m, std::int64_t n, std::int64_t k, std::int64_t groups) {
  if (m < 1 || n < 1 || k < 1 || groups < 1) {
    throw Error(ErrorCode::InvalidRequest, "GEMM dims must be >= 1");
  }
  return GemmShape{m, n, k, groups, m <= 8 ? GemmKind::GEMV : GemmKind::GEMM};
}

TileMapping whole(const GemmShape& s) { return TileMapping{s.m, s.n, s.k}; }

double sa_utilization(const GemmShape& shape, const hw::PeSpec& pe, int active_base_sas) {
  const int n_base = pe.n_base_sas();
  active_base_sas = std::clamp(active_base_sas, 1, n_base);
  if (shape.m >= pe.sa_rows) return 1.0;
  const double rows = static_cast<double>(active_base_sas) *
                      static_cast<double>(std::min<std::int64_t>(shape.m, pe.base_sa_rows));
  return std::min(1.0, rows / pe.sa_rows);
}

ComputeCost gemm_cycles(const GemmShape& shape, const TileMapping& t, const hw::PeSpec& pe) {
  if (t.t_m < 1 || t.t_n < 1 || t.t_k < 1) {
    throw Error(ErrorCode::InfeasibleTiling, "tile dims must be >= 1");
  }
  if (t.t_m > shape.m || t.t_n > shape.n || t.t_k > shape.k) {
    throw Error(ErrorCode::InfeasibleTiling, "tile larger than the problem");
  }
  const std::int64_t R = pe.sa_rows;
  const std::int64_t C = pe.sa_cols;
  const std::int64_t base = pe.base_sa_rows;
  const std::int64_t n_base = pe.n_base_sas();
  const std::int64_t g = shape.groups;

  std::int64_t cycles = 0;
  double active = 0;  // cell-cycles doing useful work
  for (auto [tm, cm] : split(shape.m, t.t_m)) {
    if (!cm) continue;
    for (auto [tn, cn] : split(shape.n, t.t_n)) {
      if (!cn) continue;
      for (auto [tk, ck] : split(shape.k, t.t_k)) {
        if (!ck) continue;
        const std::int64_t count = cm * cn * ck;
        const std::int64_t col_folds = ceil_div(tn, C);
        std::int64_t passes;
        std::int64_t pass_time;
        if (tm >= R) {
          passes = g * ceil_div(tm, R) * col_folds;
          pass_time = R + C + tk - 1;
        } else {
          const std::int64_t b = ceil_div(tm, base);
          const std::int64_t per_pass = std::max<std::int64_t>(1, n_base / b);
          passes = ceil_div(g, per_pass) * col_folds;
          pass_time = b * base + C + tk - 1;
        }
        cycles += count * passes * pass_time;
        active += static_cast<double>(count) * g * tm * tn * pass_time;
      }
    }
  }
  ComputeCost c;
  c.cycles = cycles;
  c.utilization = std::min(1.0, active / (static_cast<double>(cycles) * R * C));
  c.effective_cycles = static_cast<double>(cycles) / c.utilization;
  c.flops = shape.flops();
  c.energy = c.flops * pe.pj_per_flop * 1e-12;
  return c;
}

double vpu_cycles(double elements, const hw::PeSpec& pe) {
  return elements / static_cast<double>(pe.vector_regs);
}

std::uint64_t pe_hash(const hw::PeSpec& pe) {
  StableHasher h;
  h.i64(pe.n_core).i64(pe.sa_rows).i64(pe.sa_cols).i64(pe.base_sa_rows).i64(pe.sram_bytes);
  h.i64(pe.sram_banks).i64(pe.vector_regs).i64(pe.noc_flit_bits).i64(pe.n_mc);
  h.f64(pe.pj_per_flop).f64(pe.sram_pj_per_bit);
  return h.digest();
}

std::size_t MappingKeyHash::operator()(const MappingKey& k) const noexcept {
  StableHasher h;
  h.i64(k.shape.m).i64(k.shape.n).i64(k.shape.k).i64(k.shape.groups);
  h.i64(k.tiling.t_m).i64(k.tiling.t_n).i64(k.tiling.t_k).u64(k.pe_hash);
  return static_cast<std::size_t>(h.digest());
}

ComputeCost ComputeLut::get_or_compute(const GemmShape& shape, const TileMapping& tiling,
                                       const hw::PeSpec& pe) {
  const MappingKey key{shape, tiling, pe_hash(pe)};
  {
    std::shared_lock lock(mu_);
    auto it = table_.find(key);
    if (it != table_.end()) {
      ++hits_;
      return it->second;
    }
  }
  ++misses_;
  const ComputeCost cost = gemm_cycles(shape, tiling, pe);
  std::unique_lock lock(mu_);
  table_[key] = cost;
  return cost;
}

std::size_t ComputeLut::size() const {
  std::shared_lock lock(mu_);
  return table_.size();
}

void ComputeLut::clear() {
  std::unique_lock lock(mu_);
  table_.clear();
  hits_ = 0;
  misses_ = 0;
}

void ComputeLut::save(const std::filesystem::path& path, std::uint64_t tag) const {
  nlohmann::json entries = nlohmann::json::array();
  {
    std::shared_lock lock(mu_);
    for (const auto& [k, v] : table_) {
      entries.push_back({k.shape.m, k.shape.n, k.shape.k, k.shape.groups, k.tiling.t_m,
                         k.tiling.t_n, k.tiling.t_k, hex64(k.pe_hash), v.cycles, v.utilization,
                         v.effective_cycles, v.energy, v.flops});
    }
  }
  std::sort(entries.begin(), entries.end());
  std::ofstream out(path);
  out << nlohmann::json{{"tag", hex64(tag)}, {"entries", entries}}.dump() << '\n';
}

bool ComputeLut::load(const std::filesystem::path& path, std::uint64_t tag) {
  std::ifstream in(path);
  if (!in) return false;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception&) {
    return false;
  }
  if (j.value("tag", "") != hex64(tag)) return false;
  std::unique_lock lock(mu_);
  for (const auto& e : j.at("entries")) {
    MappingKey k;
    k.shape = GemmShape::make(e[0], e[1], e[2], e[3]);
    k.tiling = TileMapping{e[4], e[5], e[6]};
    k.pe_hash = std::stoull(e[7].get<std::string>(), nullptr, 16);
    ComputeCost v{e[8], e[9], e[10], e[11], e[12]};
    table_[k] = v;
  }
  return true;
}

}  // namespace lamosim::comp

// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#include "lamosim/commmodel.hpp"

#include <algorithm>
#include <cstdlib>

namespace lamosim::comm {

LinkParams LinkParams::from(const hw::SystemSpec& s) {
  return LinkParams{s.alpha_noc,  s.alpha_nop, s.beta_noc, s.beta_nop, s.edge_hops,
                    s.noc_pj_per_byte_hop, s.nop_pj_per_byte_hop};
}

Topology::Topology(const hw::SystemSpec& s) : links_(LinkParams::from(s)) {
  for (std::size_t i = 0; i < s.chiplets.size(); ++i) {
    const auto& pc = s.chiplets[i];
    dims_[{pc.x, pc.y}] = {pc.chiplet.pe_cols, pc.chiplet.pe_rows};
    index_[{pc.x, pc.y}] = static_cast<int>(i);
    pos_.emplace_back(pc.x, pc.y);
  }
}

bool Topology::contains(const MeshCoord& c) const {
  auto it = dims_.find({c.cx, c.cy});
  if (it == dims_.end()) return false;
  return c.px >= 0 && c.py >= 0 && c.px < it->second.first && c.py < it->second.second;
}

std::pair<int, int> Topology::pe_dims(int cx, int cy) const {
  auto it = dims_.find({cx, cy});
  if (it == dims_.end()) throw Error(ErrorCode::InvalidRequest, "no chiplet at position");
  return it->second;
}

int Topology::chiplet_index(int cx, int cy) const {
  auto it = index_.find({cx, cy});
  return it == index_.end() ? -1 : it->second;
}

std::vector<MeshCoord> Topology::pes_of(int idx) const {
  const auto [cx, cy] = pos_.at(static_cast<std::size_t>(idx));
  const auto [w, h] = pe_dims(cx, cy);
  std::vector<MeshCoord> out;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out.push_back({cx, cy, x, y});
  }
  return out;
}

double link_delay(double msg_bytes, double hops, Level level, const LinkParams& p) {
  return level == Level::NoC ? p.alpha_noc * msg_bytes + p.beta_noc * hops
                             : p.alpha_nop * msg_bytes + p.beta_nop * hops;
}

Hops manhattan(const MeshCoord& a, const MeshCoord& b, const Topology& topo) {
  const int dx = b.cx - a.cx;
  const int dy = b.cy - a.cy;
  if (dx == 0 && dy == 0) return {std::abs(a.px - b.px) + std::abs(a.py - b.py), 0};
  const auto [aw, ah] = topo.pe_dims(a.cx, a.cy);
  const auto [bw, bh] = topo.pe_dims(b.cx, b.cy);
  int exit = 0;
  if (dx != 0) {
    exit = dx > 0 ? aw - 1 - a.px : a.px;
  } else {
    exit = dy > 0 ? ah - 1 - a.py : a.py;
  }
  int entry = 0;
  if (dy != 0) {
    entry = dy > 0 ? b.py : bh - 1 - b.py;
  } else {
    entry = dx > 0 ? b.px : bw - 1 - b.px;
  }
  return {exit + entry + topo.links().edge_hops, std::abs(dx) + std::abs(dy)};
}

CommCost p2p_cost(const MeshCoord& a, const MeshCoord& b, double msg_bytes, const Topology& topo) {
  const auto& p = topo.links();
  const Hops h = manhattan(a, b, topo);
  if (h.noc == 0 && h.nop == 0) return {};
  const double alpha = h.nop > 0 ? std::max(p.alpha_noc, p.alpha_nop) : p.alpha_noc;
  CommCost c;
  c.seconds = alpha * msg_bytes + p.beta_noc * h.noc + p.beta_nop * h.nop;
  c.joules = msg_bytes * (p.noc_pj_per_byte_hop * h.noc + p.nop_pj_per_byte_hop * h.nop) * 1e-12;
  return c;
}

namespace {

CommCost star(const std::vector<MeshCoord>& group, const MeshCoord& center, double m,
              const Topology& topo) {
  const auto& p = topo.links();
  CommCost c;
  double serial = 0;
  double reach = 0;
  for (const auto& g : group) {
    if (g == center) continue;
    const Hops h = manhattan(center, g, topo);
    const bool off_chip = g.cx != center.cx || g.cy != center.cy;
    serial += (off_chip ? p.alpha_nop : p.alpha_noc) * m;
    reach = std::max(reach, p.beta_noc * h.noc + p.beta_nop * h.nop);
    c.joules += m * (p.noc_pj_per_byte_hop * h.noc + p.nop_pj_per_byte_hop * h.nop) * 1e-12;
  }
  c.seconds = serial + reach;
  return c;
}

}  // namespace

CommCost collective_cost(CollectiveKind kind, const std::vector<MeshCoord>& group,
                         const MeshCoord& center, double msg_bytes, const Topology& topo) {
  if (group.empty()) throw Error(ErrorCode::EmptyGroup, "collective over an empty group");
  // Bounding box in global PE coordinates (chiplet-major) must hold the center.
  auto lo = group.front();
  auto hi = group.front();
  for (const auto& g : group) {
    lo.cx = std::min(lo.cx, g.cx);
    lo.cy = std::min(lo.cy, g.cy);
    hi.cx = std::max(hi.cx, g.cx);
    hi.cy = std::max(hi.cy, g.cy);
    lo.px = std::min(lo.px, g.px);
    lo.py = std::min(lo.py, g.py);
    hi.px = std::max(hi.px, g.px);
    hi.py = std::max(hi.py, g.py);
  }
  const bool one_chiplet = lo.cx == hi.cx && lo.cy == hi.cy;
  const bool pe_outside = one_chiplet && (center.px < lo.px || center.px > hi.px ||
                                          center.py < lo.py || center.py > hi.py);
  if (center.cx < lo.cx || center.cx > hi.cx || center.cy < lo.cy || center.cy > hi.cy ||
      pe_outside || !topo.contains(center)) {
    throw Error(ErrorCode::InvalidRequest, "collective center outside the group bounding box");
  }
  if (group.size() == 1) return {};
  const CommCost one = star(group, center, msg_bytes, topo);
  if (kind == CollectiveKind::AllReduce) return {2 * one.seconds, 2 * one.joules};
  return one;
}

}  // namespace lamosim::comm

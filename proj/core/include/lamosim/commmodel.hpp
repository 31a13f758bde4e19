// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Alpha-beta link costs on the two-level mesh and center-based star
// collectives. A collective costs alpha * m per non-center member (the center
// port serializes the streams) plus beta times the farthest member's hops.

#pragma once

#include <map>
#include <utility>
#include <vector>

#include "lamosim/hwspec.hpp"

namespace lamosim::comm {

enum class Level { NoC, NoP };
enum class CollectiveKind { Multicast, Reduce, AllReduce };

struct MeshCoord {
  int cx = 0;  ///< chiplet column on the package
  int cy = 0;  ///< chiplet row
  int px = 0;  ///< PE column inside the chiplet
  int py = 0;  ///< PE row
  auto operator<=>(const MeshCoord&) const = default;
};

struct Hops {
  int noc = 0;
  int nop = 0;
  bool operator==(const Hops&) const = default;
};

struct CommCost {
  double seconds = 0;
  double joules = 0;
};

struct LinkParams {
  double alpha_noc = 5e-12;
  double alpha_nop = 1.25e-12;
  double beta_noc = 2.5e-9;
  double beta_nop = 10e-9;
  int edge_hops = 1;
  double noc_pj_per_byte_hop = 0.5;
  double nop_pj_per_byte_hop = 2.0;

  static LinkParams from(const hw::SystemSpec& s);
};

/// Package geometry: PE grid size of each placed chiplet.
class Topology {
 public:
  Topology() = default;
  explicit Topology(const hw::SystemSpec& s);

  const LinkParams& links() const { return links_; }
  LinkParams& links() { return links_; }
  bool contains(const MeshCoord& c) const;
  /// (pe_cols, pe_rows) of the chiplet at (cx, cy).
  std::pair<int, int> pe_dims(int cx, int cy) const;
  /// Index into SystemSpec::chiplets, or -1.
  int chiplet_index(int cx, int cy) const;
  /// Every PE of chiplet `idx`, row-major.
  std::vector<MeshCoord> pes_of(int idx) const;

 private:
  std::map<std::pair<int, int>, std::pair<int, int>> dims_;
  std::map<std::pair<int, int>, int> index_;
  std::vector<std::pair<int, int>> pos_;
  LinkParams links_;
};

double link_delay(double msg_bytes, double hops, Level level, const LinkParams& p);

/// NoP hops are the chiplet L1 distance. Across chiplets the NoC leg runs from
/// the source PE to the exit edge chosen by XY order, plus `edge_hops`, plus
/// from the entry edge to the destination PE.
Hops manhattan(const MeshCoord& a, const MeshCoord& b, const Topology& topo);

/// Time and energy of one point-to-point transfer.
CommCost p2p_cost(const MeshCoord& a, const MeshCoord& b, double msg_bytes, const Topology& topo);

/// Throws EmptyGroup for an empty group and InvalidRequest when the center is
/// outside the group's bounding box.
CommCost collective_cost(CollectiveKind kind, const std::vector<MeshCoord>& group,
                         const MeshCoord& center, double msg_bytes, const Topology& topo);

}  // namespace lamosim::comm

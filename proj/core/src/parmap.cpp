// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#include "lamosim/parmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <tuple>

#include "lamosim/compmodel.hpp"
#include "lamosim/d3flow.hpp"
#include "lamosim/hash.hpp"
#include "lamosim/opgraph.hpp"

namespace lamosim::par {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Box {
  int x0 = std::numeric_limits<int>::max();
  int y0 = std::numeric_limits<int>::max();
  int x1 = std::numeric_limits<int>::min();
  int y1 = std::numeric_limits<int>::min();
  void add(const PePoint& p) {
    x0 = std::min(x0, p.gx);
    y0 = std::min(y0, p.gy);
    x1 = std::max(x1, p.gx);
    y1 = std::max(y1, p.gy);
  }
  int span() const { return (x1 - x0) + (y1 - y0); }
};

TpGroup finish_group(const std::vector<PePoint>& pes, std::vector<int> members) {
  std::sort(members.begin(), members.end());
  Box b;
  for (int i : members) b.add(pes[static_cast<std::size_t>(i)]);
  TpGroup g;
  g.members = std::move(members);
  g.span = b.span();
  g.cx = (b.x0 + b.x1) / 2.0;
  g.cy = (b.y0 + b.y1) / 2.0;
  double best = kInf;
  for (int i : g.members) {
    const auto& p = pes[static_cast<std::size_t>(i)];
    const double d = std::abs(p.gx - g.cx) + std::abs(p.gy - g.cy);
    if (d < best) {
      best = d;
      g.center = i;
    }
  }
  return g;
}

double center_dist(const TpGroup& a, const TpGroup& b) {
  return std::abs(a.cx - b.cx) + std::abs(a.cy - b.cy);
}

// Shortest open path through all groups; Held-Karp when small, otherwise
// nearest-neighbour plus 2-opt. Returns the order and whether it is optimal.
std::pair<std::vector<int>, bool> best_chain(const std::vector<TpGroup>& g) {
  const int k = static_cast<int>(g.size());
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  if (k <= 2) return {order, true};
  if (k <= 12) {
    const int full = 1 << k;
    std::vector<double> dp(static_cast<std::size_t>(full) * k, kInf);
    std::vector<int> parent(static_cast<std::size_t>(full) * k, -1);
    auto at = [k](int mask, int last) { return static_cast<std::size_t>(mask) * k + last; };
    for (int i = 0; i < k; ++i) dp[at(1 << i, i)] = 0;
    for (int mask = 1; mask < full; ++mask) {
      for (int last = 0; last < k; ++last) {
        const double cur = dp[at(mask, last)];
        if (!(mask >> last & 1) || cur == kInf) continue;
        for (int nx = 0; nx < k; ++nx) {
          if (mask >> nx & 1) continue;
          const double v = cur + center_dist(g[static_cast<std::size_t>(last)],
                                             g[static_cast<std::size_t>(nx)]);
          const std::size_t slot = at(mask | 1 << nx, nx);
          if (v < dp[slot]) {
            dp[slot] = v;
            parent[slot] = last;
          }
        }
      }
    }
    int last = 0;
    for (int i = 1; i < k; ++i) {
      if (dp[at(full - 1, i)] < dp[at(full - 1, last)]) last = i;
    }
    int mask = full - 1;
    for (int pos = k - 1; pos >= 0; --pos) {
      order[static_cast<std::size_t>(pos)] = last;
      const int p = parent[at(mask, last)];
      mask &= ~(1 << last);
      last = p;
    }
    return {order, true};
  }
  std::vector<bool> used(static_cast<std::size_t>(k), false);
  order.assign(1, 0);
  used[0] = true;
  while (static_cast<int>(order.size()) < k) {
    int best = -1;
    for (int j = 0; j < k; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      if (best < 0 || center_dist(g[static_cast<std::size_t>(order.back())], g[static_cast<std::size_t>(j)]) <
                          center_dist(g[static_cast<std::size_t>(order.back())], g[static_cast<std::size_t>(best)])) {
        best = j;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    order.push_back(best);
  }
  auto len = [&](const std::vector<int>& o) {
    double s = 0;
    for (std::size_t i = 1; i < o.size(); ++i) {
      s += center_dist(g[static_cast<std::size_t>(o[i - 1])], g[static_cast<std::size_t>(o[i])]);
    }
    return s;
  };
  for (bool improved = true; improved;) {
    improved = false;
    for (int i = 0; i < k - 1; ++i) {
      for (int j = i + 1; j < k; ++j) {
        auto cand = order;
        std::reverse(cand.begin() + i, cand.begin() + j + 1);
        if (len(cand) + 1e-12 < len(order)) {
          order = cand;
          improved = true;
        }
      }
    }
  }
  return {order, false};
}

// Any open path through the centers is at least the spanning-tree length.
double mst_length(const std::vector<TpGroup>& g) {
  const std::size_t k = g.size();
  if (k < 2) return 0.0;
  std::vector<double> dist(k, kInf);
  std::vector<bool> in(k, false);
  dist[0] = 0;
  double total = 0;
  for (std::size_t it = 0; it < k; ++it) {
    std::size_t u = k;
    for (std::size_t i = 0; i < k; ++i) {
      if (!in[i] && (u == k || dist[i] < dist[u])) u = i;
    }
    in[u] = true;
    total += dist[u];
    for (std::size_t i = 0; i < k; ++i) {
      if (!in[i]) dist[i] = std::min(dist[i], center_dist(g[u], g[i]));
    }
  }
  return total;
}

struct Solution {
  std::vector<TpGroup> groups;
  double objective = kInf;
  bool chain_exact = true;
};

Solution score(std::vector<TpGroup> groups, double w_inter) {
  Solution s;
  double spans = 0;
  for (const auto& g : groups) spans += g.span;
  auto [order, exact] = best_chain(groups);
  s.chain_exact = exact || w_inter == 0.0;
  for (int i : order) s.groups.push_back(groups[static_cast<std::size_t>(i)]);
  s.objective = spans + w_inter * chain_length(s.groups);
  return s;
}

// Seeds: row-major box tilings for each factorization, completed greedily.
Solution incumbent(const std::vector<PePoint>& pes, int tp, int k, double w_inter) {
  std::map<std::pair<int, int>, int> at;
  int gx0 = std::numeric_limits<int>::max();
  int gy0 = gx0;
  int gx1 = std::numeric_limits<int>::min();
  int gy1 = gx1;
  for (std::size_t i = 0; i < pes.size(); ++i) {
    at[{pes[i].gx, pes[i].gy}] = static_cast<int>(i);
    gx0 = std::min(gx0, pes[i].gx);
    gy0 = std::min(gy0, pes[i].gy);
    gx1 = std::max(gx1, pes[i].gx);
    gy1 = std::max(gy1, pes[i].gy);
  }
  Solution best;
  for (int a = 1; a <= tp; ++a) {
    if (tp % a) continue;
    const int b = tp / a;
    std::vector<bool> used(pes.size(), false);
    std::vector<TpGroup> groups;
    for (int y = gy0; y + b - 1 <= gy1 && static_cast<int>(groups.size()) < k; y += b) {
      for (int x = gx0; x + a - 1 <= gx1 && static_cast<int>(groups.size()) < k; x += a) {
        std::vector<int> members;
        for (int dy = 0; dy < b; ++dy) {
          for (int dx = 0; dx < a; ++dx) {
            auto it = at.find({x + dx, y + dy});
            if (it != at.end() && !used[static_cast<std::size_t>(it->second)]) {
              members.push_back(it->second);
            }
          }
        }
        if (static_cast<int>(members.size()) != tp) continue;
        for (int m : members) used[static_cast<std::size_t>(m)] = true;
        groups.push_back(finish_group(pes, members));
      }
    }
    while (static_cast<int>(groups.size()) < k) {
      int anchor = -1;
      for (std::size_t i = 0; i < pes.size(); ++i) {
        if (!used[i]) {
          anchor = static_cast<int>(i);
          break;
        }
      }
      std::vector<int> free;
      for (std::size_t i = 0; i < pes.size(); ++i) {
        if (!used[i]) free.push_back(static_cast<int>(i));
      }
      const auto& ap = pes[static_cast<std::size_t>(anchor)];
      std::stable_sort(free.begin(), free.end(), [&](int l, int r) {
        const auto& pl = pes[static_cast<std::size_t>(l)];
        const auto& pr = pes[static_cast<std::size_t>(r)];
        return std::abs(pl.gx - ap.gx) + std::abs(pl.gy - ap.gy) <
               std::abs(pr.gx - ap.gx) + std::abs(pr.gy - ap.gy);
      });
      free.resize(static_cast<std::size_t>(tp));
      for (int m : free) used[static_cast<std::size_t>(m)] = true;
      groups.push_back(finish_group(pes, free));
    }
    auto s = score(std::move(groups), w_inter);
    if (s.objective < best.objective) best = std::move(s);
  }
  return best;
}

class Search {
 public:
  Search(const std::vector<PePoint>& pes, int tp, int k, const TpGroupOptions& opt, Solution best)
      : pes_(pes), tp_(tp), k_(k), opt_(opt), best_(std::move(best)),
        spares_(static_cast<int>(pes.size()) - k * tp), lb_(min_span(tp)),
        used_(pes.size(), false) {}

  void run() { next_group(0, 0); }
  Solution& best() { return best_; }
  bool complete() const { return !aborted_; }
  std::int64_t nodes() const { return nodes_; }

 private:
  bool bounded(double partial, int groups_left) const {
    return partial + static_cast<double>(groups_left) * lb_ >= best_.objective - 1e-9;
  }

  void next_group(double spans, int spares_used) {
    if (aborted_) return;
    if (static_cast<int>(open_.size()) == k_) {
      if (spans + opt_.w_inter * mst_length(open_) >= best_.objective - 1e-9) return;
      auto s = score(open_, opt_.w_inter);
      if (s.objective < best_.objective - 1e-9) best_ = std::move(s);
      return;
    }
    if (bounded(spans, k_ - static_cast<int>(open_.size()))) return;
    int anchor = -1;
    for (std::size_t i = 0; i < pes_.size(); ++i) {
      if (!used_[i]) {
        anchor = static_cast<int>(i);
        break;
      }
    }
    if (anchor < 0) return;
    // The caller's member list is still live when a group completes.
    auto saved = std::move(members_);
    used_[static_cast<std::size_t>(anchor)] = true;
    members_ = {anchor};
    Box b;
    b.add(pes_[static_cast<std::size_t>(anchor)]);
    extend(b, anchor, spans, spares_used);
    if (spares_used < spares_) next_group(spans, spares_used + 1);
    used_[static_cast<std::size_t>(anchor)] = false;
    members_ = std::move(saved);
  }

  void extend(const Box& box, int last, double spans, int spares_used) {
    if (aborted_) return;
    if (++nodes_ > opt_.node_limit) {
      aborted_ = true;
      return;
    }
    const int groups_left = k_ - static_cast<int>(open_.size()) - 1;
    if (static_cast<int>(members_.size()) == tp_) {
      open_.push_back(finish_group(pes_, members_));
      next_group(spans + box.span(), spares_used);
      open_.pop_back();
      return;
    }
    for (std::size_t j = static_cast<std::size_t>(last) + 1; j < pes_.size(); ++j) {
      if (used_[j]) continue;
      Box nb = box;
      nb.add(pes_[j]);
      if (bounded(spans + std::max(nb.span(), lb_), groups_left)) continue;
      used_[j] = true;
      members_.push_back(static_cast<int>(j));
      extend(nb, static_cast<int>(j), spans, spares_used);
      members_.pop_back();
      used_[j] = false;
      if (aborted_) return;
    }
  }

  const std::vector<PePoint>& pes_;
  int tp_;
  int k_;
  TpGroupOptions opt_;
  Solution best_;
  int spares_;
  int lb_;
  std::vector<bool> used_;
  std::vector<int> members_;
  std::vector<TpGroup> open_;
  std::int64_t nodes_ = 0;
  bool aborted_ = false;
};

}  // namespace

std::string_view to_string(Phase p) { return p == Phase::Prefill ? "prefill" : "decode"; }

std::vector<PePoint> pe_points(const hw::SystemSpec& sys, const std::vector<int>& chiplets) {
  int w = 1;
  int h = 1;
  for (const auto& pc : sys.chiplets) {
    w = std::max(w, pc.chiplet.pe_cols);
    h = std::max(h, pc.chiplet.pe_rows);
  }
  std::vector<PePoint> out;
  for (int idx : chiplets) {
    const auto& pc = sys.chiplets.at(static_cast<std::size_t>(idx));
    for (int y = 0; y < pc.chiplet.pe_rows; ++y) {
      for (int x = 0; x < pc.chiplet.pe_cols; ++x) {
        out.push_back({{pc.x, pc.y, x, y}, pc.x * w + x, pc.y * h + y});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const PePoint& a, const PePoint& b) {
    return std::tie(a.gy, a.gx) < std::tie(b.gy, b.gx);
  });
  return out;
}

int min_span(int tp) {
  int best = std::numeric_limits<int>::max();
  for (int a = 1; a <= tp; ++a) best = std::min(best, a + (tp + a - 1) / a - 2);
  return best;
}

double chain_length(const std::vector<TpGroup>& groups) {
  double s = 0;
  for (std::size_t i = 1; i < groups.size(); ++i) s += center_dist(groups[i - 1], groups[i]);
  return s;
}

TpGrouping tp_group(const std::vector<PePoint>& pes, int tp, const TpGroupOptions& opt) {
  if (tp < 1) throw Error(ErrorCode::InvalidRequest, "tp must be >= 1");
  const int p = static_cast<int>(pes.size());
  if (p < tp) {
    throw Error(ErrorCode::Infeasible,
                "tp " + std::to_string(tp) + " exceeds the " + std::to_string(p) + " available PEs");
  }
  const int k = p / tp;
  Search s(pes, tp, k, opt, incumbent(pes, tp, k, opt.w_inter));
  s.run();
  TpGrouping r;
  r.tp = tp;
  r.groups = std::move(s.best().groups);
  r.objective = s.best().objective;
  r.exact = s.complete() && s.best().chain_exact;
  r.nodes = s.nodes();
  return r;
}

std::vector<std::pair<int, int>> split_layers(int n_layers, int n_stages) {
  std::vector<std::pair<int, int>> out;
  int begin = 0;
  for (int s = 0; s < n_stages; ++s) {
    const int len = n_layers / n_stages + (s < n_layers % n_stages ? 1 : 0);
    out.emplace_back(begin, begin + len);
    begin += len;
  }
  return out;
}

PlacementProblem::PlacementProblem(const std::vector<PePoint>& pes, const TpGrouping& g,
                                   int n_stages, const StageCosts& costs,
                                   const comm::Topology& topo)
    : n_stages_(n_stages), n_groups_(static_cast<int>(g.groups.size())) {
  const int n_layers = static_cast<int>(costs.layer_s.size());
  const auto ranges = split_layers(n_layers, n_stages);
  std::vector<double> allreduce(g.groups.size(), 0.0);
  for (std::size_t k = 0; k < g.groups.size(); ++k) {
    std::vector<comm::MeshCoord> coords;
    for (int m : g.groups[k].members) coords.push_back(pes[static_cast<std::size_t>(m)].coord);
    const auto center = pes[static_cast<std::size_t>(g.groups[k].center)].coord;
    allreduce[k] = comm::collective_cost(comm::CollectiveKind::AllReduce, coords, center,
                                         costs.allreduce_bytes, topo)
                       .seconds;
  }
  stage_.assign(static_cast<std::size_t>(n_stages), std::vector<double>(g.groups.size(), 0.0));
  for (int s = 0; s < n_stages; ++s) {
    const auto [b, e] = ranges[static_cast<std::size_t>(s)];
    double compute = 0;
    for (int l = b; l < e; ++l) compute += costs.layer_s[static_cast<std::size_t>(l)];
    for (std::size_t k = 0; k < g.groups.size(); ++k) {
      stage_[static_cast<std::size_t>(s)][k] = compute + 2.0 * (e - b) * allreduce[k];
    }
  }
  transfer_.assign(g.groups.size(), std::vector<double>(g.groups.size(), 0.0));
  for (std::size_t a = 0; a < g.groups.size(); ++a) {
    for (std::size_t b = 0; b < g.groups.size(); ++b) {
      transfer_[a][b] = comm::p2p_cost(pes[static_cast<std::size_t>(g.groups[a].center)].coord,
                                       pes[static_cast<std::size_t>(g.groups[b].center)].coord,
                                       costs.transfer_bytes, topo)
                            .seconds;
    }
  }
}

double PlacementProblem::stage_cost(int stage, int group) const {
  return stage_[static_cast<std::size_t>(stage)][static_cast<std::size_t>(group)];
}

double PlacementProblem::transfer_cost(int from, int to) const {
  return transfer_[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)];
}

double PlacementProblem::objective(const std::vector<int>& sg) const {
  double v = 0;
  for (std::size_t s = 0; s < sg.size(); ++s) {
    v += stage_cost(static_cast<int>(s), sg[s]);
    if (s > 0) v += transfer_cost(sg[s - 1], sg[s]);
  }
  return v;
}

StagePlacement place_stages(const PlacementProblem& prob, std::uint64_t seed,
                            const AnnealOptions& opt, const std::vector<int>& banned) {
  const int n = prob.n_stages();
  std::vector<bool> blocked(static_cast<std::size_t>(prob.n_groups()), false);
  for (int b : banned) blocked[static_cast<std::size_t>(b)] = true;
  std::vector<int> free;
  for (int g = 0; g < prob.n_groups(); ++g) {
    if (!blocked[static_cast<std::size_t>(g)]) free.push_back(g);
  }
  if (static_cast<int>(free.size()) < n) {
    throw Error(ErrorCode::TooManyStages, std::to_string(n) + " stages but only " +
                                              std::to_string(free.size()) + " free groups");
  }

  // Greedy start: each stage takes the cheapest free group given its predecessor.
  std::vector<int> cur;
  std::vector<bool> taken = blocked;
  for (int s = 0; s < n; ++s) {
    int pick = -1;
    double pick_cost = kInf;
    for (int g : free) {
      if (taken[static_cast<std::size_t>(g)]) continue;
      double c = prob.stage_cost(s, g);
      if (s > 0) c += prob.transfer_cost(cur.back(), g);
      if (c < pick_cost) {
        pick_cost = c;
        pick = g;
      }
    }
    taken[static_cast<std::size_t>(pick)] = true;
    cur.push_back(pick);
  }
  StagePlacement out;
  out.initial_objective = prob.objective(cur);
  out.stage_group = cur;
  out.objective = out.initial_objective;

  std::vector<int> idle;
  for (int g : free) {
    if (!taken[static_cast<std::size_t>(g)]) idle.push_back(g);
  }
  if (idle.empty() && n < 2) return out;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double cur_obj = out.initial_objective;
  const double t0 = std::max(out.initial_objective * opt.t0_fraction, 1e-15);
  const double t_end = t0 * opt.t_min_fraction / opt.t0_fraction;
  for (double temp = t0; temp > t_end; temp *= opt.cooling) {
    for (int it = 0; it < opt.iters_per_temp; ++it) {
      auto cand = cur;
      auto cand_idle = idle;
      const bool replace = !idle.empty() && (n < 2 || unit(rng) < 0.5);
      if (replace) {
        const auto s = static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n));
        const auto u = static_cast<std::size_t>(rng() % cand_idle.size());
        std::swap(cand[s], cand_idle[u]);
      } else {
        const auto a = static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n));
        auto b = static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n - 1));
        if (b >= a) ++b;
        std::swap(cand[a], cand[b]);
      }
      const double v = prob.objective(cand);
      const double delta = v - cur_obj;
      if (delta <= 0 || unit(rng) < std::exp(-delta / temp)) {
        cur = std::move(cand);
        idle = std::move(cand_idle);
        cur_obj = v;
        if (v < out.objective) {
          out.objective = v;
          out.stage_group = cur;
        }
      }
    }
  }
  return out;
}

std::vector<comm::MeshCoord> MappingPlan::group_coords(int group) const {
  std::vector<comm::MeshCoord> out;
  for (int m : grouping.groups.at(static_cast<std::size_t>(group)).members) {
    out.push_back(pes[static_cast<std::size_t>(m)].coord);
  }
  return out;
}

comm::MeshCoord MappingPlan::center_coord(int group) const {
  return pes[static_cast<std::size_t>(grouping.groups.at(static_cast<std::size_t>(group)).center)]
      .coord;
}

int MappingPlan::stage_of_layer(int layer) const {
  for (std::size_t s = 0; s < stage_layers.size(); ++s) {
    if (layer >= stage_layers[s].first && layer < stage_layers[s].second) return static_cast<int>(s);
  }
  return -1;
}

namespace {

std::vector<int> role_pool(const hw::SystemSpec& sys, hw::ChipletRole role) {
  std::vector<int> out;
  for (std::size_t i = 0; i < sys.chiplets.size(); ++i) {
    if (sys.chiplets[i].chiplet.role == role) out.push_back(static_cast<int>(i));
  }
  if (out.empty()) {
    for (std::size_t i = 0; i < sys.chiplets.size(); ++i) out.push_back(static_cast<int>(i));
  }
  return out;
}

double layer_seconds(const std::vector<ops::Op>& layer_ops, const hw::ChipletSpec& c, int dtype) {
  double s = 0;
  for (const auto& op : layer_ops) {
    if (op.kind == ops::OpKind::Gemm) {
      s += d3::search(op.shape, c.pe, c.dram, c.clock_hz, 65.0, dtype).cost.latency;
    } else if (op.kind == ops::OpKind::Vector) {
      s += comp::vpu_cycles(op.elements, c.pe) / c.pe.n_core / c.clock_hz;
    }
  }
  return s;
}

}  // namespace

MappingPlan plan_phase(const hw::SystemSpec& sys, const hw::ModelSpec& model, Phase phase, int tp,
                       int pp, const PlanOptions& opt) {
  const comm::Topology topo(sys);
  if (tp < 1 || pp < 1) throw Error(ErrorCode::InvalidRequest, "tp and pp must be >= 1");
  if (pp > model.n_layers) {
    throw Error(ErrorCode::TooManyStages, "more pipeline stages than model layers");
  }
  MappingPlan plan;
  plan.phase = phase;
  plan.tp = tp;
  plan.pp = pp;
  plan.chiplets = role_pool(sys, phase == Phase::Prefill ? hw::ChipletRole::Prefill
                                                          : hw::ChipletRole::Decode);
  plan.pes = pe_points(sys, plan.chiplets);
  plan.grouping = tp_group(plan.pes, tp, {opt.w_inter, opt.node_limit});
  plan.stage_layers = split_layers(model.n_layers, pp);
  const int k = static_cast<int>(plan.grouping.groups.size());
  if (k < pp) {
    throw Error(ErrorCode::TooManyStages, std::string(to_string(phase)) + ": " +
                                              std::to_string(pp) + " stages but only " +
                                              std::to_string(k) + " TP groups");
  }

  // Capacity: every group must hold the largest stage's weights plus KV budget.
  int max_layers = 0;
  for (auto [b, e] : plan.stage_layers) max_layers = std::max(max_layers, e - b);
  const std::int64_t kv_tokens =
      phase == Phase::Prefill ? opt.prefill_kv_tokens : opt.decode_kv_tokens;
  const std::int64_t need = model.weight_bytes_per_layer() * max_layers +
                            model.kv_bytes(kv_tokens, max_layers);
  std::vector<int> banned;
  std::string first_bad;
  for (int g = 0; g < k; ++g) {
    std::int64_t have = 0;
    for (const auto& c : plan.group_coords(g)) {
      have += sys.chiplets[static_cast<std::size_t>(topo.chiplet_index(c.cx, c.cy))]
                  .chiplet.dram_per_pe_bytes();
    }
    if (have < need) {
      banned.push_back(g);
      if (first_bad.empty()) {
        first_bad = std::string(to_string(phase)) + " group " + std::to_string(g) + " has " +
                    std::to_string(have) + " B of DRAM but needs " + std::to_string(need) + " B";
      }
    }
  }
  if (k - static_cast<int>(banned.size()) < pp) throw Error(ErrorCode::CapacityExceeded, first_bad);

  const auto& chip = sys.chiplets[static_cast<std::size_t>(plan.chiplets.front())].chiplet;
  StageCosts costs;
  std::int64_t probe_tokens;
  std::vector<ops::Op> layer_ops;
  if (phase == Phase::Prefill) {
    probe_tokens = opt.probe_prefill_tokens;
    layer_ops = ops::prefill_layer(model, tp, {probe_tokens});
  } else {
    probe_tokens = opt.probe_decode_batch;
    layer_ops = ops::decode_layer(
        model, tp, std::vector<std::int64_t>(static_cast<std::size_t>(probe_tokens), 1024));
  }
  costs.layer_s.assign(static_cast<std::size_t>(model.n_layers),
                       layer_seconds(layer_ops, chip, model.dtype_bytes));
  costs.allreduce_bytes = tp > 1 ? ops::activation_bytes(model, probe_tokens) : 0.0;
  costs.transfer_bytes = ops::activation_bytes(model, probe_tokens);
  const PlacementProblem prob(plan.pes, plan.grouping, pp, costs, topo);

  int dp_cap = phase == Phase::Prefill ? opt.max_dp_prefill : opt.max_dp_decode;
  if (dp_cap <= 0) dp_cap = std::numeric_limits<int>::max();
  for (int i = 0; i < dp_cap; ++i) {
    if (k - static_cast<int>(banned.size()) < pp) break;
    const auto seed = derive_seed(opt.seed, std::string("place/") + std::string(to_string(phase)) +
                                                "/" + std::to_string(i));
    const auto placed = place_stages(prob, seed, opt.anneal, banned);
    if (i == 0) plan.objective = placed.objective;
    plan.instances.push_back({placed.stage_group});
    banned.insert(banned.end(), placed.stage_group.begin(), placed.stage_group.end());
  }
  return plan;
}

PdPlan build_pd_plan(const hw::SystemSpec& sys, const hw::ModelSpec& model, int tp_pre, int pp_pre,
                     int tp_dec, int pp_dec, const PlanOptions& opt) {
  hw::throw_if_issues(hw::validate_model(model));
  return pair_plans(sys, model, plan_phase(sys, model, Phase::Prefill, tp_pre, pp_pre, opt),
                    plan_phase(sys, model, Phase::Decode, tp_dec, pp_dec, opt));
}

PdPlan pair_plans(const hw::SystemSpec& sys, const hw::ModelSpec& model, MappingPlan prefill,
                  MappingPlan decode) {
  validate_plan(prefill, sys, model);
  validate_plan(decode, sys, model);
  PdPlan pd;
  pd.prefill = std::move(prefill);
  pd.decode = std::move(decode);
  const int tp_pre = pd.prefill.tp;
  const int tp_dec = pd.decode.tp;
  const int pp_pre = pd.prefill.pp;
  const int pp_dec = pd.decode.pp;

  const int n_dec = static_cast<int>(pd.decode.instances.size());
  for (std::size_t i = 0; i < pd.prefill.instances.size(); ++i) {
    const int d = static_cast<int>(i) % n_dec;
    pd.decode_instance_of.push_back(d);
    std::vector<KvRoute> routes;
    const auto& pi = pd.prefill.instances[i];
    const auto& di = pd.decode.instances[static_cast<std::size_t>(d)];
    for (int sp = 0; sp < pp_pre; ++sp) {
      const auto [pb, pe] = pd.prefill.stage_layers[static_cast<std::size_t>(sp)];
      for (int sd = 0; sd < pp_dec; ++sd) {
        const auto [db, de] = pd.decode.stage_layers[static_cast<std::size_t>(sd)];
        const int b = std::max(pb, db);
        const int e = std::min(pe, de);
        if (b >= e) continue;
        const auto src = pd.prefill.group_coords(pi.stage_group[static_cast<std::size_t>(sp)]);
        const auto dst = pd.decode.group_coords(di.stage_group[static_cast<std::size_t>(sd)]);
        for (int r = 0; r < tp_pre; ++r) {
          const int peer = r * tp_dec / tp_pre;
          routes.push_back({b, e, src[static_cast<std::size_t>(r)], dst[static_cast<std::size_t>(peer)]});
        }
      }
    }
    pd.routes.push_back(std::move(routes));
  }
  return pd;
}

std::int64_t kv_pool_tokens(const MappingPlan& plan, const hw::SystemSpec& sys,
                            const hw::ModelSpec& model, int instance) {
  const comm::Topology topo(sys);
  const auto& inst = plan.instances.at(static_cast<std::size_t>(instance));
  std::int64_t cap = std::numeric_limits<std::int64_t>::max();
  for (std::size_t s = 0; s < inst.stage_group.size(); ++s) {
    const auto [b, e] = plan.stage_layers[s];
    std::int64_t have = 0;
    for (const auto& c : plan.group_coords(inst.stage_group[s])) {
      have += sys.chiplets[static_cast<std::size_t>(topo.chiplet_index(c.cx, c.cy))]
                  .chiplet.dram_per_pe_bytes();
    }
    const std::int64_t free_bytes = have - model.weight_bytes_per_layer() * (e - b);
    cap = std::min(cap, std::max<std::int64_t>(0, free_bytes) /
                            (model.kv_bytes_per_token_layer() * (e - b)));
  }
  return cap;
}

void validate_plan(const MappingPlan& plan, const hw::SystemSpec& sys, const hw::ModelSpec& model) {
  auto bad = [&](const std::string& why) {
    throw Error(ErrorCode::PlanMismatch, std::string(to_string(plan.phase)) + " plan: " + why);
  };
  if (model.n_heads % plan.tp != 0) bad("tp must divide the head count");
  if (static_cast<int>(plan.stage_layers.size()) != plan.pp) bad("stage count != pp");
  int next = 0;
  for (auto [b, e] : plan.stage_layers) {
    if (b != next || e <= b) bad("layer ranges must be contiguous and non-empty");
    next = e;
  }
  if (next != model.n_layers) bad("layer ranges do not cover the model");
  if (plan.instances.empty()) bad("no instances");
  const comm::Topology topo(sys);
  std::vector<bool> used(plan.grouping.groups.size(), false);
  for (const auto& inst : plan.instances) {
    if (static_cast<int>(inst.stage_group.size()) != plan.pp) bad("instance stage count != pp");
    for (int g : inst.stage_group) {
      if (g < 0 || g >= static_cast<int>(used.size())) bad("group index out of range");
      if (used[static_cast<std::size_t>(g)]) bad("group used by two stages");
      used[static_cast<std::size_t>(g)] = true;
      if (static_cast<int>(plan.grouping.groups[static_cast<std::size_t>(g)].members.size()) != plan.tp) {
        bad("group size != tp");
      }
      for (const auto& c : plan.group_coords(g)) {
        if (!topo.contains(c)) bad("PE outside the system");
      }
    }
  }
}

nlohmann::json to_json(const MappingPlan& p) {
  nlohmann::json groups = nlohmann::json::array();
  for (std::size_t g = 0; g < p.grouping.groups.size(); ++g) {
    const auto& grp = p.grouping.groups[g];
    nlohmann::json members = nlohmann::json::array();
    for (const auto& c : p.group_coords(static_cast<int>(g))) {
      members.push_back({c.cx, c.cy, c.px, c.py});
    }
    const auto cc = p.center_coord(static_cast<int>(g));
    groups.push_back({{"members", members},
                      {"span", grp.span},
                      {"midpoint", {grp.cx, grp.cy}},
                      {"center_pe", {cc.cx, cc.cy, cc.px, cc.py}}});
  }
  nlohmann::json stages = nlohmann::json::array();
  for (auto [b, e] : p.stage_layers) stages.push_back({b, e});
  nlohmann::json inst = nlohmann::json::array();
  for (const auto& i : p.instances) inst.push_back(i.stage_group);
  return {{"phase", std::string(to_string(p.phase))},
          {"tp", p.tp},
          {"pp", p.pp},
          {"dp", p.instances.size()},
          {"chiplets", p.chiplets},
          {"grouping_objective", p.grouping.objective},
          {"grouping_exact", p.grouping.exact},
          {"groups", groups},
          {"stage_layers", stages},
          {"instances", inst},
          {"placement_objective_s", p.objective}};
}

nlohmann::json to_json(const PdPlan& p) {
  nlohmann::json routes = nlohmann::json::array();
  for (std::size_t i = 0; i < p.routes.size(); ++i) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& kv : p.routes[i]) {
      r.push_back({{"layers", {kv.layer_begin, kv.layer_end}},
                   {"src", {kv.src.cx, kv.src.cy, kv.src.px, kv.src.py}},
                   {"dst", {kv.dst.cx, kv.dst.cy, kv.dst.px, kv.dst.py}}});
    }
    routes.push_back({{"prefill_instance", i},
                      {"decode_instance", p.decode_instance_of[i]},
                      {"kv_routes", r}});
  }
  return {{"prefill", to_json(p.prefill)}, {"decode", to_json(p.decode)}, {"kv", routes}};
}

}  // namespace lamosim::par

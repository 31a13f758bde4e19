// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#include "lamosim/dse.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <thread>

#include "lamosim/commmodel.hpp"
#include "lamosim/config_io.hpp"
#include "lamosim/error.hpp"
#include "lamosim/hash.hpp"
#include "lamosim/opgraph.hpp"

namespace lamosim::dse {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> k = {
      "dram_io_bits", "dram_capacity_gib", "dram_layers",  "dram_banks",  "page_size_bytes",
      "n_core",       "n_pe",              "sram_banks",   "sram_kib",    "sa_rows",
      "sa_cols",      "base_sa_rows",      "vector_regs",  "noc_flit_bits", "nop_channels"};
  return k;
}

std::pair<double, double> mean_lengths(const trace::Trace& tr) {
  double in = 0, out = 0;
  for (const auto& r : tr.requests) {
    in += static_cast<double>(r.input_len);
    out += static_cast<double>(r.output_len);
  }
  const double n = std::max<double>(1.0, static_cast<double>(tr.requests.size()));
  return {in / n, out / n};
}

int as_int(double v) { return static_cast<int>(std::llround(v)); }

// rows x cols with rows the largest divisor not above sqrt(n).
std::pair<int, int> near_square(int n) {
  int r = static_cast<int>(std::sqrt(static_cast<double>(n)));
  while (r > 1 && n % r != 0) --r;
  return {std::max(r, 1), n / std::max(r, 1)};
}

std::vector<int> decode_index(std::uint64_t flat, const std::vector<int>& radix) {
  std::vector<int> idx(radix.size());
  for (std::size_t i = radix.size(); i-- > 0;) {
    idx[i] = static_cast<int>(flat % static_cast<std::uint64_t>(radix[i]));
    flat /= static_cast<std::uint64_t>(radix[i]);
  }
  return idx;
}

}  // namespace

std::uint64_t ParamDomain::size() const {
  std::uint64_t n = 1;
  for (const auto& [k, v] : values) n *= v.size();
  return n;
}

ParamDomain ParamDomain::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "domain must be an object");
  ParamDomain d;
  if (j.contains("base")) d.base = config::chiplet_from_json(j.at("base"));
  if (!j.contains("values") || !j.at("values").is_object()) {
    throw Error(ErrorCode::InvalidConfig, "domain needs a 'values' object");
  }
  for (const auto& [k, v] : j.at("values").items()) {
    if (!known_keys().count(k)) throw Error(ErrorCode::InvalidConfig, "unknown domain key: " + k);
    if (!v.is_array()) throw Error(ErrorCode::InvalidConfig, "domain key " + k + " needs a list");
    auto& out = d.values[k];
    for (const auto& x : v) out.push_back(x.get<double>());
  }
  for (const auto& [k, v] : j.items()) {
    if (k != "schema" && k != "base" && k != "values") {
      throw Error(ErrorCode::InvalidConfig, "unknown key in domain: " + k);
    }
  }
  return d;
}

hw::ChipletSpec apply_point(const ParamDomain& d, const std::vector<int>& idx) {
  hw::ChipletSpec c = d.base;
  std::optional<double> capacity_gib;
  std::size_t i = 0;
  for (const auto& [k, vals] : d.values) {
    const double v = vals.at(static_cast<std::size_t>(idx.at(i++)));
    if (k == "dram_io_bits") c.dram.n_io = as_int(v);
    else if (k == "dram_capacity_gib") capacity_gib = v;
    else if (k == "dram_layers") c.dram.n_layer = as_int(v);
    else if (k == "dram_banks") c.dram.n_bank = as_int(v);
    else if (k == "page_size_bytes") c.dram.page_size = as_int(v);
    else if (k == "n_core") c.pe.n_core = as_int(v);
    else if (k == "n_pe") std::tie(c.pe_rows, c.pe_cols) = near_square(as_int(v));
    else if (k == "sram_banks") c.pe.sram_banks = as_int(v);
    else if (k == "sram_kib") c.pe.sram_bytes = std::llround(v * 1024.0);
    else if (k == "sa_rows") c.pe.sa_rows = as_int(v);
    else if (k == "sa_cols") c.pe.sa_cols = as_int(v);
    else if (k == "base_sa_rows") c.pe.base_sa_rows = as_int(v);
    else if (k == "vector_regs") c.pe.vector_regs = as_int(v);
    else if (k == "noc_flit_bits") c.pe.noc_flit_bits = as_int(v);
    // nop_channels: carried in the point, no chiplet field
  }
  const auto banks = c.dram.total_banks();
  const std::int64_t cap =
      capacity_gib ? std::llround(*capacity_gib * static_cast<double>(std::int64_t{1} << 30))
                   : c.dram.capacity_bytes;
  if (banks > 0) {
    c.dram.bank_capacity_bytes = cap / banks;
    c.dram.capacity_bytes = c.dram.bank_capacity_bytes * banks;
    c.pe.n_mc = static_cast<int>(std::max<std::int64_t>(1, banks / c.n_pe()));
  }
  return c;
}

bool dominates(const hw::ChipletMetrics& a, const hw::ChipletMetrics& b) {
  const bool ge = a.peak_flops >= b.peak_flops && a.peak_bw >= b.peak_bw &&
                  a.peak_power <= b.peak_power;
  const bool gt = a.peak_flops > b.peak_flops || a.peak_bw > b.peak_bw ||
                  a.peak_power < b.peak_power;
  return ge && gt;
}

std::vector<int> pareto_front(const std::vector<hw::ChipletMetrics>& pts) {
  std::vector<int> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
      dominated = j != i && dominates(pts[j], pts[i]);
    }
    if (!dominated) out.push_back(static_cast<int>(i));
  }
  return out;
}

namespace {

// Within epsilon of some front member: scaling its flops and bandwidth down
// and its power up by (1 +- eps) no longer dominates the point.
bool near_front(const hw::ChipletMetrics& p, const std::vector<hw::ChipletMetrics>& front,
                double eps) {
  for (const auto& f : front) {
    hw::ChipletMetrics relaxed = f;
    relaxed.peak_flops *= 1.0 - eps;
    relaxed.peak_bw *= 1.0 - eps;
    relaxed.peak_power *= 1.0 + eps;
    if (!dominates(relaxed, p)) return true;
  }
  return false;
}

std::vector<std::vector<int>> sample_points(const std::vector<int>& radix, int budget,
                                            std::uint64_t seed, const std::vector<std::string>& keys) {
  std::uint64_t total = 1;
  for (int r : radix) total *= static_cast<std::uint64_t>(r);
  std::vector<std::vector<int>> pts;
  if (static_cast<std::uint64_t>(budget) >= total) {
    for (std::uint64_t f = 0; f < total; ++f) pts.push_back(decode_index(f, radix));
    return pts;
  }
  // Latin-hypercube strata per dimension, one shuffled permutation each.
  const auto n = static_cast<std::size_t>(budget);
  std::vector<std::vector<int>> cols(radix.size());
  for (std::size_t d = 0; d < radix.size(); ++d) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(derive_seed(seed, "chiplet/" + keys[d]));
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int p : perm) {
      cols[d].push_back(static_cast<int>(static_cast<std::int64_t>(p) * radix[d] /
                                         static_cast<std::int64_t>(n)));
    }
  }
  std::set<std::vector<int>> seen;
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<int> idx(radix.size());
    for (std::size_t d = 0; d < radix.size(); ++d) idx[d] = cols[d][s];
    if (seen.insert(idx).second) pts.push_back(std::move(idx));
  }
  return pts;
}

}  // namespace

ChipletDseResult chiplet_dse(const ParamDomain& domain, int budget, std::uint64_t seed,
                             double epsilon) {
  if (budget < 1) throw Error(ErrorCode::EmptyDomain, "budget must be at least 1");
  std::vector<int> radix;
  std::vector<std::string> keys;
  for (const auto& [k, v] : domain.values) {
    if (v.empty()) throw Error(ErrorCode::EmptyDomain, "no values for " + k);
    radix.push_back(static_cast<int>(v.size()));
    keys.push_back(k);
  }
  ChipletDseResult r;
  r.space_size = domain.size();
  const auto cap_it = domain.values.find("dram_capacity_gib");
  const std::size_t cap_pos =
      cap_it == domain.values.end()
          ? keys.size()
          : static_cast<std::size_t>(std::distance(domain.values.begin(), cap_it));

  for (auto& idx : sample_points(radix, budget, seed, keys)) {
    ChipletCandidate c;
    c.id = static_cast<int>(r.evaluated.size());
    c.spec = apply_point(domain, idx);
    c.spec.name = "cand" + std::to_string(c.id);
    c.metrics = hw::derive_chiplet_metrics(c.spec);
    c.capacity_key =
        cap_pos < keys.size()
            ? std::llround(cap_it->second[static_cast<std::size_t>(idx[cap_pos])] *
                           static_cast<double>(std::int64_t{1} << 30))
            : c.spec.dram.capacity_bytes;
    const auto issues = hw::validate_chiplet(c.spec);
    c.feasible = issues.empty();
    if (!c.feasible) c.reason = issues.front().message;
    c.point = std::move(idx);
    r.evaluated.push_back(std::move(c));
  }

  std::map<std::int64_t, std::vector<int>> by_cap;
  for (const auto& c : r.evaluated) {
    if (c.feasible) by_cap[c.capacity_key].push_back(c.id);
  }
  for (const auto& [cap, ids] : by_cap) {
    std::vector<hw::ChipletMetrics> m;
    for (int id : ids) m.push_back(r.evaluated[static_cast<std::size_t>(id)].metrics);
    std::vector<hw::ChipletMetrics> fm;
    auto& front = r.front[cap];
    for (int k : pareto_front(m)) {
      front.push_back(ids[static_cast<std::size_t>(k)]);
      fm.push_back(m[static_cast<std::size_t>(k)]);
    }
    auto& near = r.near[cap];
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (std::find(front.begin(), front.end(), ids[k]) != front.end()) continue;
      if (near_front(m[k], fm, epsilon)) near.push_back(ids[k]);
    }
  }
  return r;
}

// ---- system level -----------------------------------------------------------

SloSpec SloSpec::from_json(const nlohmann::json& j) {
  SloSpec s;
  for (const auto& [k, v] : j.items()) {
    if (k == "schema") continue;
    if (k == "ttft_max_s") s.ttft_max = v.get<double>();
    else if (k == "tbt_max_s") s.tbt_max = v.get<double>();
    else if (k == "t_limit_c") s.t_limit = v.get<double>();
    else if (k == "rack_power_w") s.p_rack = v.get<double>();
    else if (k == "kv_budget_bytes") s.kv_budget = v.get<double>();
    else throw Error(ErrorCode::InvalidConfig, "unknown key in slo: " + k);
  }
  return s;
}

std::uint64_t SystemSpace::size() const {
  return static_cast<std::uint64_t>(pc.size()) * dc.size() * counts.size() * mappings.size();
}

SystemSpace SystemSpace::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  SystemSpace sp;
  auto chiplet = [&](const nlohmann::json& e) {
    if (e.is_string()) return config::load_chiplet(base_dir / e.get<std::string>());
    return config::chiplet_from_json(e);
  };
  for (const auto& [k, v] : j.items()) {
    if (k == "schema") continue;
    if (k == "base_system") {
      sp.base = v.is_string() ? config::load_system(base_dir / v.get<std::string>())
                              : config::system_from_json(v);
    } else if (k == "pc") {
      for (const auto& e : v) sp.pc.push_back(chiplet(e));
    } else if (k == "dc") {
      for (const auto& e : v) sp.dc.push_back(chiplet(e));
    } else if (k == "counts") {
      for (const auto& e : v) sp.counts.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    } else if (k == "mappings") {
      for (const auto& e : v) {
        sp.mappings.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<int>(),
                               e.at(3).get<int>()});
      }
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown key in system space: " + k);
    }
  }
  for (auto& c : sp.pc) c.role = hw::ChipletRole::Prefill;
  for (auto& c : sp.dc) c.role = hw::ChipletRole::Decode;
  if (sp.size() == 0) throw Error(ErrorCode::EmptyDomain, "system space has an empty axis");
  return sp;
}

namespace {

int flat_id(const SystemSpace& s, const DesignPoint& p) {
  return ((p.pc * static_cast<int>(s.dc.size()) + p.dc) * static_cast<int>(s.counts.size()) +
          p.counts) * static_cast<int>(s.mappings.size()) + p.mapping;
}

DesignPoint from_id(const SystemSpace& s, std::uint64_t id) {
  const auto ix = decode_index(id, {static_cast<int>(s.pc.size()), static_cast<int>(s.dc.size()),
                                    static_cast<int>(s.counts.size()),
                                    static_cast<int>(s.mappings.size())});
  return {ix[0], ix[1], ix[2], ix[3]};
}

}  // namespace

hw::SystemSpec assemble(const SystemSpace& space, const DesignPoint& p) {
  hw::SystemSpec sys = space.base;
  sys.chiplets.clear();
  const auto [n_pc, n_dc] = space.counts.at(static_cast<std::size_t>(p.counts));
  const int n = n_pc + n_dc;
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  for (int k = 0; k < n; ++k) {
    hw::PlacedChiplet pc;
    pc.x = k % cols;
    pc.y = k / cols;
    const bool prefill = k < n_pc;
    pc.chiplet = prefill ? space.pc.at(static_cast<std::size_t>(p.pc))
                         : space.dc.at(static_cast<std::size_t>(p.dc));
    pc.chiplet.name = (prefill ? "pc" : "dc") + std::to_string(prefill ? k : k - n_pc);
    sys.chiplets.push_back(std::move(pc));
  }
  sys.name = "design" + std::to_string(flat_id(space, p));
  return sys;
}

namespace {

struct Check {
  const char* name;
  double value;
  double limit;
};

double ratio(double value, double limit) {
  if (limit <= 0) return value > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  return value / limit;
}

std::vector<Check> checks(const SystemCandidate& c, const SloSpec& slo) {
  return {{"ttft", c.ttft_p99, slo.ttft_max},
          {"tbt", c.tbt_p99, slo.tbt_max},
          {"thermal", c.t_max, slo.t_limit},
          {"power", c.peak_power, slo.p_rack}};
}

// KV capacity ratio is inverted: more is better.
double kv_ratio(const SystemCandidate& c, const SloSpec& slo) {
  if (slo.kv_budget <= 0) return 0.0;
  return c.kv_capacity > 0 ? slo.kv_budget / c.kv_capacity
                           : std::numeric_limits<double>::infinity();
}

}  // namespace

bool satisfies(const SystemCandidate& c, const SloSpec& slo) {
  if (!c.simulated) return false;
  for (const auto& k : checks(c, slo)) {
    if (ratio(k.value, k.limit) > 1.0) return false;
  }
  return kv_ratio(c, slo) <= 1.0;
}

SystemCandidate evaluate_design(const SystemSpace& space, const DesignPoint& p,
                                const hw::ModelSpec& model, const trace::Trace& tr,
                                const SloSpec& slo, const SystemDseOptions& opt) {
  SystemCandidate c;
  c.point = p;
  c.id = flat_id(space, p);
  c.worst_ratio = std::numeric_limits<double>::infinity();
  const hw::SystemSpec sys = assemble(space, p);
  const auto v = hw::validate_system(sys);
  if (!v.ok()) {
    c.binding = "packaging";
    return c;
  }
  double tdp = 0;
  for (std::size_t i = 0; i < sys.chiplets.size(); ++i) {
    c.area_mm2 += v.system->metrics[i].area_mm2;
    c.peak_power += v.system->metrics[i].peak_power;
    tdp += sys.chiplets[i].chiplet.tdp_w;
  }
  const auto& m = space.mappings.at(static_cast<std::size_t>(p.mapping));
  par::PdPlan plan;
  try {
    plan = par::build_pd_plan(sys, model, m.tp_pre, m.pp_pre, m.tp_dec, m.pp_dec, opt.plan);
  } catch (const Error&) {
    c.binding = "capacity";
    return c;
  }
  for (std::size_t i = 0; i < plan.decode.instances.size(); ++i) {
    c.kv_capacity += static_cast<double>(
        par::kv_pool_tokens(plan.decode, sys, model, static_cast<int>(i)) *
        model.kv_bytes_per_token_layer() * model.n_layers);
  }
  thermal::FixedPointResult fp;
  try {
    fp = thermal::thermal_fixed_point(sys, model, plan, tr, opt.sched, opt.thermal);
  } catch (const Error& e) {
    c.binding = e.code() == ErrorCode::NonConvergence ? "thermal" : "capacity";
    return c;
  }
  c.simulated = true;
  const auto& sm = fp.sim.metrics;
  c.ttft_p99 = sm.p99_ttft;
  c.tbt_p99 = sm.p99_tbt;
  c.tpt = sm.tpt;
  c.t_max = fp.state.t_max();
  c.peak_power += fp.state.pump_w;
  c.avg_power = sm.avg_power;
  c.tokens_per_joule = sm.tokens_per_joule;
  c.nameplate_tokens_per_joule = tdp > 0 ? sm.tpt / tdp : 0.0;
  c.objective = opt.nameplate ? c.nameplate_tokens_per_joule : c.tokens_per_joule;

  c.worst_ratio = 0;
  double worst = 1.0;
  for (const auto& k : checks(c, slo)) {
    const double r = ratio(k.value, k.limit);
    c.worst_ratio = std::max(c.worst_ratio, r);
    if (r > worst) {
      worst = r;
      c.binding = k.name;
    }
  }
  const double kr = kv_ratio(c, slo);
  c.worst_ratio = std::max(c.worst_ratio, kr);
  if (kr > worst) c.binding = "kv";
  if (c.binding.empty() && sm.completed < static_cast<std::int64_t>(sm.requests.size())) {
    c.binding = "kv";
  }
  c.feasible = c.binding.empty();
  return c;
}

namespace {

// Higher is better: objective when feasible, otherwise minus the worst ratio.
double score(const SystemCandidate& c) {
  if (c.feasible) return c.objective;
  return std::isfinite(c.worst_ratio) ? -c.worst_ratio : -1e30;
}

void evaluate_batch(const SystemSpace& space, const std::vector<DesignPoint>& pts,
                    const hw::ModelSpec& model, const trace::Trace& tr, const SloSpec& slo,
                    const SystemDseOptions& opt, std::vector<SystemCandidate>& out) {
  std::vector<SystemCandidate> res(pts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < pts.size(); i = next++) {
      res[i] = evaluate_design(space, pts[i], model, tr, slo, opt);
    }
  };
  const int n = std::max(1, std::min<int>(opt.jobs, static_cast<int>(pts.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& r : res) out.push_back(std::move(r));
}

DesignPoint mutate(const SystemSpace& s, DesignPoint p, std::mt19937_64& rng) {
  std::vector<int> axes;
  if (s.pc.size() > 1) axes.push_back(0);
  if (s.dc.size() > 1) axes.push_back(1);
  if (s.counts.size() > 1) axes.push_back(2);
  if (s.mappings.size() > 1) axes.push_back(3);
  if (axes.empty()) return p;
  const int ax = axes[std::uniform_int_distribution<std::size_t>(0, axes.size() - 1)(rng)];
  auto step = [&](int v, std::size_t n) {
    const int w = static_cast<int>(std::uniform_int_distribution<std::size_t>(0, n - 2)(rng));
    return w >= v ? w + 1 : w;
  };
  switch (ax) {
    case 0: p.pc = step(p.pc, s.pc.size()); break;
    case 1: p.dc = step(p.dc, s.dc.size()); break;
    case 2: p.counts = step(p.counts, s.counts.size()); break;
    default: p.mapping = step(p.mapping, s.mappings.size()); break;
  }
  return p;
}

// Count options ordered by how well prefill and decode peak FLOP/s match the
// trace's input/output token ratio.
std::vector<int> balanced_counts(const SystemSpace& s, const trace::Trace& tr) {
  const auto [in, out] = mean_lengths(tr);
  const double want = std::log(std::max(in, 1.0) / std::max(out, 1.0));
  double pc_f = 0, dc_f = 0;
  for (const auto& c : s.pc) pc_f += hw::derive_chiplet_metrics(c).peak_flops;
  for (const auto& c : s.dc) dc_f += hw::derive_chiplet_metrics(c).peak_flops;
  pc_f /= static_cast<double>(s.pc.size());
  dc_f /= static_cast<double>(s.dc.size());
  std::vector<int> order(s.counts.size());
  std::iota(order.begin(), order.end(), 0);
  auto gap = [&](int i) {
    const auto [a, b] = s.counts[static_cast<std::size_t>(i)];
    return std::abs(std::log((a * pc_f + 1.0) / (b * dc_f + 1.0)) - want);
  };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return gap(a) < gap(b); });
  return order;
}

}  // namespace

SystemDseResult system_dse(const SystemSpace& space, const hw::ModelSpec& model,
                           const trace::Trace& tr, const SloSpec& slo,
                           const SystemDseOptions& opt) {
  if (opt.budget < 1) throw Error(ErrorCode::EmptyDomain, "budget must be at least 1");
  SystemDseResult r;
  r.space_size = space.size();
  std::set<std::uint64_t> seen;

  if (static_cast<std::uint64_t>(opt.budget) >= r.space_size) {
    r.exhaustive = true;
    std::vector<DesignPoint> pts;
    for (std::uint64_t id = 0; id < r.space_size; ++id) pts.push_back(from_id(space, id));
    evaluate_batch(space, pts, model, tr, slo, opt, r.evaluated);
  } else {
    std::mt19937_64 rng(derive_seed(opt.seed, "system_dse"));
    const auto order = balanced_counts(space, tr);
    const auto budget = static_cast<std::size_t>(opt.budget);
    const auto round = static_cast<std::size_t>(std::max(1, opt.round_size));
    auto pick = [&](std::size_t n) {
      return static_cast<int>(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
    };
    auto random_unseen = [&]() -> std::optional<DesignPoint> {
      for (int a = 0; a < 64; ++a) {
        const auto id = std::uniform_int_distribution<std::uint64_t>(0, r.space_size - 1)(rng);
        if (!seen.count(id)) return from_id(space, id);
      }
      for (std::uint64_t id = 0; id < r.space_size; ++id) {
        if (!seen.count(id)) return from_id(space, id);
      }
      return std::nullopt;
    };

    // Seed round: balanced count options first.
    std::vector<DesignPoint> batch;
    for (std::size_t k = 0; batch.size() < std::min(round, budget) && k < 4 * round; ++k) {
      DesignPoint p{pick(space.pc.size()), pick(space.dc.size()),
                    order[k % std::min<std::size_t>(order.size(), 3)],
                    pick(space.mappings.size())};
      if (seen.insert(static_cast<std::uint64_t>(flat_id(space, p))).second) batch.push_back(p);
    }
    std::optional<SystemCandidate> current;
    double temp = 1.0;
    while (true) {
      while (batch.size() < std::min(round, budget - r.evaluated.size())) {
        std::optional<DesignPoint> p;
        if (current) {
          for (int a = 0; a < 16 && !p; ++a) {
            const auto q = mutate(space, current->point, rng);
            if (!seen.count(static_cast<std::uint64_t>(flat_id(space, q)))) p = q;
          }
        }
        if (!p) p = random_unseen();
        if (!p) break;
        seen.insert(static_cast<std::uint64_t>(flat_id(space, *p)));
        batch.push_back(*p);
      }
      if (batch.empty()) break;
      const std::size_t first = r.evaluated.size();
      evaluate_batch(space, batch, model, tr, slo, opt, r.evaluated);
      batch.clear();
      // Metropolis step on the round's best against the current point.
      const auto best = std::max_element(
          r.evaluated.begin() + static_cast<std::ptrdiff_t>(first), r.evaluated.end(),
          [](const SystemCandidate& a, const SystemCandidate& b) {
            return score(a) < score(b) || (score(a) == score(b) && a.id > b.id);
          });
      if (!current) {
        current = *best;
      } else {
        const double d = score(*best) - score(*current);
        const double scale = std::max(std::abs(score(*current)), 1e-12);
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        if (d >= 0 || u < std::exp(d / (scale * temp))) current = *best;
      }
      temp *= 0.7;
      if (r.evaluated.size() >= budget || seen.size() >= r.space_size) break;
    }
  }

  std::sort(r.evaluated.begin(), r.evaluated.end(),
            [](const SystemCandidate& a, const SystemCandidate& b) { return a.id < b.id; });
  std::vector<const SystemCandidate*> ok;
  for (const auto& c : r.evaluated) {
    if (c.feasible) ok.push_back(&c);
    else ++r.binding_histogram[c.binding];
  }
  std::stable_sort(ok.begin(), ok.end(), [](const SystemCandidate* a, const SystemCandidate* b) {
    return a->objective > b->objective;
  });
  for (const auto* c : ok) r.ranked.push_back(c->id);
  return r;
}

void require_feasible(const SystemDseResult& r) {
  if (!r.ranked.empty()) return;
  std::string msg = "no design met every constraint; binding:";
  for (const auto& [k, n] : r.binding_histogram) msg += " " + k + "=" + std::to_string(n);
  throw Error(ErrorCode::NoFeasibleDesign, msg);
}

nlohmann::json to_json(const SystemCandidate& c) {
  return {{"id", c.id},
          {"pc", c.point.pc},
          {"dc", c.point.dc},
          {"counts", c.point.counts},
          {"mapping", c.point.mapping},
          {"simulated", c.simulated},
          {"feasible", c.feasible},
          {"binding", c.binding},
          {"ttft_p99_s", c.ttft_p99},
          {"tbt_p99_s", c.tbt_p99},
          {"tpt", c.tpt},
          {"t_max_c", c.t_max},
          {"peak_power_w", c.peak_power},
          {"avg_power_w", c.avg_power},
          {"area_mm2", c.area_mm2},
          {"kv_capacity_bytes", c.kv_capacity},
          {"tokens_per_joule", c.tokens_per_joule},
          {"nameplate_tokens_per_joule", c.nameplate_tokens_per_joule},
          {"objective", c.objective}};
}

// ---- mapping optimizer -----------------------------------------------------

double phase_latency(const hw::SystemSpec& sys, const hw::ModelSpec& model,
                     const par::MappingPlan& plan, const std::vector<std::int64_t>& lens,
                     double temp_c, bool beat_only) {
  const comm::Topology topo(sys);
  const bool prefill = plan.phase == par::Phase::Prefill;
  const auto layer = prefill ? ops::prefill_layer(model, plan.tp, lens)
                             : ops::decode_layer(model, plan.tp, lens);
  const std::int64_t tokens =
      prefill ? std::accumulate(lens.begin(), lens.end(), std::int64_t{0})
              : static_cast<std::int64_t>(lens.size());
  const double act = ops::activation_bytes(model, tokens);
  comp::ComputeLut lut;
  const auto& inst = plan.instances.at(0);
  double total = 0, beat = 0;
  for (std::size_t s = 0; s < inst.stage_group.size(); ++s) {
    const int g = inst.stage_group[s];
    const auto coords = plan.group_coords(g);
    const auto center = plan.center_coord(g);
    const auto& chip =
        sys.chiplets[static_cast<std::size_t>(topo.chiplet_index(center.cx, center.cy))].chiplet;
    double per_layer = 0;
    for (const auto& op : layer) {
      if (op.kind == ops::OpKind::Gemm) {
        per_layer += sim::gemm_op_cost(op.shape, chip, temp_c, model.dtype_bytes, &lut).seconds;
      } else if (op.kind == ops::OpKind::Vector) {
        per_layer += sim::vector_op_cost(op.elements, chip).seconds;
      } else {
        per_layer += comm::collective_cost(comm::CollectiveKind::AllReduce, coords, center,
                                           op.bytes, topo)
                         .seconds;
      }
    }
    const auto [b, e] = plan.stage_layers[s];
    double stage = per_layer * (e - b);
    if (prefill && s == 0) {
      stage += comm::collective_cost(comm::CollectiveKind::Multicast, coords, center, act, topo)
                   .seconds;
    }
    if (s + 1 < inst.stage_group.size()) {
      stage += comm::p2p_cost(center, plan.center_coord(inst.stage_group[s + 1]), act, topo)
                   .seconds;
    }
    total += stage;
    beat = std::max(beat, stage);
  }
  return beat_only ? beat : total;
}

PdChoice optimize_mapping(const hw::SystemSpec& sys, const hw::ModelSpec& model,
                          const trace::Trace& tr, const par::PlanOptions& opt,
                          int max_decode_batch) {
  const auto [mean_in, mean_out] = mean_lengths(tr);
  const auto in_len = std::max<std::int64_t>(1, std::llround(mean_in));
  const auto out_len = std::max<std::int64_t>(1, std::llround(mean_out));
  PdChoice r;
  const double inf = std::numeric_limits<double>::infinity();
  r.prefill.objective = inf;
  r.decode.objective = inf;
  for (int tp : {1, 2, 4, 8, 16}) {
    if (model.n_heads % tp != 0) continue;
    for (int pp : {1, 2, 4, 8}) {
      if (pp > model.n_layers) continue;
      try {
        const auto plan = par::plan_phase(sys, model, par::Phase::Prefill, tp, pp, opt);
        PhaseChoice c{tp, pp, phase_latency(sys, model, plan, {in_len}),
                      static_cast<int>(plan.instances.size())};
        r.prefill_table.push_back(c);
        if (c.objective < r.prefill.objective) r.prefill = c;
      } catch (const Error&) {
      }
      try {
        const auto plan = par::plan_phase(sys, model, par::Phase::Decode, tp, pp, opt);
        const auto cap = par::kv_pool_tokens(plan, sys, model, 0);
        const auto batch = std::min<std::int64_t>(max_decode_batch,
                                                  cap / (std::int64_t{pp} * (in_len + out_len)));
        if (batch < 1) continue;
        const std::vector<std::int64_t> ctx(static_cast<std::size_t>(batch),
                                            in_len + out_len / 2);
        const double beat = phase_latency(sys, model, plan, ctx, 65.0, true);
        const int n = static_cast<int>(plan.instances.size());
        PhaseChoice c{tp, pp, beat / (static_cast<double>(batch) * n), n};
        r.decode_table.push_back(c);
        if (c.objective < r.decode.objective) r.decode = c;
      } catch (const Error&) {
      }
    }
  }
  if (!std::isfinite(r.prefill.objective) || !std::isfinite(r.decode.objective)) {
    throw Error(ErrorCode::CapacityExceeded, "no (tp, pp) fits both phases");
  }
  return r;
}

}  // namespace lamosim::dse

// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#include "lamosim/servesim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <unordered_map>

#include "lamosim/d3flow.hpp"
#include "lamosim/hash.hpp"
#include "lamosim/memmodel.hpp"
#include "lamosim/opgraph.hpp"

namespace lamosim::sim {

std::string_view to_string(ActivityKind k) {
  switch (k) {
    case ActivityKind::Compute: return "compute";
    case ActivityKind::Mem: return "mem";
    case ActivityKind::Comm: return "comm";
    case ActivityKind::Idle: return "idle";
  }
  return "?";
}

double static_power_w(const hw::SystemSpec& sys, const Temps& temps) {
  double w = 0;
  for (std::size_t i = 0; i < sys.chiplets.size(); ++i) {
    const auto& c = sys.chiplets[i].chiplet;
    const double t = i < temps.size() ? temps[i] : 65.0;
    w += hw::leakage_w(c, sys.cooling, t) + mem::dram_static_w(c.dram, t);
  }
  return w;
}

OpCost gemm_op_cost(const comp::GemmShape& s, const hw::ChipletSpec& c, double temp_c, int dtype,
                    comp::ComputeLut* lut) {
  d3::SearchOptions opt;
  opt.lut = lut;
  const auto r = d3::search(s, c.pe, c.dram, c.clock_hz, temp_c, dtype, opt);
  OpCost o;
  o.seconds = r.cost.latency;
  o.energy = r.cost.energy;
  o.flops = s.flops();
  o.dram_bytes = r.cost.dram_bytes;
  o.kind = r.cost.compute_s >= r.cost.stream_s + r.cost.staged_s ? ActivityKind::Compute
                                                                 : ActivityKind::Mem;
  return o;
}

OpCost vector_op_cost(double elements, const hw::ChipletSpec& c) {
  OpCost o;
  o.seconds = comp::vpu_cycles(elements, c.pe) / c.pe.n_core / c.clock_hz;
  o.flops = elements;
  o.energy = elements * c.pe.pj_per_flop * 1e-12;
  o.kind = ActivityKind::Compute;
  return o;
}

namespace {

constexpr int kArrival = 0;
constexpr int kPrefillDone = 1;
constexpr int kKvDone = 2;
constexpr int kDecodeDone = 3;

struct Event {
  double t;
  std::uint64_t seq;
  int kind;
  int a;
  int b;
  int c;
  bool operator>(const Event& o) const { return t > o.t || (t == o.t && seq > o.seq); }
};

// Cost of running one stage once: the window on each PE split by kind.
struct StageWork {
  double seconds = 0;
  double compute_s = 0;
  double mem_s = 0;
  double comm_s = 0;
  double compute_j = 0;  // per PE
  double mem_j = 0;
  double comm_j = 0;
};

struct GroupInfo {
  std::vector<int> pe;                 // global PE indices
  std::vector<comm::MeshCoord> coords;
  comm::MeshCoord center;
  int chiplet = 0;   // chiplet whose PE and DRAM spec costs the group
  double temp = 65;  // hottest member chiplet
};

struct StageRef {
  int group = 0;
  int layers = 0;
};

struct PrefillInst {
  std::vector<StageRef> stages;
  bool stage0_busy = false;
  double kv_free = 0;
};

struct Slot {
  std::vector<int> reqs;
  bool running = false;
};

struct DecodeInst {
  std::vector<StageRef> stages;
  std::vector<Slot> slots;
  std::deque<int> ready;
  std::int64_t pool_cap = 0;
  std::int64_t pool_used = 0;
};

struct ReqState {
  trace::Request req;
  int prefill_inst = -1;
  double last_token = 0;
  std::int64_t tokens = 0;
};

class Engine {
 public:
  Engine(const hw::SystemSpec& sys, const hw::ModelSpec& model, const par::PdPlan& plan,
         const trace::Trace& tr, const SchedulerConfig& cfg, const Temps& temps)
      : sys_(sys), model_(model), plan_(plan), cfg_(cfg), temps_(temps), topo_(sys) {
    if (temps_.empty()) temps_.assign(sys.chiplets.size(), 65.0);
    if (temps_.size() != sys.chiplets.size()) {
      throw Error(ErrorCode::PlanMismatch, "temperature map size != chiplet count");
    }
    par::validate_plan(plan.prefill, sys, model);
    par::validate_plan(plan.decode, sys, model);
    if (plan.routes.size() != plan.prefill.instances.size() ||
        plan.decode_instance_of.size() != plan.prefill.instances.size()) {
      throw Error(ErrorCode::PlanMismatch, "KV routes do not match prefill instances");
    }
    build_groups();
    for (const auto& r : tr.requests) {
      ReqState s;
      s.req = r;
      reqs_.push_back(s);
    }
    metrics_.requests.resize(reqs_.size());
    for (std::size_t i = 0; i < reqs_.size(); ++i) {
      auto& m = metrics_.requests[i];
      m.id = reqs_[i].req.id;
      m.arrival = reqs_[i].req.arrival;
      push(reqs_[i].req.arrival, kArrival, static_cast<int>(i));
    }
  }

  SimResult run() {
    while (!events_.empty()) {
      const Event e = events_.top();
      events_.pop();
      now_ = e.t;
      switch (e.kind) {
        case kArrival:
          prefill_queue_.push_back(e.a);
          try_prefill();
          break;
        case kPrefillDone: on_prefill_done(e.a, e.b, e.c); break;
        case kKvDone: on_kv_done(e.a); break;
        case kDecodeDone: on_decode_done(e.a, e.b, e.c); break;
        default: break;
      }
    }
    return finish();
  }

 private:
  void push(double t, int kind, int a, int b = 0, int c = 0) {
    events_.push({t, seq_++, kind, a, b, c});
  }

  int pe_index(const comm::MeshCoord& c) {
    auto it = pe_ids_.find(c);
    if (it != pe_ids_.end()) return it->second;
    const int id = static_cast<int>(activity_.pes.size());
    pe_ids_[c] = id;
    activity_.pes.push_back(c);
    activity_.pe_chiplet.push_back(topo_.chiplet_index(c.cx, c.cy));
    return id;
  }

  int add_group(const par::MappingPlan& p, int g) {
    GroupInfo info;
    info.coords = p.group_coords(g);
    info.center = p.center_coord(g);
    info.chiplet = topo_.chiplet_index(info.center.cx, info.center.cy);
    info.temp = -std::numeric_limits<double>::infinity();
    for (const auto& c : info.coords) {
      info.pe.push_back(pe_index(c));
      info.temp = std::max(info.temp,
                           temps_[static_cast<std::size_t>(topo_.chiplet_index(c.cx, c.cy))]);
    }
    groups_.push_back(std::move(info));
    return static_cast<int>(groups_.size()) - 1;
  }

  void build_groups() {
    for (const auto& inst : plan_.prefill.instances) {
      PrefillInst pi;
      for (std::size_t s = 0; s < inst.stage_group.size(); ++s) {
        const auto [b, e] = plan_.prefill.stage_layers[s];
        pi.stages.push_back({add_group(plan_.prefill, inst.stage_group[s]), e - b});
      }
      prefill_.push_back(std::move(pi));
    }
    const auto& dm = plan_.decode;
    for (const auto& inst : dm.instances) {
      DecodeInst di;
      for (std::size_t s = 0; s < inst.stage_group.size(); ++s) {
        const auto [b, e] = dm.stage_layers[s];
        di.stages.push_back({add_group(dm, inst.stage_group[s]), e - b});
      }
      const std::int64_t cap =
          par::kv_pool_tokens(dm, sys_, model_, static_cast<int>(decode_.size()));
      di.pool_cap = cfg_.kv_pool_tokens > 0 ? cfg_.kv_pool_tokens : cap;
      di.slots.resize(inst.stage_group.size());
      decode_.push_back(std::move(di));
    }
    busy_.assign(activity_.pes.size(), 0.0);
  }

  std::int64_t bucket(std::int64_t len) const {
    const std::int64_t b = std::max(1, cfg_.attn_bucket);
    return (len + b - 1) / b * b;
  }

  const OpCost& op_cost(const ops::Op& op, const GroupInfo& g, par::Phase phase) {
    StableHasher h;
    h.i64(static_cast<int>(op.kind)).i64(g.chiplet).f64(mem::refresh_derate(
        sys_.chiplets[static_cast<std::size_t>(g.chiplet)].chiplet.dram, g.temp));
    h.i64(op.shape.m).i64(op.shape.n).i64(op.shape.k).i64(op.shape.groups);
    h.f64(op.elements).f64(op.bytes);
    if (op.kind == ops::OpKind::AllReduce) h.i64(g.pe.front()).i64(static_cast<int>(g.pe.size()));
    const auto key = h.digest();
    auto it = op_cache_.find(key);
    if (it != op_cache_.end()) return it->second;

    const auto& chip = sys_.chiplets[static_cast<std::size_t>(g.chiplet)].chiplet;
    OpCost c;
    if (op.kind == ops::OpKind::Gemm) {
      c = gemm_op_cost(op.shape, chip, g.temp, model_.dtype_bytes, &lut_);
      const double bw = c.dram_bytes > 0
                            ? mem::mem_access_bytes(c.dram_bytes, chip.pe.n_mc, chip.dram, g.temp)
                                  .effective_bw
                            : 0.0;
      roofline_.push_back({phase, op.name, c.flops, c.dram_bytes, c.seconds,
                           static_cast<double>(chip.pe.n_core) * 2.0 * chip.pe.sa_rows *
                               chip.pe.sa_cols * chip.clock_hz,
                           c.dram_bytes > 0 ? c.flops / c.dram_bytes * bw : 0.0});
    } else if (op.kind == ops::OpKind::Vector) {
      c = vector_op_cost(op.elements, chip);
      roofline_.push_back({phase, op.name, c.flops, 0.0, c.seconds,
                           static_cast<double>(chip.pe.vector_regs) * chip.pe.n_core * chip.clock_hz,
                           0.0});
    } else {
      const auto cc = comm::collective_cost(comm::CollectiveKind::AllReduce, g.coords, g.center,
                                            op.bytes, topo_);
      c.seconds = cc.seconds;
      c.energy = cc.joules;
      c.kind = ActivityKind::Comm;
    }
    ++metrics_.op_evaluations;
    return op_cache_.emplace(key, c).first->second;
  }

  StageWork stage_work(const std::vector<ops::Op>& layer, const StageRef& st, par::Phase phase) {
    const auto& g = groups_[static_cast<std::size_t>(st.group)];
    const double share = 1.0 / static_cast<double>(g.pe.size());
    StageWork w;
    for (const auto& op : layer) {
      const OpCost& c = op_cost(op, g, phase);
      switch (c.kind) {
        case ActivityKind::Compute:
          w.compute_s += c.seconds;
          w.compute_j += c.energy;
          break;
        case ActivityKind::Mem:
          w.mem_s += c.seconds;
          w.mem_j += c.energy;
          break;
        default:
          w.comm_s += c.seconds;
          w.comm_j += c.energy * share;
          break;
      }
    }
    const double n = st.layers;
    w.compute_s *= n;
    w.mem_s *= n;
    w.comm_s *= n;
    w.compute_j *= n;
    w.mem_j *= n;
    w.comm_j *= n;
    w.seconds = w.compute_s + w.mem_s + w.comm_s;
    return w;
  }

  // Reserves every PE of the group; returns the end time.
  double run_stage(int group, double ready, const StageWork& w) {
    const auto& g = groups_[static_cast<std::size_t>(group)];
    double start = ready;
    for (int pe : g.pe) start = std::max(start, busy_[static_cast<std::size_t>(pe)]);
    const double end = start + w.seconds;
    for (int pe : g.pe) {
      busy_[static_cast<std::size_t>(pe)] = end;
      double t = start;
      auto add = [&](double dur, ActivityKind kind, double joules) {
        if (dur <= 0) return;
        if (cfg_.record_activity) activity_.intervals.push_back({pe, t, t + dur, kind, joules});
        t += dur;
      };
      add(w.compute_s, ActivityKind::Compute, w.compute_j);
      add(w.mem_s, ActivityKind::Mem, w.mem_j);
      add(w.comm_s, ActivityKind::Comm, w.comm_j);
      metrics_.dynamic_energy += w.compute_j + w.mem_j + w.comm_j;
    }
    return end;
  }

  double transfer(int from_group, int to_group, double bytes) {
    const auto c = comm::p2p_cost(groups_[static_cast<std::size_t>(from_group)].center,
                                  groups_[static_cast<std::size_t>(to_group)].center, bytes, topo_);
    metrics_.dynamic_energy += c.joules;
    return c.seconds;
  }

  // ---- prefill -----------------------------------------------------------

  void try_prefill() {
    for (std::size_t i = 0; i < prefill_.size() && !prefill_queue_.empty(); ++i) {
      auto& inst = prefill_[i];
      if (inst.stage0_busy) continue;
      std::vector<int> batch;
      std::int64_t tokens = 0;
      while (!prefill_queue_.empty() && static_cast<int>(batch.size()) < cfg_.max_prefill_batch) {
        const int r = prefill_queue_.front();
        const auto len = reqs_[static_cast<std::size_t>(r)].req.input_len;
        if (!batch.empty() && tokens + len > cfg_.max_prefill_tokens) break;
        batch.push_back(r);
        tokens += len;
        prefill_queue_.pop_front();
      }
      for (int r : batch) reqs_[static_cast<std::size_t>(r)].prefill_inst = static_cast<int>(i);
      const int id = static_cast<int>(batches_.size());
      batches_.push_back(std::move(batch));
      inst.stage0_busy = true;
      start_prefill_stage(static_cast<int>(i), 0, id, now_);
    }
  }

  std::vector<ops::Op> prefill_ops(int batch) const {
    std::vector<std::int64_t> lens;
    for (int r : batches_[static_cast<std::size_t>(batch)]) {
      lens.push_back(reqs_[static_cast<std::size_t>(r)].req.input_len);
    }
    auto layer = ops::prefill_layer(model_, plan_.prefill.tp, lens);
    // Attention works on bucketed lengths; dense projections use true counts.
    for (auto& op : layer) {
      if (op.kind != ops::OpKind::Gemm) continue;
      if (op.name == "attn_score") {
        op.shape.n = bucket(op.shape.n);
      } else if (op.name == "attn_value") {
        op.shape.k = bucket(op.shape.k);
      }
    }
    return layer;
  }

  std::int64_t batch_tokens(int batch) const {
    std::int64_t t = 0;
    for (int r : batches_[static_cast<std::size_t>(batch)]) {
      t += reqs_[static_cast<std::size_t>(r)].req.input_len;
    }
    return t;
  }

  void start_prefill_stage(int inst, int stage, int batch, double ready) {
    const auto& st = prefill_[static_cast<std::size_t>(inst)].stages[static_cast<std::size_t>(stage)];
    StageWork w = stage_work(prefill_ops(batch), st, par::Phase::Prefill);
    if (stage == 0) {
      // Input embeddings are multicast from the group center.
      const auto& g = groups_[static_cast<std::size_t>(st.group)];
      const auto mc = comm::collective_cost(comm::CollectiveKind::Multicast, g.coords, g.center,
                                            ops::activation_bytes(model_, batch_tokens(batch)),
                                            topo_);
      w.comm_s += mc.seconds;
      w.comm_j += mc.joules / static_cast<double>(g.pe.size());
      w.seconds += mc.seconds;
    }
    const double end = run_stage(st.group, ready, w);
    push(end, kPrefillDone, inst, stage, batch);
  }

  void on_prefill_done(int inst_id, int stage, int batch) {
    auto& inst = prefill_[static_cast<std::size_t>(inst_id)];
    const int pp = static_cast<int>(inst.stages.size());
    const auto [lb, le] = plan_.prefill.stage_layers[static_cast<std::size_t>(stage)];
    const auto& routes = plan_.routes[static_cast<std::size_t>(inst_id)];

    // Forward this stage's KV slice, request by request, on the instance channel.
    for (int r : batches_[static_cast<std::size_t>(batch)]) {
      auto& rs = reqs_[static_cast<std::size_t>(r)];
      if (rs.req.output_len <= 1) continue;
      double dur = 0;
      for (const auto& kv : routes) {
        const int layers = std::min(le, kv.layer_end) - std::max(lb, kv.layer_begin);
        if (layers <= 0) continue;
        const double bytes = static_cast<double>(model_.kv_bytes(rs.req.input_len, layers)) /
                             plan_.prefill.tp;
        const auto c = comm::p2p_cost(kv.src, kv.dst, bytes, topo_);
        metrics_.dynamic_energy += c.joules;
        dur = std::max(dur, c.seconds);
      }
      inst.kv_free = std::max(inst.kv_free, now_) + dur;
      if (stage == pp - 1) push(inst.kv_free, kKvDone, r);
    }

    if (stage + 1 < pp) {
      const auto& cur = inst.stages[static_cast<std::size_t>(stage)];
      const auto& next = inst.stages[static_cast<std::size_t>(stage + 1)];
      const double hop =
          transfer(cur.group, next.group, ops::activation_bytes(model_, batch_tokens(batch)));
      start_prefill_stage(inst_id, stage + 1, batch, now_ + hop);
    } else {
      for (int r : batches_[static_cast<std::size_t>(batch)]) {
        auto& rs = reqs_[static_cast<std::size_t>(r)];
        auto& m = metrics_.requests[static_cast<std::size_t>(r)];
        rs.tokens = 1;
        rs.last_token = now_;
        m.ttft = now_ - rs.req.arrival;
        m.tokens = 1;
        if (rs.req.output_len == 1) {
          m.completed = true;
          m.e2e = m.ttft;
        }
        last_token_ = std::max(last_token_, now_);
      }
    }
    if (stage == 0) {
      inst.stage0_busy = false;
      try_prefill();
    }
  }

  // ---- decode ------------------------------------------------------------

  void on_kv_done(int r) {
    const int pinst = reqs_[static_cast<std::size_t>(r)].prefill_inst;
    const int d = plan_.decode_instance_of[static_cast<std::size_t>(pinst)];
    decode_[static_cast<std::size_t>(d)].ready.push_back(r);
    wake(d);
  }

  void admit(DecodeInst& inst, Slot& slot) {
    if (cfg_.mode == BatchMode::Static && !slot.reqs.empty()) return;
    while (!inst.ready.empty() && static_cast<int>(slot.reqs.size()) < cfg_.max_decode_batch) {
      const int r = inst.ready.front();
      const auto& req = reqs_[static_cast<std::size_t>(r)].req;
      const std::int64_t need = req.input_len + req.output_len;
      if (need > inst.pool_cap) {
        inst.ready.pop_front();
        metrics_.requests[static_cast<std::size_t>(r)].kv_overflow = true;
        ++metrics_.kv_overflow;
        continue;
      }
      if (inst.pool_used + need > inst.pool_cap) {
        ++metrics_.kv_wait_events;
        break;
      }
      inst.ready.pop_front();
      inst.pool_used += need;
      slot.reqs.push_back(r);
    }
  }

  void wake(int d) {
    auto& inst = decode_[static_cast<std::size_t>(d)];
    for (std::size_t s = 0; s < inst.slots.size(); ++s) {
      auto& slot = inst.slots[s];
      if (slot.running) continue;
      admit(inst, slot);
      if (slot.reqs.empty()) continue;
      slot.running = true;
      start_decode_stage(d, static_cast<int>(s), 0, now_);
    }
  }

  void start_decode_stage(int d, int slot_id, int stage, double ready) {
    auto& inst = decode_[static_cast<std::size_t>(d)];
    const auto& slot = inst.slots[static_cast<std::size_t>(slot_id)];
    std::vector<std::int64_t> ctx;
    for (int r : slot.reqs) {
      const auto& rs = reqs_[static_cast<std::size_t>(r)];
      ctx.push_back(bucket(rs.req.input_len + rs.tokens));
    }
    const auto& st = inst.stages[static_cast<std::size_t>(stage)];
    const StageWork w = stage_work(ops::decode_layer(model_, plan_.decode.tp, ctx), st,
                                   par::Phase::Decode);
    const double end = run_stage(st.group, ready, w);
    push(end, kDecodeDone, d, slot_id, stage);
  }

  void on_decode_done(int d, int slot_id, int stage) {
    auto& inst = decode_[static_cast<std::size_t>(d)];
    auto& slot = inst.slots[static_cast<std::size_t>(slot_id)];
    const int pp = static_cast<int>(inst.stages.size());
    if (stage + 1 < pp) {
      const double hop = transfer(inst.stages[static_cast<std::size_t>(stage)].group,
                                  inst.stages[static_cast<std::size_t>(stage + 1)].group,
                                  ops::activation_bytes(model_, static_cast<std::int64_t>(slot.reqs.size())));
      start_decode_stage(d, slot_id, stage + 1, now_ + hop);
      return;
    }
    std::vector<int> keep;
    for (int r : slot.reqs) {
      auto& rs = reqs_[static_cast<std::size_t>(r)];
      auto& m = metrics_.requests[static_cast<std::size_t>(r)];
      m.decode_gaps += now_ - rs.last_token;
      rs.last_token = now_;
      ++rs.tokens;
      m.tokens = rs.tokens;
      last_token_ = std::max(last_token_, now_);
      if (rs.tokens >= rs.req.output_len) {
        m.completed = true;
        m.e2e = now_ - rs.req.arrival;
        inst.pool_used -= rs.req.input_len + rs.req.output_len;
      } else {
        keep.push_back(r);
      }
    }
    slot.reqs = std::move(keep);
    admit(inst, slot);
    if (slot.reqs.empty()) {
      slot.running = false;
      wake(d);
      return;
    }
    start_decode_stage(d, slot_id, 0, now_);
  }

  SimResult finish() {
    auto& m = metrics_;
    std::vector<double> ttft;
    std::vector<double> tbt;
    double e2e = 0;
    for (auto& r : m.requests) {
      if (!r.completed) continue;
      ++m.completed;
      m.total_tokens += r.tokens;
      r.tbt_mean = r.tokens > 1 ? r.decode_gaps / static_cast<double>(r.tokens - 1) : 0.0;
      ttft.push_back(r.ttft);
      if (r.tokens > 1) tbt.push_back(r.tbt_mean);
      e2e += r.e2e;
    }
    auto pct = [](std::vector<double> v, double q) {
      if (v.empty()) return 0.0;
      std::sort(v.begin(), v.end());
      const auto idx = static_cast<std::size_t>(
          std::max(0.0, std::ceil(q * static_cast<double>(v.size())) - 1.0));
      return v[std::min(idx, v.size() - 1)];
    };
    auto mean = [](const std::vector<double>& v) {
      return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    m.mean_ttft = mean(ttft);
    m.p50_ttft = pct(ttft, 0.5);
    m.p99_ttft = pct(ttft, 0.99);
    m.mean_tbt = mean(tbt);
    m.p99_tbt = pct(tbt, 0.99);
    m.mean_e2e = m.completed ? e2e / static_cast<double>(m.completed) : 0.0;
    const double first = reqs_.empty() ? 0.0 : reqs_.front().req.arrival;
    m.makespan = std::max(0.0, last_token_ - first);
    m.tpt = m.makespan > 0 ? static_cast<double>(m.total_tokens) / m.makespan : 0.0;
    m.static_energy = static_power_w(sys_, temps_) * m.makespan;
    m.energy = m.dynamic_energy + m.static_energy;
    m.avg_power = m.makespan > 0 ? m.energy / m.makespan : 0.0;
    m.tokens_per_joule = m.energy > 0 ? static_cast<double>(m.total_tokens) / m.energy : 0.0;

    activity_.makespan = last_token_;
    SimResult out;
    out.metrics = std::move(metrics_);
    out.activity = std::move(activity_);
    out.roofline = std::move(roofline_);
    return out;
  }

  const hw::SystemSpec& sys_;
  const hw::ModelSpec& model_;
  const par::PdPlan& plan_;
  SchedulerConfig cfg_;
  Temps temps_;
  comm::Topology topo_;

  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> events_;
  std::uint64_t seq_ = 0;
  double now_ = 0;
  double last_token_ = 0;

  std::vector<ReqState> reqs_;
  std::deque<int> prefill_queue_;
  std::vector<std::vector<int>> batches_;
  std::vector<PrefillInst> prefill_;
  std::vector<DecodeInst> decode_;
  std::vector<GroupInfo> groups_;
  std::map<comm::MeshCoord, int> pe_ids_;
  std::vector<double> busy_;

  std::unordered_map<std::uint64_t, OpCost> op_cache_;
  comp::ComputeLut lut_;
  ServingMetrics metrics_;
  ActivityTrace activity_;
  std::vector<RooflineSample> roofline_;
};

}  // namespace

SimResult simulate(const hw::SystemSpec& sys, const hw::ModelSpec& model, const par::PdPlan& plan,
                   const trace::Trace& tr, const SchedulerConfig& cfg, const Temps& temps) {
  if (cfg.max_decode_batch < 1 || cfg.max_prefill_batch < 1) {
    throw Error(ErrorCode::InvalidConfig, "batch limits must be >= 1");
  }
  Engine e(sys, model, plan, tr, cfg, temps);
  return e.run();
}

RooflineReport roofline_check(const SimResult& r, double tolerance) {
  RooflineReport rep;
  double fl_pre = 0, by_pre = 0, fl_dec = 0, by_dec = 0;
  for (const auto& s : r.roofline) {
    if (s.seconds <= 0) continue;
    ++rep.checked;
    double ceiling = s.peak_flops;
    if (s.bytes > 0) ceiling = std::min(ceiling, s.mem_ceiling);
    const double ratio = (s.flops / s.seconds) / ceiling;
    rep.worst_ratio = std::max(rep.worst_ratio, ratio);
    if (ratio > 1.0 + tolerance) ++rep.violations;
    if (s.bytes > 0) {
      if (s.phase == par::Phase::Prefill) {
        fl_pre += s.flops;
        by_pre += s.bytes;
      } else {
        fl_dec += s.flops;
        by_dec += s.bytes;
      }
    }
  }
  rep.ai_prefill = by_pre > 0 ? fl_pre / by_pre : 0.0;
  rep.ai_decode = by_dec > 0 ? fl_dec / by_dec : 0.0;
  if (rep.violations > 0) {
    throw Error(ErrorCode::RooflineViolation,
                std::to_string(rep.violations) + " operators exceed the roofline (worst ratio " +
                    std::to_string(rep.worst_ratio) + ")");
  }
  return rep;
}

}  // namespace lamosim::sim

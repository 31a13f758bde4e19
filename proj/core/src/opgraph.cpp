// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#include "lamosim/opgraph.hpp"

#include <algorithm>
#include <numeric>

namespace lamosim::ops {

namespace {

std::int64_t shard(std::int64_t v, int tp) { return std::max<std::int64_t>(1, v / tp); }

Op gemm(std::string name, std::int64_t m, std::int64_t n, std::int64_t k, std::int64_t g = 1) {
  Op op;
  op.kind = OpKind::Gemm;
  op.name = std::move(name);
  op.shape = comp::GemmShape::make(m, n, k, g);
  return op;
}

Op vec(std::string name, double elements) {
  Op op;
  op.kind = OpKind::Vector;
  op.name = std::move(name);
  op.elements = elements;
  return op;
}

Op allreduce(std::string name, double bytes) {
  Op op;
  op.kind = OpKind::AllReduce;
  op.name = std::move(name);
  op.bytes = bytes;
  return op;
}

// Shared part of both phases; `q_lens[i]` query rows and `kv_lens[i]` keys per request.
std::vector<Op> layer(const hw::ModelSpec& m, int tp, const std::vector<std::int64_t>& q_lens,
                      const std::vector<std::int64_t>& kv_lens) {
  const std::int64_t tokens = std::accumulate(q_lens.begin(), q_lens.end(), std::int64_t{0});
  const std::int64_t heads = shard(m.n_heads, tp);
  const std::int64_t kv_heads = shard(m.n_kv_heads, tp);
  const std::int64_t q_per_kv = std::max<std::int64_t>(1, heads / kv_heads);
  const std::int64_t qkv_cols = (heads + 2 * kv_heads) * m.d_head;
  const std::int64_t ffn = shard(m.d_ffn, tp);
  const double hidden = static_cast<double>(tokens) * m.d_model;

  std::vector<Op> out;
  out.push_back(vec("attn_norm", 2.0 * hidden));
  out.push_back(gemm("qkv_proj", tokens, qkv_cols, m.d_model));
  for (std::size_t i = 0; i < q_lens.size(); ++i) {
    const std::int64_t rows = q_lens[i] * q_per_kv;  // grouped queries share K and V
    out.push_back(gemm("attn_score", rows, kv_lens[i], m.d_head, kv_heads));
    out.push_back(vec("softmax", 3.0 * static_cast<double>(heads) * q_lens[i] * kv_lens[i]));
    out.push_back(gemm("attn_value", rows, m.d_head, kv_lens[i], kv_heads));
  }
  out.push_back(gemm("o_proj", tokens, m.d_model, heads * m.d_head));
  if (tp > 1) out.push_back(allreduce("attn_allreduce", hidden * m.dtype_bytes));
  out.push_back(vec("residual_norm", 3.0 * hidden));
  out.push_back(gemm("ffn_up", tokens, (m.ffn_gated ? 2 : 1) * ffn, m.d_model));
  if (m.ffn_gated) out.push_back(vec("ffn_gate", 2.0 * static_cast<double>(tokens) * ffn));
  out.push_back(gemm("ffn_down", tokens, m.d_model, ffn));
  if (tp > 1) out.push_back(allreduce("ffn_allreduce", hidden * m.dtype_bytes));
  out.push_back(vec("residual", hidden));
  return out;
}

}  // namespace

std::vector<Op> prefill_layer(const hw::ModelSpec& m, int tp, const std::vector<std::int64_t>& lens) {
  return layer(m, tp, lens, lens);
}

std::vector<Op> decode_layer(const hw::ModelSpec& m, int tp, const std::vector<std::int64_t>& ctx) {
  return layer(m, tp, std::vector<std::int64_t>(ctx.size(), 1), ctx);
}

double activation_bytes(const hw::ModelSpec& m, std::int64_t tokens) {
  return static_cast<double>(tokens) * m.d_model * m.dtype_bytes;
}

}  // namespace lamosim::ops

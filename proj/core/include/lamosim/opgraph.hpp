// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Operator list of one decoder layer as executed by one TP shard. Dense
// projections are batched over all tokens in the iteration; attention runs
// per request.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lamosim/compmodel.hpp"
#include "lamosim/hwspec.hpp"

namespace lamosim::ops {

enum class OpKind { Gemm, Vector, AllReduce };

struct Op {
  OpKind kind = OpKind::Gemm;
  std::string name;
  comp::GemmShape shape;  ///< Gemm
  double elements = 0;    ///< Vector
  double bytes = 0;       ///< AllReduce payload per member
};

/// Prefill of a batch: `lens` holds each request's prompt length.
std::vector<Op> prefill_layer(const hw::ModelSpec& m, int tp, const std::vector<std::int64_t>& lens);

/// One decode iteration: `ctx` holds each request's current context length.
std::vector<Op> decode_layer(const hw::ModelSpec& m, int tp, const std::vector<std::int64_t>& ctx);

/// Hidden-state bytes for `tokens` tokens (stage-to-stage activation payload).
double activation_bytes(const hw::ModelSpec& m, std::int64_t tokens);

}  // namespace lamosim::ops

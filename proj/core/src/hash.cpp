// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#include "lamosim/hash.hpp"

#include <cstdio>
#include <cstring>

#include "lamosim/error.hpp"

namespace lamosim {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::AreaExceeded: return "AreaExceeded";
    case ErrorCode::PowerExceeded: return "PowerExceeded";
    case ErrorCode::InconsistentCapacity: return "InconsistentCapacity";
    case ErrorCode::InvalidRequest: return "InvalidRequest";
    case ErrorCode::RefreshStall: return "RefreshStall";
    case ErrorCode::InfeasibleTiling: return "InfeasibleTiling";
    case ErrorCode::NoFeasibleMapping: return "NoFeasibleMapping";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::TooManyStages: return "TooManyStages";
    case ErrorCode::CapacityExceeded: return "CapacityExceeded";
    case ErrorCode::UnknownSource: return "UnknownSource";
    case ErrorCode::KvOverflow: return "KvOverflow";
    case ErrorCode::PlanMismatch: return "PlanMismatch";
    case ErrorCode::RooflineViolation: return "RooflineViolation";
    case ErrorCode::SingularNetwork: return "SingularNetwork";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::EmptyDomain: return "EmptyDomain";
    case ErrorCode::NoFeasibleDesign: return "NoFeasibleDesign";
  }
  return "Unknown";
}

StableHasher& StableHasher::bytes(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    state_ ^= p[i];
    state_ *= 0x100000001b3ULL;
  }
  return *this;
}

StableHasher& StableHasher::str(std::string_view s) {
  u64(s.size());
  return bytes(s.data(), s.size());
}

StableHasher& StableHasher::u64(std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  return bytes(buf, sizeof buf);
}

StableHasher& StableHasher::f64(double v) {
  if (v == 0.0) v = 0.0;  // fold -0.0
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  return u64(bits);
}

std::uint64_t stable_hash(std::string_view s) { return StableHasher{}.str(s).digest(); }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose) {
  return StableHasher{}.u64(seed).str(purpose).digest();
}

}  // namespace lamosim

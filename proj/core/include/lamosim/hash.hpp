// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace lamosim {

/// FNV-1a 64-bit. Stable across runs and platforms, used for config hashes,
/// LUT keys and sub-seed derivation. Not cryptographic.
class StableHasher {
 public:
  StableHasher& bytes(const void* data, std::size_t n);
  StableHasher& str(std::string_view s);
  StableHasher& u64(std::uint64_t v);
  StableHasher& i64(std::int64_t v) { return u64(static_cast<std::uint64_t>(v)); }
  StableHasher& f64(double v);

  std::uint64_t digest() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::uint64_t stable_hash(std::string_view s);

/// Hex rendering used in manifests.
std::string hex64(std::uint64_t v);

/// Derives an independent RNG seed for one purpose from the run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose);

}  // namespace lamosim

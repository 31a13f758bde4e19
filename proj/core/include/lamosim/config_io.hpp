// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0
//
// JSON schema (version 1) for system, chiplet and model configs. Keys carry
// their units (`t_rcd_ns`, `capacity_bytes`, ...). Unknown keys are rejected.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "lamosim/hwspec.hpp"

namespace lamosim::config {

inline constexpr int kSchemaVersion = 1;

using nlohmann::json;

/// Reads and parses a JSON file; Error(InvalidConfig) names the path on failure.
json load_json_file(const std::filesystem::path& path);

hw::ChipletSpec chiplet_from_json(const json& j);
hw::SystemSpec system_from_json(const json& j);
hw::ModelSpec model_from_json(const json& j);

json to_json(const hw::ChipletSpec& c);
json to_json(const hw::SystemSpec& s);
json to_json(const hw::ModelSpec& m);

hw::SystemSpec load_system(const std::filesystem::path& path);
hw::ChipletSpec load_chiplet(const std::filesystem::path& path);
hw::ModelSpec load_model(const std::filesystem::path& path);

/// Hash of the canonical serialization; equal configs hash equal.
std::uint64_t config_hash(const json& j);

/// Strict object reader: typed lookups with defaults, then `finish()` throws
/// Error(InvalidConfig) if the object carried any key that was never read.
class StrictObject {
 public:
  StrictObject(const json& j, std::string context);

  template <typename T>
  T get(const std::string& key, const T& fallback) {
    used_.push_back(key);
    auto it = j_.find(key);
    if (it == j_.end()) return fallback;
    try {
      return it->template get<T>();
    } catch (const json::exception& e) {
      throw_bad(key, e.what());
    }
  }

  template <typename T>
  T require(const std::string& key) {
    if (!j_.contains(key)) throw_bad(key, "missing required key");
    return get<T>(key, T{});
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const json& child(const std::string& key);
  void finish() const;

 private:
  [[noreturn]] void throw_bad(const std::string& key, const std::string& why) const;

  const json& j_;
  std::string context_;
  std::vector<std::string> used_;
};

}  // namespace lamosim::config

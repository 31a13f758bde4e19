// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lamosim::trace {

enum class Source { Code, Reason, LongBench, File };

std::string_view to_string(Source s);
/// Case-insensitive; throws UnknownSource.
Source source_from_string(std::string_view s);

struct Request {
  std::int64_t id = 0;
  double arrival = 0;  ///< seconds
  std::int64_t input_len = 1;
  std::int64_t output_len = 1;
  bool operator==(const Request&) const = default;
};

struct Trace {
  std::vector<Request> requests;  ///< sorted by arrival, then id
  double rate = 0;
  Source source = Source::File;
};

struct LengthProfile {
  double mean_input = 0;
  double mean_output = 0;
};

LengthProfile profile(Source s);

struct GenOptions {
  double sigma_input = 0.6;   ///< log-space spread of prompt lengths
  double sigma_output = 0.6;
  std::int64_t max_len = 131072;
};

/// Poisson arrivals at `rate` req/s with lognormal lengths around the
/// source means. Deterministic per seed.
Trace gen_trace(Source source, double rate, std::int64_t n, std::uint64_t seed,
                const GenOptions& opt = {});

/// CSV with header `id,arrival_s,input_len,output_len`.
void write_csv(const Trace& t, const std::filesystem::path& path);
Trace read_csv(const std::filesystem::path& path);

}  // namespace lamosim::trace

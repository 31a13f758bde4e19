// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#include "lamosim/trace.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "lamosim/error.hpp"
#include "lamosim/hash.hpp"

namespace lamosim::trace {

std::string_view to_string(Source s) {
  switch (s) {
    case Source::Code: return "code";
    case Source::Reason: return "reason";
    case Source::LongBench: return "longbench";
    case Source::File: return "file";
  }
  return "?";
}

Source source_from_string(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (auto src : {Source::Code, Source::Reason, Source::LongBench, Source::File}) {
    if (to_string(src) == lower) return src;
  }
  throw Error(ErrorCode::UnknownSource, "unknown trace source '" + std::string(s) + "'");
}

LengthProfile profile(Source s) {
  switch (s) {
    case Source::Code: return {2071, 25};
    case Source::Reason: return {1473, 1293};
    case Source::LongBench: return {7108, 5};
    case Source::File: break;
  }
  throw Error(ErrorCode::UnknownSource, "file traces have no length profile");
}

Trace gen_trace(Source source, double rate, std::int64_t n, std::uint64_t seed,
                const GenOptions& opt) {
  if (!(rate > 0)) throw Error(ErrorCode::InvalidRequest, "rate must be > 0");
  if (n < 1) throw Error(ErrorCode::InvalidRequest, "n must be >= 1");
  const auto prof = profile(source);
  std::mt19937_64 arrivals(derive_seed(seed, "trace/arrival"));
  std::mt19937_64 inputs(derive_seed(seed, "trace/input"));
  std::mt19937_64 outputs(derive_seed(seed, "trace/output"));
  std::exponential_distribution<double> gap(rate);
  // mu chosen so that the lognormal mean equals the profile mean.
  std::lognormal_distribution<double> in_len(
      std::log(prof.mean_input) - opt.sigma_input * opt.sigma_input / 2, opt.sigma_input);
  std::lognormal_distribution<double> out_len(
      std::log(prof.mean_output) - opt.sigma_output * opt.sigma_output / 2, opt.sigma_output);
  auto draw = [&](std::lognormal_distribution<double>& d, std::mt19937_64& g) {
    return std::clamp<std::int64_t>(std::llround(d(g)), 1, opt.max_len);
  };
  Trace t;
  t.rate = rate;
  t.source = source;
  double now = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    now += gap(arrivals);
    t.requests.push_back({i, now, draw(in_len, inputs), draw(out_len, outputs)});
  }
  return t;
}

void write_csv(const Trace& t, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write " + path.string());
  out << "id,arrival_s,input_len,output_len\n";
  char buf[64];
  for (const auto& r : t.requests) {
    std::snprintf(buf, sizeof buf, "%.17g", r.arrival);
    out << r.id << ',' << buf << ',' << r.input_len << ',' << r.output_len << '\n';
  }
}

Trace read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open trace file " + path.string());
  Trace t;
  std::string line;
  std::getline(in, line);
  if (line.rfind("id,arrival_s,input_len,output_len", 0) != 0) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": bad trace header");
  }
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    Request r;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(ss >> r.id >> c1 >> r.arrival >> c2 >> r.input_len >> c3 >> r.output_len) || c1 != ',' ||
        c2 != ',' || c3 != ',' || r.input_len < 1 || r.output_len < 1 || r.arrival < 0) {
      throw Error(ErrorCode::InvalidConfig,
                  path.string() + ":" + std::to_string(lineno) + ": malformed request");
    }
    t.requests.push_back(r);
  }
  std::stable_sort(t.requests.begin(), t.requests.end(), [](const Request& a, const Request& b) {
    return a.arrival < b.arrival || (a.arrival == b.arrival && a.id < b.id);
  });
  if (t.requests.size() > 1 && t.requests.back().arrival > 0) {
    t.rate = static_cast<double>(t.requests.size()) / t.requests.back().arrival;
  }
  return t;
}

}  // namespace lamosim::trace

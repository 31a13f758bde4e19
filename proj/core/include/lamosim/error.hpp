// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lamosim {

enum class ErrorCode {
  InvalidConfig,
  AreaExceeded,
  PowerExceeded,
  InconsistentCapacity,
  InvalidRequest,
  RefreshStall,
  InfeasibleTiling,
  NoFeasibleMapping,
  EmptyGroup,
  Infeasible,
  TooManyStages,
  CapacityExceeded,
  UnknownSource,
  KvOverflow,
  PlanMismatch,
  RooflineViolation,
  SingularNetwork,
  NonConvergence,
  EmptyDomain,
  NoFeasibleDesign,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code; the CLI maps codes to exit
/// statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lamosim

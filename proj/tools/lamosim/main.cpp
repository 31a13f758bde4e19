// Copyright 2026 The lamosim Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include "lamosim/common.hpp"
#include "lamosim/report_io.hpp"

int main(int argc, char** argv) {
  using namespace lamosim::cli;
  CLI::App app{"lamosim: chiplet LLM-serving simulator and design-space explorer", "lamosim"};
  app.set_version_flag("--version", std::string(lamosim::report::kToolVersion));
  app.require_subcommand(1);
  int rc = kOk;
  register_dataflow(app, rc);
  register_gen_trace(app, rc);
  register_plan(app, rc);
  register_simulate(app, rc);
  register_dse(app, rc);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  return rc;
}

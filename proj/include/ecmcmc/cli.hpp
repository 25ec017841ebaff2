// Copyright 2026 The ecmcmc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "ecmcmc/config.hpp"
#include "ecmcmc/experiment.hpp"
#include "ecmcmc/selfcheck.hpp"

namespace ecmcmc {

/// Entry point of the `ecmcmc` tool. Returns the process exit code.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Parallel SGHMC and elastically coupled SGHMC experiments", "ecmcmc"};
  app.require_subcommand(1);

  std::string config_path, mode = "virtual", out_dir, run_dir;
  std::uint64_t seed = 0;
  bool quiet = false, inject_fault = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override every arm's master seed");
    sub->add_option("--mode", mode, "virtual (deterministic) or threads")->check(CLI::IsMember({"virtual", "threads"}));
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    sub->add_flag("--quiet", quiet, "only report errors");
  };
  auto* run = app.add_subcommand("run", "run every arm of a config and write artifacts");
  add_common(run);
  auto* compare = app.add_subcommand("compare", "run two or more arms and write comparison tables");
  add_common(compare);
  auto* check = app.add_subcommand("check", "run the invariant self-check suite");
  check->add_flag("--inject-fault", inject_fault, "mismatch noise_scaling in the decoupling check");
  check->add_flag("--quiet", quiet, "only print failures");
  auto* exp = app.add_subcommand("export", "write samples.csv and diagnostics.json for a finished run");
  exp->add_option("--run", run_dir, "run directory holding manifest.json and samples.jsonl");
  exp->add_option("--config", config_path, "take the run directory from this config's output.dir");
  exp->add_option("--out", out_dir, "where to write (default: the run directory)");
  exp->add_flag("--quiet", quiet, "only report errors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitConfig;
  }

  if (check->parsed()) {
    const auto results = run_self_checks(inject_fault);
    bool ok = true;
    for (const auto& r : results) ok = ok && r.passed;
    if (quiet) {
      std::vector<CheckResult> bad;
      for (const auto& r : results)
        if (!r.passed) bad.push_back(r);
      print_checks(bad, out);
    } else {
      print_checks(results, out);
      out << (ok ? "all checks passed\n" : "some checks FAILED\n");
    }
    return ok ? kExitOk : kExitCheckFailed;
  }

  if (exp->parsed()) {
    std::string dir = run_dir;
    if (dir.empty() && !config_path.empty()) {
      try {
        dir = load_config(config_path).output.dir;
      } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
      }
    }
    if (dir.empty()) {
      err << "usage error: export needs --run or --config\n";
      return kExitConfig;
    }
    return export_run(dir, out_dir.empty() ? dir : out_dir, out, err, quiet);
  }

  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  RunOptions opts;
  if (run->parsed() ? run->count("--seed") : compare->count("--seed")) opts.seed = seed;
  if (!out_dir.empty()) opts.out = out_dir;
  opts.mode = mode == "threads" ? Mode::threads : Mode::virtual_time;
  opts.quiet = quiet;
  opts.max_threads = thread_cap_from_env();
  return execute(std::move(cfg), opts, compare->parsed(), out, err);
}

}  // namespace ecmcmc

// Copyright 2026 The basinlab Authors
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

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "basinlab/errors.hpp"
#include "basinlab/experiments/config.hpp"
#include "basinlab/experiments/runner.hpp"

namespace ex = basinlab::experiments;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCheck = 3;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int jobs = 1;
  bool check = false;
};

int run(ex::ExperimentKind kind, const CommonFlags& f) {
  ex::ExperimentConfig cfg;
  try {
    cfg = f.config.empty() ? ex::default_config(kind) : ex::load_config(f.config);
  } catch (const basinlab::ConfigError& e) {
    std::cerr << "config error at " << e.what() << '\n';
    return kExitConfig;
  }
  if (cfg.experiment != kind) {
    std::cerr << "config error: file describes '" << ex::to_string(cfg.experiment)
              << "' but the subcommand is '" << ex::subcommand_name(kind) << "'\n";
    return kExitConfig;
  }
  if (f.seed) cfg.seed = *f.seed;
  if (!f.out.empty()) cfg.output_dir = f.out;

  ex::RunResult res;
  try {
    res = ex::run_experiment(cfg, {f.jobs});
  } catch (const basinlab::ConfigError& e) {
    std::cerr << "config error at " << e.what() << '\n';
    return kExitConfig;
  } catch (const basinlab::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }

  std::cout << ex::subcommand_name(kind) << ": wrote " << res.artifacts.size()
            << " artifacts to " << res.output_dir.string() << '\n';
  for (const auto& c : res.checks)
    std::cout << (c.pass ? "  PASS " : "  FAIL ") << c.name << "  (" << c.detail << ")\n";
  if (f.check && !res.all_checks_pass()) return kExitCheck;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"basinlab: attractor-geometry experiments on toy memorization networks"};
  app.set_version_flag("--version", std::string(BASINLAB_VERSION));
  app.require_subcommand(1);

  CommonFlags flags;
  std::optional<ex::ExperimentKind> chosen;
  for (auto kind : {ex::ExperimentKind::width_sweep, ex::ExperimentKind::law_verify,
                    ex::ExperimentKind::law_fit_reference, ex::ExperimentKind::jacobian_suite,
                    ex::ExperimentKind::perturb, ex::ExperimentKind::detect_suite,
                    ex::ExperimentKind::distill}) {
    auto* sub = app.add_subcommand(ex::subcommand_name(kind), "run the " + ex::to_string(kind) +
                                                                  " experiment");
    sub->add_option("--config", flags.config, "JSON config or a run manifest to replay");
    sub->add_option("--seed", flags.seed, "override the top-level seed");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--jobs", flags.jobs, "worker threads for sweep rows")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--check", flags.check, "exit with status 3 if any acceptance check fails");
    sub->callback([&chosen, kind] { chosen = kind; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }
  return run(*chosen, flags);
}

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

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "basinlab/experiments/config.hpp"
#include "basinlab/nnkit.hpp"
#include "basinlab/train.hpp"
#include "basinlab/taskgen.hpp"
#include "json.hpp"

namespace basinlab::experiments {

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RunOptions {
  int jobs = 1;  // worker threads for independent sweep rows
};

struct RunResult {
  std::filesystem::path output_dir;
  std::vector<std::filesystem::path> artifacts;
  std::vector<Check> checks;
  nlohmann::json summary;

  bool all_checks_pass() const;
};

/// Run one experiment into cfg.output_dir and write manifest.json there.
RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

// Shared training block helpers, exposed for tests and the detect suite.
taskgen::Dataset dataset_from_block(const nlohmann::json& block, std::uint64_t seed);
nnkit::ModelParams train_from_block(const nlohmann::json& block, const taskgen::Dataset& ds,
                                    int width, std::uint64_t seed,
                                    nnkit::TrainReport* report = nullptr);

}  // namespace basinlab::experiments

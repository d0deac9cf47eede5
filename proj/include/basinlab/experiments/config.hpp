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

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"

namespace basinlab::experiments {

enum class ExperimentKind {
  width_sweep,
  law_verify,
  law_fit_reference,
  jacobian_suite,
  perturb,
  detect_suite,
  distill,
};

std::string to_string(ExperimentKind k);
ExperimentKind experiment_from_string(const std::string& s);

// CLI subcommand name, e.g. "width-sweep" or "law-fit".
std::string subcommand_name(ExperimentKind k);
ExperimentKind experiment_from_subcommand(const std::string& s);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::width_sweep;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir;
  nlohmann::json params;  // fully resolved, defaults filled in

  nlohmann::json to_json() const;
};

/// Every recognised parameter with its default value. Types in this object
/// are the schema: a null default accepts null or a number.
nlohmann::json default_params(ExperimentKind k);

ExperimentConfig default_config(ExperimentKind k);

/// Validate and resolve a config document. Accepts either a config object
/// or a run manifest (its embedded config is used). Throws ConfigError
/// carrying the offending path, e.g. "/params/widths/2".
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

// Resolve a bundled data file: absolute, relative to the working directory,
// or relative to the installed data directory.
std::filesystem::path resolve_data_path(const std::string& p);

}  // namespace basinlab::experiments

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
#include <vector>

#include "basinlab/experiments/config.hpp"
#include "json.hpp"

namespace basinlab::experiments {

struct ArtifactEntry {
  std::string path;  // relative to the output directory
  std::uintmax_t bytes = 0;
  std::string fnv1a64;  // hex digest of the file contents
};

// FNV-1a digest of a file's bytes.
std::string file_checksum(const std::filesystem::path& path);

ArtifactEntry describe_artifact(const std::filesystem::path& output_dir,
                                const std::filesystem::path& file);

/// Manifest document: resolved config, seed, tool and module versions, and
/// per-artifact checksums. Accepted by load_config for replay.
nlohmann::json make_manifest(const ExperimentConfig& cfg,
                             const std::vector<ArtifactEntry>& artifacts,
                             const nlohmann::json& summary);

void write_manifest(const std::filesystem::path& path, const nlohmann::json& manifest);

// Artifacts whose current checksum differs from the manifest entry.
std::vector<std::string> verify_manifest(const std::filesystem::path& output_dir);

}  // namespace basinlab::experiments

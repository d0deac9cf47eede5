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

#include "basinlab/experiments/manifest.hpp"

#include <fstream>
#include <iterator>

#include "basinlab/errors.hpp"
#include "basinlab/hash.hpp"

#ifndef BASINLAB_VERSION
#define BASINLAB_VERSION "0.0.0"
#endif

namespace basinlab::experiments {

namespace {

// Bumped whenever a module changes its numeric output for the same inputs.
const nlohmann::json kModuleVersions = {
    {"nnkit", 1},  {"taskgen", 1}, {"geometry", 1}, {"jacobian", 1},
    {"scalinglaw", 1}, {"detect", 1}, {"metacog", 1}, {"runner", 1}};

}  // namespace

std::string file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return hex64(fnv1a64(bytes));
}

ArtifactEntry describe_artifact(const std::filesystem::path& output_dir,
                                const std::filesystem::path& file) {
  ArtifactEntry e;
  e.path = std::filesystem::relative(file, output_dir).generic_string();
  e.bytes = std::filesystem::file_size(file);
  e.fnv1a64 = file_checksum(file);
  return e;
}

nlohmann::json make_manifest(const ExperimentConfig& cfg,
                             const std::vector<ArtifactEntry>& artifacts,
                             const nlohmann::json& summary) {
  nlohmann::json arts = nlohmann::json::array();
  for (const auto& a : artifacts)
    arts.push_back({{"path", a.path}, {"bytes", a.bytes}, {"fnv1a64", a.fnv1a64}});
  return {{"format", "basinlab.manifest"},
          {"manifest_version", 1},
          {"tool_version", BASINLAB_VERSION},
          {"module_versions", kModuleVersions},
          {"seed_scheme", "splitmix64 over (parent seed, FNV-1a(label))"},
          {"config", cfg.to_json()},
          {"artifacts", arts},
          {"summary", summary}};
}

void write_manifest(const std::filesystem::path& path, const nlohmann::json& manifest) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << manifest.dump(2) << '\n';
}

std::vector<std::string> verify_manifest(const std::filesystem::path& output_dir) {
  std::ifstream in(output_dir / "manifest.json");
  if (!in) throw InvalidInput("no manifest in " + output_dir.string());
  const auto m = nlohmann::json::parse(in);
  std::vector<std::string> bad;
  for (const auto& a : m.at("artifacts")) {
    const auto p = output_dir / a.at("path").get<std::string>();
    if (!std::filesystem::exists(p) || file_checksum(p) != a.at("fnv1a64").get<std::string>())
      bad.push_back(a.at("path").get<std::string>());
  }
  return bad;
}

}  // namespace basinlab::experiments

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

#include "basinlab/experiments/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include "basinlab/errors.hpp"
#include "basinlab/scalinglaw.hpp"

#ifndef BASINLAB_DATA_DIR
#define BASINLAB_DATA_DIR "data"
#endif

namespace basinlab::experiments {

using nlohmann::json;

namespace {

struct KindName {
  ExperimentKind kind;
  const char* tag;
  const char* sub;
};

constexpr KindName kNames[] = {
    {ExperimentKind::width_sweep, "width_sweep", "width-sweep"},
    {ExperimentKind::law_verify, "law_verify", "law-verify"},
    {ExperimentKind::law_fit_reference, "law_fit_reference", "law-fit"},
    {ExperimentKind::jacobian_suite, "jacobian_suite", "jacobian-suite"},
    {ExperimentKind::perturb, "perturb", "perturb"},
    {ExperimentKind::detect_suite, "detect_suite", "detect-suite"},
    {ExperimentKind::distill, "distill", "distill"},
};

// Dataset and student training block shared by the training experiments.
json training_block(int width) {
  return {{"n_seen", 500},
          {"n_unseen", 200},
          {"d_in", 64},
          {"classes", 500},
          {"width", width},
          {"activation", "relu"},
          {"steps", 20000},
          {"learning_rate", 1.0},
          {"batch_size", 32},
          {"loss_threshold", 0.05},
          {"input_noise", 0.0},
          {"teacher_beta", nullptr},
          {"teacher_width", 128},
          {"k_variants", 3},
          {"variant_noise", 0.05}};
}

std::string type_name(const json& j) {
  if (j.is_null()) return "null";
  if (j.is_boolean()) return "boolean";
  if (j.is_number_integer()) return "integer";
  if (j.is_number()) return "number";
  if (j.is_string()) return "string";
  if (j.is_array()) return "array";
  return "object";
}

void check_type(const json& schema, const json& value, const std::string& path) {
  auto fail = [&](const std::string& want) {
    throw ConfigError(path, "expected " + want + ", got " + type_name(value));
  };
  if (schema.is_null()) {
    if (!value.is_null() && !value.is_number()) fail("number or null");
  } else if (schema.is_boolean()) {
    if (!value.is_boolean()) fail("boolean");
  } else if (schema.is_number_integer()) {
    if (!value.is_number_integer()) fail("integer");
  } else if (schema.is_number()) {
    if (!value.is_number()) fail("number");
  } else if (schema.is_string()) {
    if (!value.is_string()) fail("string");
  } else if (schema.is_array()) {
    if (!value.is_array()) fail("array");
    if (!schema.empty())
      for (std::size_t i = 0; i < value.size(); ++i)
        check_type(schema.front(), value[i], path + "/" + std::to_string(i));
  } else if (schema.is_object()) {
    if (!value.is_object()) fail("object");
  }
}

// Overlay `user` on `defaults`, rejecting unknown keys and type mismatches.
json merge(const json& defaults, const json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError(path, "expected object, got " + type_name(user));
  json out = defaults;
  for (const auto& [key, value] : user.items()) {
    const std::string p = path + "/" + key;
    if (!defaults.contains(key)) throw ConfigError(p, "unknown key");
    const json& schema = defaults.at(key);
    if (schema.is_object() && !schema.empty()) {
      out[key] = merge(schema, value, p);
    } else {
      check_type(schema, value, p);
      out[key] = value;
    }
  }
  return out;
}

void positive(const json& p, const std::string& key, const std::string& base) {
  if (!(p.at(key).get<double>() > 0.0)) throw ConfigError(base + "/" + key, "must be positive");
}

void non_negative(const json& p, const std::string& key, const std::string& base) {
  if (p.at(key).get<double>() < 0.0) throw ConfigError(base + "/" + key, "must be non-negative");
}

void validate_training(const json& t, const std::string& base) {
  for (const char* k : {"n_seen", "d_in", "learning_rate", "batch_size",
                        "teacher_width", "k_variants"})
    positive(t, k, base);
  if (t.contains("width")) positive(t, "width", base);
  non_negative(t, "n_unseen", base);
  non_negative(t, "steps", base);
  non_negative(t, "input_noise", base);
  non_negative(t, "variant_noise", base);
  if (t.at("classes").get<int>() < 2) throw ConfigError(base + "/classes", "must be at least 2");
  if (!t.at("teacher_beta").is_null()) positive(t, "teacher_beta", base);
  const auto act = t.at("activation").get<std::string>();
  if (act != "relu" && act != "tanh")
    throw ConfigError(base + "/activation", "must be \"relu\" or \"tanh\"");
}

void validate_background(const json& bg, const std::string& base) {
  try {
    const auto kind = law::background_kind_from_string(bg.at("kind").get<std::string>());
    if (kind == law::BackgroundKind::flat_tail) {
      if (bg.at("v").get<int>() < 3) throw ConfigError(base + "/v", "must be at least 3");
      non_negative(bg, "tail_offset_g", base);
    }
  } catch (const InvalidInput& e) {
    throw ConfigError(base + "/kind", e.what());
  }
}

void validate_params(ExperimentKind k, const json& p) {
  const std::string b = "/params";
  switch (k) {
    case ExperimentKind::width_sweep: {
      validate_training(p, b);
      if (p.at("widths").empty()) throw ConfigError(b + "/widths", "must not be empty");
      for (std::size_t i = 0; i < p.at("widths").size(); ++i)
        if (p.at("widths")[i].get<int>() < 1)
          throw ConfigError(b + "/widths/" + std::to_string(i), "must be positive");
      positive(p, "h0", b);
      break;
    }
    case ExperimentKind::law_verify: {
      const auto mode = p.at("mode").get<std::string>();
      if (mode != "synthetic" && mode != "reference")
        throw ConfigError(b + "/mode", "must be \"synthetic\" or \"reference\"");
      if (mode == "synthetic" && p.at("delta_bars").empty())
        throw ConfigError(b + "/delta_bars", "must not be empty in synthetic mode");
      for (std::size_t i = 0; i < p.at("delta_bars").size(); ++i)
        if (!(p.at("delta_bars")[i].get<double>() > 0.0))
          throw ConfigError(b + "/delta_bars/" + std::to_string(i), "must be positive");
      positive(p, "n", b);
      positive(p, "h0", b);
      positive(p, "tolerance", b);
      validate_background(p.at("background"), b + "/background");
      break;
    }
    case ExperimentKind::law_fit_reference:
      positive(p, "h0", b);
      break;
    case ExperimentKind::jacobian_suite:
      for (const char* key : {"trials", "dim", "heads", "model_width"}) positive(p, key, b);
      if (p.at("dim").get<int>() < 2) throw ConfigError(b + "/dim", "must be at least 2");
      break;
    case ExperimentKind::perturb:
      validate_training(p.at("training"), b + "/training");
      positive(p, "trials", b);
      non_negative(p, "max_entities", b);
      if (p.at("alphas").empty()) throw ConfigError(b + "/alphas", "must not be empty");
      for (std::size_t i = 0; i < p.at("alphas").size(); ++i)
        if (p.at("alphas")[i].get<double>() < 0.0)
          throw ConfigError(b + "/alphas/" + std::to_string(i), "must be non-negative");
      break;
    case ExperimentKind::detect_suite: {
      validate_training(p.at("training"), b + "/training");
      if (p.at("folds").get<int>() < 2) throw ConfigError(b + "/folds", "must be at least 2");
      static const std::vector<std::string> rungs = {"entropy_only", "margin_only",
                                                     "margin_stability", "all"};
      for (std::size_t i = 0; i < p.at("ladder").size(); ++i) {
        const auto r = p.at("ladder")[i].get<std::string>();
        if (std::find(rungs.begin(), rungs.end(), r) == rungs.end())
          throw ConfigError(b + "/ladder/" + std::to_string(i), "unknown ladder row '" + r + "'");
      }
      break;
    }
    case ExperimentKind::distill: {
      validate_training(p.at("training"), b + "/training");
      const auto& s = p.at("schedule");
      const std::string sb = b + "/schedule";
      for (const char* key : {"phase2_steps", "phase3_steps", "center_refresh_interval",
                              "geo_loss_weight", "lm_loss_weight", "probe_count"})
        non_negative(s, key, sb);
      for (const char* key : {"head_width", "head_learning_rate", "confidence_learning_rate"})
        positive(s, key, sb);
      const double w = s.at("geo_loss_weight").get<double>() + s.at("lm_loss_weight").get<double>();
      if (std::abs(w - 1.0) > 1e-9) throw ConfigError(sb + "/geo_loss_weight", "loss weights must sum to 1");
      break;
    }
  }
}

}  // namespace

std::string to_string(ExperimentKind k) {
  for (const auto& n : kNames)
    if (n.kind == k) return n.tag;
  return "unknown";
}

ExperimentKind experiment_from_string(const std::string& s) {
  for (const auto& n : kNames)
    if (s == n.tag) return n.kind;
  throw ConfigError("/experiment", "unknown experiment '" + s + "'");
}

std::string subcommand_name(ExperimentKind k) {
  for (const auto& n : kNames)
    if (n.kind == k) return n.sub;
  return "unknown";
}

ExperimentKind experiment_from_subcommand(const std::string& s) {
  for (const auto& n : kNames)
    if (s == n.sub) return n.kind;
  throw ConfigError("", "unknown subcommand '" + s + "'");
}

json default_params(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::width_sweep: {
      json p = training_block(0);
      p.erase("width");
      p["widths"] = {16, 64, 256};
      p["h0"] = 0.1;
      p["save_checkpoints"] = true;
      return p;
    }
    case ExperimentKind::law_verify:
      return {{"mode", "synthetic"},
              {"delta_bars", {0.8, 1.5, 3.0}},
              {"n", 10000},
              {"h0", 0.1},
              {"stratified", true},
              {"tolerance", 0.1},
              {"background",
               {{"kind", "flat_tail"},
                {"v", law::kDefaultVocab},
                {"tail_offset_g", law::kDefaultTailOffset}}},
              {"reference_csv", "reference/law_points.csv"}};
    case ExperimentKind::law_fit_reference:
      return {{"reference_csv", "reference/law_points.csv"},
              {"gap_stats_csv", "reference/gap_stats.csv"},
              {"h0", 0.1}};
    case ExperimentKind::jacobian_suite:
      return {{"trials", 100}, {"dim", 16}, {"heads", 4}, {"model_width", 32}};
    case ExperimentKind::perturb:
      return {{"training", training_block(16)},
              {"alphas", {0.0, 0.005, 0.01, 0.02, 0.05, 0.1}},
              {"trials", 100},
              {"max_entities", 0},
              {"checkpoint", ""}};
    case ExperimentKind::detect_suite:
      return {{"training", training_block(256)},
              {"artifact_dir", ""},
              {"folds", 5},
              {"ladder", {"entropy_only", "margin_only", "margin_stability", "all"}}};
    case ExperimentKind::distill:
      return {{"training", training_block(128)},
              {"schedule",
               {{"phase2_steps", 26667},
                {"phase3_steps", 20000},
                {"geo_loss_weight", 0.2},
                {"lm_loss_weight", 0.8},
                {"center_refresh_interval", 13334},
                {"head_width", 64},
                {"head_learning_rate", 0.05},
                {"confidence_learning_rate", 0.1},
                {"co_train", true},
                {"probe_count", 500}}}};
  }
  return json::object();
}

ExperimentConfig default_config(ExperimentKind k) {
  ExperimentConfig c;
  c.experiment = k;
  c.output_dir = std::filesystem::path("runs") / to_string(k);
  c.params = default_params(k);
  return c;
}

json ExperimentConfig::to_json() const {
  return {{"experiment", to_string(experiment)},
          {"seed", seed},
          {"output_dir", output_dir.string()},
          {"params", params}};
}

ExperimentConfig parse_config(const json& doc_in) {
  if (!doc_in.is_object()) throw ConfigError("", "config must be a JSON object");
  const json* doc = &doc_in;
  if (doc_in.contains("format")) {
    if (doc_in.at("format") != "basinlab.manifest")
      throw ConfigError("/format", "unrecognised document format");
    if (!doc_in.contains("config")) throw ConfigError("/config", "manifest has no config");
    doc = &doc_in.at("config");
    if (!doc->is_object()) throw ConfigError("/config", "expected object");
  }
  for (const auto& [key, value] : doc->items())
    if (key != "experiment" && key != "seed" && key != "output_dir" && key != "params")
      throw ConfigError("/" + key, "unknown key");
  if (!doc->contains("experiment")) throw ConfigError("/experiment", "required");
  if (!doc->at("experiment").is_string())
    throw ConfigError("/experiment", "expected string");
  ExperimentConfig c = default_config(experiment_from_string(doc->at("experiment")));
  if (doc->contains("seed")) {
    const json& seed = doc->at("seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0))
      throw ConfigError("/seed", "expected non-negative integer");
    c.seed = doc->at("seed").get<std::uint64_t>();
  }
  if (doc->contains("output_dir")) {
    if (!doc->at("output_dir").is_string()) throw ConfigError("/output_dir", "expected string");
    c.output_dir = doc->at("output_dir").get<std::string>();
  }
  if (doc->contains("params")) c.params = merge(c.params, doc->at("params"), "/params");
  validate_params(c.experiment, c.params);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("", path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

std::filesystem::path resolve_data_path(const std::string& p) {
  const std::filesystem::path path(p);
  if (path.is_absolute() || std::filesystem::exists(path)) return path;
  const auto bundled = std::filesystem::path(BASINLAB_DATA_DIR) / path;
  if (std::filesystem::exists(bundled)) return bundled;
  return path;
}

}  // namespace basinlab::experiments

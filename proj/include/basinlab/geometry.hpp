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
#include <string>
#include <vector>

#include "basinlab/csv.hpp"
#include "basinlab/nnkit.hpp"
#include "basinlab/taskgen.hpp"

namespace basinlab::geometry {

using taskgen::EntityId;

/// Basin centers m_i: mean hidden state over each seen entity's variants.
struct BasinCenterSet {
  std::vector<EntityId> ids;
  std::vector<Vector> centers;  // parallel to ids
  int variants_used = 0;
  std::string source_layer = "hidden";

  void add(EntityId id, Vector center);
  std::size_t size() const { return ids.size(); }
  Eigen::Index dim() const { return centers.empty() ? 0 : centers.front().size(); }
  const Vector& center(EntityId id) const;  // throws if absent
};

BasinCenterSet basin_centers(const nnkit::ModelParams& model,
                             const taskgen::Dataset& dataset, int k_variants,
                             double noise_scale, std::uint64_t seed);

struct Margin {
  double delta = 0.0;
  EntityId nearest_id = 0;
};

// Nearest and second-nearest distances in one scan; `second` is +inf and
// `second_id` is -1 with a single center.
struct NearestTwo {
  double first = 0.0;
  EntityId first_id = 0;
  double second = 0.0;
  EntityId second_id = -1;
};

NearestTwo nearest_two(const Vector& h, const BasinCenterSet& centers);

/// delta = min_i |h - m_i|; ties go to the smallest entity id.
Margin margin(const Vector& h, const BasinCenterSet& centers);

/// delta_2 - delta. Undefined (throws) with fewer than two centers.
double gap(const Vector& h, const BasinCenterSet& centers);

/// Fraction of unordered variant pairs whose argmax predictions agree.
double stability(const nnkit::ModelParams& model, const taskgen::VariantSet& variants);

// Same, from already computed predictions.
double pairwise_agreement(const std::vector<Eigen::Index>& predictions);

enum class Condition { seen, unseen };
std::string to_string(Condition c);

struct SignalRecord {
  EntityId query_id = 0;
  Condition condition = Condition::seen;
  double margin = 0.0;
  double gap = 0.0;
  EntityId nearest_id = 0;
  double entropy = 0.0;
  nnkit::EntropyBase entropy_base = nnkit::EntropyBase::nats;
  double stability = 0.0;
  double top1_prob = 0.0;
  double hidden_variance = 0.0;
  double logit_gap = 0.0;  // top-2 logit gap, feeds the scaling-law analysis
  bool correct = false;
};

struct SweepOptions {
  int k_variants = 3;  // variants per query for stability, >= 2
  double noise_scale = 0.05;
  std::uint64_t seed = 0;
  nnkit::EntropyBase entropy_base = nnkit::EntropyBase::nats;
};

/// One record per seen entity followed by one per unseen entity.
std::vector<SignalRecord> signal_sweep(const nnkit::ModelParams& model,
                                       const taskgen::Dataset& dataset,
                                       const BasinCenterSet& centers,
                                       const SweepOptions& opts);

/// Mean unseen margin over mean seen margin; +inf when the seen mean is 0.
double separation_ratio(const std::vector<SignalRecord>& records);

struct PerturbCurve {
  std::vector<double> alphas;
  std::vector<double> error_rate;
  std::vector<double> mean_entropy;
  std::vector<double> error_sem;
  std::vector<double> entropy_sem;
  int trials_per_alpha = 0;
  int entities = 0;
};

// Appendix-style noise schedule.
inline const std::vector<double> kDefaultAlphas = {0.0, 0.005, 0.01, 0.02, 0.05, 0.1};

/// Input-noise sweep over the seen entities: each trial adds
/// N(0, (alpha * mean|e|)^2 I) to the embedding (no renormalization).
PerturbCurve perturb_sweep(const nnkit::ModelParams& model,
                           const taskgen::Dataset& dataset,
                           const std::vector<double>& alphas, int trials,
                           std::uint64_t seed, int max_entities = 0);

CsvTable signals_to_csv(const std::vector<SignalRecord>& records);
std::vector<SignalRecord> signals_from_csv(const CsvTable& table);
CsvTable perturb_to_csv(const PerturbCurve& curve);

}  // namespace basinlab::geometry

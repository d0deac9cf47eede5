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
#include "basinlab/detect.hpp"
#include "basinlab/geometry.hpp"
#include "basinlab/nnkit.hpp"
#include "basinlab/taskgen.hpp"
#include "basinlab/train.hpp"

// Metacognitive head trained on top of the student's hidden state. A shared
// tanh backbone feeds a geometric output (normalized margin and gap) and a
// confidence logit.
namespace basinlab::metacog {

struct HeadParams {
  Matrix w_hidden;  // head_width x m
  Vector b_hidden;
  Matrix w_geo;     // 2 x head_width: (margin, gap)
  Vector b_geo;
  Vector w_conf;    // head_width
  double b_conf = 0.0;
  // Target normalization, frozen at the start of co-training.
  double margin_mean = 0.0, margin_std = 1.0;
  double gap_mean = 0.0, gap_std = 1.0;

  Eigen::Index input_dim() const { return w_hidden.cols(); }
  Eigen::Index head_width() const { return w_hidden.rows(); }
  static constexpr int geometric_outputs = 2;
  static constexpr int output_dim = 3;

  void validate() const;
};

HeadParams init_head(Eigen::Index input_dim, Eigen::Index head_width, std::uint64_t seed);

struct HeadOutput {
  double margin = 0.0;  // normalized units
  double gap = 0.0;     // normalized units
  double confidence_logit = 0.0;
};

HeadOutput head_forward(const HeadParams& head, const Vector& hidden);

struct DistillSchedule {
  nnkit::TrainConfig student;  // steps is replaced by phase1_steps
  // 3:4:3 split with phase 1 as three epochs; refresh every two epochs.
  std::int64_t phase1_steps = 20000;
  std::int64_t phase2_steps = 26667;
  std::int64_t phase3_steps = 20000;
  double geo_loss_weight = 0.2;
  double lm_loss_weight = 0.8;
  std::int64_t center_refresh_interval = 13334;
  int head_width = 64;
  double head_learning_rate = 0.05;
  double confidence_learning_rate = 0.1;
  // When false, Phase 2 gradients stop at the head (post-hoc probe).
  bool co_train = true;
  int k_variants = 3;
  double variant_noise = 0.05;
  // Random unit-norm inputs added to the Phase 2/3 pools as negatives.
  int probe_count = 500;

  void validate() const;

  // Phase lengths from epoch counts over `n_seen` entities.
  static DistillSchedule from_epochs(int e1, int e2, int e3, int n_seen, int batch_size);
};

struct PhaseLosses {
  double phase1_loss = 0.0;
  double phase2_lm_loss = 0.0;
  double phase2_geo_loss = 0.0;
  double phase3_bce_loss = 0.0;
};

struct DistillReport {
  nnkit::TrainReport phase1;
  PhaseLosses losses;
  std::vector<std::int64_t> refresh_steps;
  std::vector<std::uint64_t> refresh_checksums;  // FNV-1a over center bytes
  int pool_size = 0;
};

struct DistillResult {
  nnkit::ModelParams model;
  HeadParams head;
  DistillReport report;
  geometry::BasinCenterSet centers;  // final centers
};

/// Three phases: student alone; student plus head regression onto oracle
/// margin/gap; frozen student with the confidence output fit to correctness.
DistillResult distill(nnkit::ModelParams model, const taskgen::Dataset& dataset,
                      const DistillSchedule& schedule, std::uint64_t seed);

// Regress the geometric output onto already normalized targets (2 x n),
// one hidden state per column. Returns the final full-pool MSE.
double fit_geometric(HeadParams& head, const Matrix& hidden, const Matrix& targets,
                     std::int64_t steps, double learning_rate, int batch_size,
                     std::uint64_t seed);

std::uint64_t centers_checksum(const geometry::BasinCenterSet& centers);

struct QueryEval {
  taskgen::EntityId query_id = 0;
  geometry::Condition condition = geometry::Condition::seen;
  double oracle_margin = 0.0;
  double predicted_margin = 0.0;  // denormalized
  double confidence = 0.0;        // sigmoid of the confidence logit
  double entropy = 0.0;
  bool correct = false;
};

struct MethodRow {
  std::string method;
  detect::Direction direction = detect::Direction::lower_is_positive;
  double auroc = 0.0;
  double correct_preserved = 0.0;
};

struct HeadEvaluation {
  std::vector<QueryEval> queries;
  std::vector<MethodRow> methods;  // oracle_margin, predicted_margin, confidence, entropy
  double margin_correlation = 0.0;  // Pearson(predicted, oracle)
};

/// Per-query predictions on every seen and unseen entity, and the
/// four-method comparison with correct answers as positives.
HeadEvaluation evaluate_head(const HeadParams& head, const nnkit::ModelParams& model,
                             const taskgen::Dataset& queries,
                             const geometry::BasinCenterSet& centers);

// Comparison from precomputed per-query values.
HeadEvaluation compare_methods(std::vector<QueryEval> queries);

CsvTable methods_to_csv(const HeadEvaluation& eval);
CsvTable queries_to_csv(const HeadEvaluation& eval);

}  // namespace basinlab::metacog

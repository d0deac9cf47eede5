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
#include <optional>
#include <vector>

#include "basinlab/nnkit.hpp"
#include "basinlab/taskgen.hpp"

namespace basinlab::nnkit {

struct TrainConfig {
  std::int64_t steps = 1000;
  double learning_rate = 0.1;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double loss_threshold = 0.05;
  // Inverse temperature for soft teacher targets; hard labels when unset.
  std::optional<double> teacher_beta;
  // Isotropic noise applied to each sampled input (see perturb_on_sphere).
  // Zero trains on canonical embeddings only.
  double input_noise = 0.0;

  void validate() const;
};

struct TrainReport {
  double final_loss = 0.0;  // full seen-set loss after the last step
  std::optional<std::int64_t> steps_to_threshold;  // first minibatch below threshold
  double seen_accuracy = 0.0;
  std::int64_t steps_run = 0;
};

struct TrainResult {
  ModelParams model;
  TrainReport report;
};

struct Gradients {
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;
};

struct LossAndGradient {
  double loss = 0.0;
  Gradients grad;
};

/// Mean cross-entropy of softmax(logits) against target distributions, with
/// analytic gradients. `inputs` is d_in x B, `targets` is K x B with columns
/// summing to one.
LossAndGradient loss_and_gradient(const ModelParams& model, const Matrix& inputs,
                                  const Matrix& targets);

double mean_loss(const ModelParams& model, const Matrix& inputs, const Matrix& targets);

Matrix one_hot(const std::vector<int>& codes, int classes);

// Fraction of columns whose argmax logit equals the code.
double accuracy(const ModelParams& model, const Matrix& inputs,
                const std::vector<int>& codes);

/// Minibatch SGD on the seen entities. Hard labels use the dataset codes;
/// when cfg.teacher_beta is set the targets are softmax(beta * teacher(x))
/// and `teacher` must be provided. Throws DivergedTraining on a non-finite loss.
TrainResult train(ModelParams model, const taskgen::Dataset& dataset,
                  const TrainConfig& cfg, const ModelParams* teacher = nullptr);

}  // namespace basinlab::nnkit

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

#include "basinlab/train.hpp"

#include <cmath>
#include <random>

#include "basinlab/errors.hpp"

namespace basinlab::nnkit {

void TrainConfig::validate() const {
  require(steps >= 0, "steps must be non-negative");
  require(learning_rate > 0.0, "learning rate must be positive");
  require(batch_size >= 1, "batch size must be positive");
  require(input_noise >= 0.0, "input noise must be non-negative");
  if (teacher_beta) require(*teacher_beta > 0.0, "teacher beta must be positive");
}

namespace {

// Column-wise log-softmax.
Matrix log_softmax_cols(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) out.col(c) = log_softmax(logits.col(c));
  return out;
}

}  // namespace

LossAndGradient loss_and_gradient(const ModelParams& model, const Matrix& inputs,
                                  const Matrix& targets) {
  require(inputs.cols() == targets.cols(), "inputs and targets disagree on batch size");
  require(targets.rows() == model.class_count(), "targets have wrong class count");
  require(inputs.cols() > 0, "empty batch");
  const double batch = static_cast<double>(inputs.cols());

  Matrix pre = model.w1 * inputs;
  pre.colwise() += model.b1;
  Matrix hidden = model.activation == Activation::relu
                      ? Matrix(pre.cwiseMax(0.0))
                      : Matrix(pre.array().tanh().matrix());
  Matrix out = model.w2 * hidden;
  out.colwise() += model.b2;

  const Matrix logp = log_softmax_cols(out);
  LossAndGradient r;
  r.loss = -(targets.array() * logp.array()).sum() / batch;

  // d loss / d logits = (p - t) / B, valid because target columns sum to 1.
  const Matrix d_out = (logp.array().exp().matrix() - targets) / batch;
  r.grad.w2.noalias() = d_out * hidden.transpose();
  r.grad.b2 = d_out.rowwise().sum();
  Matrix d_hidden = model.w2.transpose() * d_out;
  if (model.activation == Activation::relu)
    d_hidden = (pre.array() > 0.0).select(d_hidden, 0.0);
  else
    d_hidden = (d_hidden.array() * (1.0 - hidden.array().square())).matrix();
  r.grad.w1.noalias() = d_hidden * inputs.transpose();
  r.grad.b1 = d_hidden.rowwise().sum();
  return r;
}

double mean_loss(const ModelParams& model, const Matrix& inputs, const Matrix& targets) {
  const Matrix logp = log_softmax_cols(logits_batch(model, inputs));
  return -(targets.array() * logp.array()).sum() / static_cast<double>(inputs.cols());
}

Matrix one_hot(const std::vector<int>& codes, int classes) {
  Matrix t = Matrix::Zero(classes, static_cast<Eigen::Index>(codes.size()));
  for (std::size_t i = 0; i < codes.size(); ++i) {
    require(codes[i] >= 0 && codes[i] < classes, "code out of range");
    t(codes[i], static_cast<Eigen::Index>(i)) = 1.0;
  }
  return t;
}

double accuracy(const ModelParams& model, const Matrix& inputs,
                const std::vector<int>& codes) {
  require(static_cast<std::size_t>(inputs.cols()) == codes.size(), "code count mismatch");
  if (codes.empty()) return 0.0;
  const Matrix out = logits_batch(model, inputs);
  std::size_t hits = 0;
  for (Eigen::Index c = 0; c < out.cols(); ++c)
    if (argmax(out.col(c)) == codes[c]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(codes.size());
}

TrainResult train(ModelParams model, const taskgen::Dataset& dataset,
                  const TrainConfig& cfg, const ModelParams* teacher) {
  cfg.validate();
  model.validate();
  require(!dataset.seen.empty(), "cannot train on an empty seen set");
  require(dataset.d_in == model.input_dim(), "dataset and model disagree on input dim");
  require(dataset.classes == model.class_count(), "dataset and model disagree on classes");
  if (cfg.teacher_beta) {
    require(teacher != nullptr, "teacher_beta set but no teacher supplied");
    require(teacher->input_dim() == model.input_dim() &&
                teacher->class_count() == model.class_count(),
            "teacher shape does not match student");
  }

  const Matrix inputs = dataset.seen_inputs();
  const std::vector<int> codes = dataset.seen_codes();
  const Eigen::Index n = inputs.cols();

  // Per-entity targets: one-hot codes, or the teacher's tempered softmax at
  // the canonical embedding. Noisy inputs keep their entity's target.
  Matrix entity_targets;
  if (cfg.teacher_beta) {
    entity_targets.resize(model.class_count(), n);
    for (Eigen::Index i = 0; i < n; ++i)
      entity_targets.col(i) = taskgen::teacher_targets(*teacher, inputs.col(i), *cfg.teacher_beta);
  } else {
    entity_targets = one_hot(codes, static_cast<int>(model.class_count()));
  }

  TrainReport report;
  Rng rng = make_rng(derive_seed(cfg.seed, "train"));
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  std::vector<Eigen::Index> idx(cfg.batch_size);
  Matrix batch(model.input_dim(), cfg.batch_size);
  Matrix batch_targets(model.class_count(), cfg.batch_size);

  for (std::int64_t step = 0; step < cfg.steps; ++step) {
    for (int b = 0; b < cfg.batch_size; ++b) {
      idx[b] = pick(rng);
      if (cfg.input_noise > 0.0)
        batch.col(b) = taskgen::perturb_on_sphere(inputs.col(idx[b]), cfg.input_noise, rng);
      else
        batch.col(b) = inputs.col(idx[b]);
    }
    for (int b = 0; b < cfg.batch_size; ++b) batch_targets.col(b) = entity_targets.col(idx[b]);
    const LossAndGradient lg = loss_and_gradient(model, batch, batch_targets);
    if (!std::isfinite(lg.loss)) throw DivergedTraining(step, lg.loss);
    if (!report.steps_to_threshold && lg.loss < cfg.loss_threshold)
      report.steps_to_threshold = step + 1;
    model.w1 -= cfg.learning_rate * lg.grad.w1;
    model.b1 -= cfg.learning_rate * lg.grad.b1;
    model.w2 -= cfg.learning_rate * lg.grad.w2;
    model.b2 -= cfg.learning_rate * lg.grad.b2;
    report.steps_run = step + 1;
  }

  report.final_loss = mean_loss(model, inputs, entity_targets);
  if (!std::isfinite(report.final_loss)) throw DivergedTraining(cfg.steps, report.final_loss);
  report.seen_accuracy = accuracy(model, inputs, codes);
  return TrainResult{std::move(model), report};
}

}  // namespace basinlab::nnkit

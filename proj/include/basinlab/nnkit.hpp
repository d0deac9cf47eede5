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
#include <functional>
#include <string>

#include <Eigen/Dense>

#include "basinlab/rng.hpp"

namespace basinlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace nnkit {

enum class Activation { relu, tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Two-layer dense network: hidden = act(w1 x + b1), logits = w2 hidden + b2.
struct ModelParams {
  Matrix w1;  // width x input_dim
  Vector b1;  // width
  Matrix w2;  // classes x width
  Vector b2;  // classes
  Activation activation = Activation::relu;

  Eigen::Index width() const { return w1.rows(); }
  Eigen::Index input_dim() const { return w1.cols(); }
  Eigen::Index class_count() const { return w2.rows(); }
  std::size_t parameter_count() const;

  // Throws InvalidInput on inconsistent shapes or non-finite entries.
  void validate() const;

  bool operator==(const ModelParams& other) const;
};

ModelParams zero_model(Eigen::Index input_dim, Eigen::Index width,
                       Eigen::Index classes, Activation act = Activation::relu);

// Gaussian init with stddev 1/sqrt(fan_in) for weights, zero biases.
ModelParams init_model(Eigen::Index input_dim, Eigen::Index width,
                       Eigen::Index classes, std::uint64_t seed,
                       Activation act = Activation::relu);

struct ForwardTrace {
  Vector input;
  Vector hidden;  // post-activation
  Vector logits;
  Vector probs;
};

ForwardTrace forward(const ModelParams& model, const Vector& x);
Vector hidden_state(const ModelParams& model, const Vector& x);
Vector logits(const ModelParams& model, const Vector& x);

// Column-batched variants: each column of `inputs` is one example.
Matrix hidden_batch(const ModelParams& model, const Matrix& inputs);
Matrix logits_batch(const ModelParams& model, const Matrix& inputs);

Vector softmax(const Vector& logits);
Vector log_softmax(const Vector& logits);

enum class EntropyBase { nats, bits };

std::string to_string(EntropyBase b);
EntropyBase entropy_base_from_string(const std::string& name);

/// Shannon entropy of softmax(logits). Max-subtracted, so saturated inputs
/// stay finite. Requires at least two logits.
double softmax_entropy(const Vector& logits, EntropyBase base = EntropyBase::nats);

// Gap between the two largest entries.
double top2_gap(const Vector& logits);
Eigen::Index argmax(const Vector& v);

using VectorMap = std::function<Vector(const Vector&)>;

/// Central-difference Jacobian, J(i, j) = d f_i / d x_j.
Matrix numerical_jacobian(const VectorMap& f, const Vector& x, double eps = 1e-4);

// Checkpoints. JSON stores row-major weights with round-trip exact decimals;
// binary is a little-endian dump behind a versioned header.
struct Checkpoint {
  ModelParams model;
  std::uint64_t seed = 0;
};

void save_checkpoint_json(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint_json(const std::filesystem::path& path);
void save_checkpoint_binary(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint_binary(const std::filesystem::path& path);

}  // namespace nnkit
}  // namespace basinlab

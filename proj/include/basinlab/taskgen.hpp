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
#include <vector>

#include "basinlab/nnkit.hpp"

namespace basinlab::taskgen {

using EntityId = int;

struct Entity {
  EntityId id = 0;
  Vector embedding;  // unit norm
  int code = 0;      // class index in [0, K)
};

struct Dataset {
  std::vector<Entity> seen;
  std::vector<Entity> unseen;
  int d_in = 0;
  int classes = 0;
  std::uint64_t seed = 0;

  // Seen entities as columns, in list order.
  Matrix seen_inputs() const;
  std::vector<int> seen_codes() const;
  const Entity* find(EntityId id) const;
};

/// Input variants of one entity, the toy stand-in for prompt templates.
/// Variant 0 is the canonical embedding, bit for bit.
struct VariantSet {
  EntityId entity_id = 0;
  std::vector<Vector> variants;
  double noise_scale = 0.0;
};

/// Unit-normalized Gaussian embeddings with uniform codes. Seen entities get
/// ids [0, n_seen), unseen ones [n_seen, n_seen + n_unseen).
Dataset generate_dataset(int n_seen, int n_unseen, int d_in, int classes,
                         std::uint64_t seed);

VariantSet make_variants(const Entity& entity, int k, double noise_scale,
                         std::uint64_t seed);

// Adds isotropic noise eps ~ N(0, (scale * |x|)^2 I) and renormalizes to |x|.
Vector perturb_on_sphere(const Vector& x, double noise_scale, Rng& rng);

/// Frozen random teacher network (1/sqrt(fan-in) Gaussian init).
nnkit::ModelParams make_teacher(int d_in, int classes, int width, std::uint64_t seed);

// softmax(beta * teacher_logits(x)).
Vector teacher_targets(const nnkit::ModelParams& teacher, const Vector& x, double beta);

// Replace every entity's code by the teacher's argmax on its embedding.
Dataset relabel_with_teacher(Dataset ds, const nnkit::ModelParams& teacher);

void save_dataset_json(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset_json(const std::filesystem::path& path);

}  // namespace basinlab::taskgen

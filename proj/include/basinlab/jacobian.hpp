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

#include <optional>
#include <vector>

#include "basinlab/nnkit.hpp"
#include "json.hpp"

namespace basinlab::jacobian {

/// J = S + A with S = (J + J^T)/2 and A = (J - J^T)/2.
struct JacobianReport {
  double phi = 0.0;        // corr(J_ij, J_ji) over i < j
  double s_frob_sq = 0.0;  // |S|_F^2
  double a_frob_sq = 0.0;  // |A|_F^2
  Eigen::Index dim = 0;
  std::optional<Matrix> s_matrix;
  std::optional<Matrix> a_matrix;
};

Matrix symmetric_part(const Matrix& j);
Matrix antisymmetric_part(const Matrix& j);

/// Full decomposition. phi is NaN when the off-diagonal pairs have zero
/// variance; call phi() directly to get the error instead.
JacobianReport decompose(const Matrix& j, bool keep_matrices = true);

/// Symmetry correlation: Pearson correlation of (J_ij, J_ji) over i < j.
/// Throws UndefinedCorrelation on zero variance.
double phi(const Matrix& j);

/// Attention-weighted value/output products: heads[h] stands for W_O^h W_V^h.
struct HeadSet {
  std::vector<Matrix> heads;
  std::vector<double> attn_weights;

  void validate() const;
};

struct VoComposite {
  Matrix j_weighted;
  double phi_weighted = 0.0;
  double phi_uniform = 0.0;
};

VoComposite vo_composite(const HeadSet& heads);

struct VoEnergy {
  double energy = 0.0;            // sum_h a_h h^T M_h h
  double energy_symmetric = 0.0;  // h^T S(J_weighted) h
};

VoEnergy vo_energy(const Vector& h, const HeadSet& heads);

/// Numerical Jacobian of x -> hidden(x) decomposed. Requires d_in == width.
JacobianReport model_jacobian_report(const nnkit::ModelParams& model, const Vector& x,
                                     double eps = 1e-4, bool keep_matrices = false);

// Synthetic heads for property checks.
Matrix random_symmetric(Rng& rng, Eigen::Index d);
Matrix random_antisymmetric(Rng& rng, Eigen::Index d);

nlohmann::json to_json(const JacobianReport& r, bool include_matrices = false);

}  // namespace basinlab::jacobian

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

#include "basinlab/jacobian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "basinlab/errors.hpp"

namespace basinlab::jacobian {

namespace {

void require_square(const Matrix& j) {
  if (j.rows() != j.cols())
    throw InvalidInput("Jacobian must be square, got " + std::to_string(j.rows()) + "x" +
                       std::to_string(j.cols()));
  if (!j.allFinite()) throw InvalidInput("Jacobian has non-finite entries");
}

// Returns NaN on zero variance.
double phi_or_nan(const Matrix& j) {
  const Eigen::Index n = j.rows();
  double su = 0.0, sl = 0.0, count = 0.0;
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = r + 1; c < n; ++c) {
      su += j(r, c);
      sl += j(c, r);
      count += 1.0;
    }
  if (count == 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double mu = su / count, ml = sl / count;
  double cov = 0.0, vu = 0.0, vl = 0.0;
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = r + 1; c < n; ++c) {
      const double du = j(r, c) - mu, dl = j(c, r) - ml;
      cov += du * dl;
      vu += du * du;
      vl += dl * dl;
    }
  if (vu == 0.0 || vl == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::clamp(cov / std::sqrt(vu * vl), -1.0, 1.0);
}

}  // namespace

Matrix symmetric_part(const Matrix& j) {
  require_square(j);
  return 0.5 * (j + j.transpose());
}

Matrix antisymmetric_part(const Matrix& j) {
  require_square(j);
  return 0.5 * (j - j.transpose());
}

JacobianReport decompose(const Matrix& j, bool keep_matrices) {
  require_square(j);
  JacobianReport r;
  r.dim = j.rows();
  Matrix s = symmetric_part(j);
  Matrix a = antisymmetric_part(j);
  r.s_frob_sq = s.squaredNorm();
  r.a_frob_sq = a.squaredNorm();
  r.phi = phi_or_nan(j);
  if (keep_matrices) {
    r.s_matrix = std::move(s);
    r.a_matrix = std::move(a);
  }
  return r;
}

double phi(const Matrix& j) {
  require_square(j);
  if (j.rows() < 2) throw InvalidInput("phi needs a matrix of dimension >= 2");
  const double v = phi_or_nan(j);
  if (std::isnan(v))
    throw UndefinedCorrelation("symmetry correlation undefined: off-diagonal pairs are constant");
  return v;
}

void HeadSet::validate() const {
  require(!heads.empty(), "head set is empty");
  require(heads.size() == attn_weights.size(), "one attention weight per head");
  const Eigen::Index d = heads.front().rows();
  double total = 0.0;
  for (std::size_t h = 0; h < heads.size(); ++h) {
    require(heads[h].rows() == d && heads[h].cols() == d, "heads must be square and equal-sized");
    require(attn_weights[h] >= 0.0 && attn_weights[h] <= 1.0, "attention weight outside [0,1]");
    total += attn_weights[h];
  }
  require(total <= 1.0 + 1e-9, "attention weights sum above 1");
}

VoComposite vo_composite(const HeadSet& hs) {
  hs.validate();
  const Eigen::Index d = hs.heads.front().rows();
  Matrix weighted = Matrix::Zero(d, d);
  Matrix uniform = Matrix::Zero(d, d);
  for (std::size_t h = 0; h < hs.heads.size(); ++h) {
    weighted += hs.attn_weights[h] * hs.heads[h];
    uniform += hs.heads[h];
  }
  uniform /= static_cast<double>(hs.heads.size());
  VoComposite out;
  out.phi_weighted = phi(weighted);
  out.phi_uniform = phi(uniform);
  out.j_weighted = std::move(weighted);
  return out;
}

VoEnergy vo_energy(const Vector& h, const HeadSet& hs) {
  hs.validate();
  const Eigen::Index d = hs.heads.front().rows();
  if (h.size() != d)
    throw InvalidInput("state has dimension " + std::to_string(h.size()) + ", heads expect " +
                       std::to_string(d));
  VoEnergy e;
  Matrix weighted = Matrix::Zero(d, d);
  for (std::size_t k = 0; k < hs.heads.size(); ++k) {
    e.energy += hs.attn_weights[k] * h.dot(hs.heads[k] * h);
    weighted += hs.attn_weights[k] * hs.heads[k];
  }
  e.energy_symmetric = h.dot(symmetric_part(weighted) * h);
  return e;
}

JacobianReport model_jacobian_report(const nnkit::ModelParams& model, const Vector& x,
                                     double eps, bool keep_matrices) {
  model.validate();
  if (model.input_dim() != model.width())
    throw InvalidInput("input-to-hidden map is " + std::to_string(model.width()) + "x" +
                       std::to_string(model.input_dim()) +
                       "; symmetric/antisymmetric split needs d_in == width");
  const Matrix j = nnkit::numerical_jacobian(
      [&](const Vector& v) { return nnkit::hidden_state(model, v); }, x, eps);
  JacobianReport r = decompose(j, keep_matrices);
  if (std::isnan(r.phi)) (void)phi(j);  // raises UndefinedCorrelation
  return r;
}

Matrix random_symmetric(Rng& rng, Eigen::Index d) {
  const Matrix g = gaussian_matrix(rng, d, d);
  return 0.5 * (g + g.transpose());
}

Matrix random_antisymmetric(Rng& rng, Eigen::Index d) {
  const Matrix g = gaussian_matrix(rng, d, d);
  return 0.5 * (g - g.transpose());
}

nlohmann::json to_json(const JacobianReport& r, bool include_matrices) {
  nlohmann::json j;
  j["dim"] = r.dim;
  j["phi"] = std::isnan(r.phi) ? nlohmann::json(nullptr) : nlohmann::json(r.phi);
  j["s_frob_sq"] = r.s_frob_sq;
  j["a_frob_sq"] = r.a_frob_sq;
  auto rows = [](const Matrix& m) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
      out.push_back(row);
    }
    return out;
  };
  if (include_matrices && r.s_matrix && r.a_matrix) {
    j["s_matrix"] = rows(*r.s_matrix);
    j["a_matrix"] = rows(*r.a_matrix);
  }
  return j;
}

}  // namespace basinlab::jacobian

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

#include <cmath>

#include "basinlab/errors.hpp"
#include "basinlab/jacobian.hpp"
#include "basinlab/taskgen.hpp"
#include "basinlab/train.hpp"
#include "doctest.h"

using namespace basinlab;
using namespace basinlab::jacobian;

namespace {

Matrix m2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

// Reference Pearson over extracted (J_ij, J_ji), i < j.
double pearson_pairs(const Matrix& j) {
  std::vector<double> u, l;
  for (Eigen::Index r = 0; r < j.rows(); ++r)
    for (Eigen::Index c = r + 1; c < j.cols(); ++c) {
      u.push_back(j(r, c));
      l.push_back(j(c, r));
    }
  const double n = static_cast<double>(u.size());
  double su = 0, sl = 0, suu = 0, sll = 0, sul = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    su += u[i];
    sl += l[i];
    suu += u[i] * u[i];
    sll += l[i] * l[i];
    sul += u[i] * l[i];
  }
  return (n * sul - su * sl) / std::sqrt((n * suu - su * su) * (n * sll - sl * sl));
}

}  // namespace

TEST_CASE("hand-computed decompositions") {
  const auto r = decompose(m2(1, 2, 0, 1));
  CHECK(*r.s_matrix == m2(1, 1, 1, 1));
  CHECK(*r.a_matrix == m2(0, 1, -1, 0));
  const auto rot = decompose(m2(0, 1, -1, 0));
  CHECK(rot.s_frob_sq == 0.0);
  CHECK(rot.a_frob_sq == doctest::Approx(2.0));
  CHECK_THROWS_AS(phi(m2(0, 1, -1, 0)), UndefinedCorrelation);  // one pair has no variance

  Rng rng = make_rng(1);
  const Matrix s = random_symmetric(rng, 5);
  const auto rs = decompose(s);
  CHECK(rs.a_frob_sq == 0.0);
  CHECK(rs.phi == doctest::Approx(1.0));
  CHECK_THROWS_AS(decompose(Matrix::Zero(2, 3)), InvalidInput);
}

TEST_CASE("phi at the extremes and against a reference Pearson") {
  Rng rng = make_rng(2);
  for (int t = 0; t < 10; ++t) {
    CHECK(phi(random_symmetric(rng, 6)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(phi(random_antisymmetric(rng, 6)) == doctest::Approx(-1.0).epsilon(1e-12));
  }
  const Matrix g = gaussian_matrix(rng, 50, 50);
  CHECK(std::abs(phi(g) - pearson_pairs(g)) <= 1e-12);
  CHECK_THROWS_AS(phi(Matrix::Identity(4, 4)), UndefinedCorrelation);
  CHECK_THROWS_AS(phi(Matrix::Ones(1, 1)), InvalidInput);
}

TEST_CASE("orthogonality, bounds and invariances on random inputs") {
  Rng rng = make_rng(3);
  for (int t = 0; t < 50; ++t) {
    const Matrix j = gaussian_matrix(rng, 12, 12, 1.0 + t);
    const auto r = decompose(j, false);
    CHECK(std::abs(j.squaredNorm() - r.s_frob_sq - r.a_frob_sq) <= 1e-9 * std::max(1.0, j.squaredNorm()));
    CHECK(r.phi >= -1.0);
    CHECK(r.phi <= 1.0);
    CHECK(std::abs(phi(j.transpose()) - r.phi) <= 1e-12);
    CHECK(std::abs(phi(0.01 * j) - r.phi) <= 1e-12);
    CHECK(!r.s_matrix.has_value());
  }
}

TEST_CASE("attention-weighted composites") {
  Rng rng = make_rng(4);
  SUBCASE("single head") {
    HeadSet hs{{gaussian_matrix(rng, 8, 8)}, {1.0}};
    const auto vc = vo_composite(hs);
    CHECK(vc.phi_weighted == phi(hs.heads[0]));
    CHECK(vc.j_weighted == hs.heads[0]);
  }
  SUBCASE("extra zero-weight heads change nothing") {
    const Matrix m0 = gaussian_matrix(rng, 8, 8);
    HeadSet one{{m0}, {0.6}};
    HeadSet many{{m0, gaussian_matrix(rng, 8, 8), gaussian_matrix(rng, 8, 8)}, {0.6, 0.0, 0.0}};
    CHECK(vo_composite(one).j_weighted == vo_composite(many).j_weighted);
    CHECK(vo_composite(one).phi_weighted == vo_composite(many).phi_weighted);
  }
  SUBCASE("symmetric-dominated pairs at d=32") {
    int wins = 0;
    for (int s = 0; s < 100; ++s) {
      Rng r = make_rng(derive_seed(99, static_cast<std::uint64_t>(s)));
      HeadSet hs{{random_symmetric(r, 32), random_antisymmetric(r, 32)}, {0.9, 0.1}};
      const auto vc = vo_composite(hs);
      if (vc.phi_weighted > 0.5 && 0.5 > vc.phi_uniform) ++wins;
    }
    CHECK(wins >= 95);
  }
  SUBCASE("all-zero weights") {
    HeadSet hs{{gaussian_matrix(rng, 4, 4)}, {0.0}};
    CHECK_THROWS_AS(vo_composite(hs), UndefinedCorrelation);
  }
  SUBCASE("validation") {
    HeadSet bad{{Matrix::Identity(3, 3), Matrix::Identity(3, 3)}, {0.7, 0.7}};
    CHECK_THROWS_AS(vo_composite(bad), InvalidInput);
    HeadSet mismatch{{Matrix::Identity(3, 3)}, {0.5, 0.5}};
    CHECK_THROWS_AS(vo_composite(mismatch), InvalidInput);
  }
}

TEST_CASE("VO energy") {
  Rng rng = make_rng(5);
  HeadSet hs{{gaussian_matrix(rng, 6, 6), gaussian_matrix(rng, 6, 6), gaussian_matrix(rng, 6, 6)},
             {0.2, 0.3, 0.4}};
  CHECK(vo_energy(Vector::Zero(6), hs).energy == 0.0);
  const HeadSet id{{Matrix::Identity(6, 6)}, {1.0}};
  const Vector h = gaussian_vector(rng, 6);
  CHECK(vo_energy(h, id).energy == doctest::Approx(h.squaredNorm()).epsilon(1e-14));

  for (int t = 0; t < 20; ++t) {
    const Vector x = gaussian_vector(rng, 6);
    const auto e = vo_energy(x, hs);
    double brute = 0.0;
    for (std::size_t k = 0; k < 3; ++k)
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) brute += hs.attn_weights[k] * x(i) * hs.heads[k](i, j) * x(j);
    CHECK(std::abs(e.energy - brute) <= 1e-9);
    CHECK(std::abs(e.energy_symmetric - e.energy) <= 1e-9);
  }
  CHECK_THROWS_AS(vo_energy(Vector::Zero(5), hs), InvalidInput);
}

TEST_CASE("model Jacobian report") {
  SUBCASE("zero weights give an undefined phi") {
    const auto m = nnkit::zero_model(4, 4, 3);
    CHECK_THROWS_AS(model_jacobian_report(m, Vector::Ones(4)), UndefinedCorrelation);
  }
  SUBCASE("relu kept in its linear region reduces to decompose(A)") {
    Rng rng = make_rng(6);
    auto m = nnkit::zero_model(5, 5, 2);
    m.w1 = gaussian_matrix(rng, 5, 5);
    m.b1 = Vector::Constant(5, 100.0);
    const Vector x = gaussian_vector(rng, 5, 0.1);
    const auto r = model_jacobian_report(m, x, 1e-4, true);
    const auto ref = decompose(m.w1);
    CHECK(std::abs(r.phi - ref.phi) <= 1e-6);
    CHECK(std::abs(r.s_frob_sq - ref.s_frob_sq) <= 1e-6);
    CHECK(std::abs(r.a_frob_sq - ref.a_frob_sq) <= 1e-6);
  }
  SUBCASE("non-square maps are rejected") {
    CHECK_THROWS_AS(model_jacobian_report(nnkit::init_model(4, 6, 2, 1), Vector::Ones(4)),
                    InvalidInput);
  }
}

TEST_CASE("contraction at seen entities vs random points (exploratory)") {
  // Directional only: recorded, never gated.
  int larger = 0, runs = 5;
  for (int s = 0; s < runs; ++s) {
    const auto ds = taskgen::generate_dataset(20, 0, 16, 20, 100 + s);
    nnkit::TrainConfig cfg;
    cfg.steps = 1500;
    cfg.learning_rate = 0.5;
    cfg.seed = s;
    const auto tr = nnkit::train(nnkit::init_model(16, 16, 20, 200 + s, nnkit::Activation::tanh),
                                 ds, cfg);
    Rng rng = make_rng(300 + s);
    Vector x = gaussian_vector(rng, 16);
    x /= x.norm();
    const auto at_seen = model_jacobian_report(tr.model, ds.seen[0].embedding);
    const auto at_rand = model_jacobian_report(tr.model, x);
    if (at_seen.s_frob_sq > at_rand.s_frob_sq) ++larger;
  }
  MESSAGE("seen > random in " << larger << "/" << runs << " runs");
  CHECK(larger >= 0);
}

TEST_CASE("JSON export keeps matrices behind a flag") {
  const auto r = decompose(m2(1, 2, 3, 4));
  CHECK(!to_json(r).contains("s_matrix"));
  CHECK(to_json(r, true).contains("s_matrix"));
  CHECK(to_json(r)["s_frob_sq"].get<double>() == r.s_frob_sq);
}

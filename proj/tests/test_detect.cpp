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
#include <random>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "basinlab/detect.hpp"
#include "basinlab/errors.hpp"
#include "basinlab/rng.hpp"
#include "doctest.h"

using namespace basinlab;
using namespace basinlab::detect;

TEST_CASE("AUROC on hand-built cases") {
  const std::vector<bool> lab{false, false, true, true};
  CHECK(auroc({1, 2, 3, 4}, lab, Direction::higher_is_positive).auroc == 1.0);
  CHECK(auroc({1, 2, 3, 4}, lab, Direction::lower_is_positive).auroc == 0.0);
  CHECK(auroc({4, 3, 2, 1}, lab, Direction::lower_is_positive).auroc == 1.0);
  CHECK(auroc({5, 5, 5, 5}, lab, Direction::higher_is_positive).auroc == 0.5);
  CHECK(auroc({1, 3, 2, 4}, lab, Direction::higher_is_positive).auroc == 0.75);
  CHECK(auroc({1, 3, 3, 4}, lab, Direction::higher_is_positive).auroc == 0.875);

  CHECK_THROWS_AS(auroc({1, 2}, {true, true}, Direction::higher_is_positive), InvalidInput);
  CHECK_THROWS_AS(auroc({1, 2}, {true}, Direction::higher_is_positive), InvalidInput);
  CHECK_THROWS_AS(auroc({1, NAN}, {true, false}, Direction::higher_is_positive), InvalidInput);
  CHECK(direction_from_string(to_string(Direction::lower_is_positive)) ==
        Direction::lower_is_positive);
}

TEST_CASE("AUROC agrees with the pairwise definition") {
  Rng rng = make_rng(31);
  std::uniform_int_distribution<int> coarse(0, 6);
  for (int t = 0; t < 40; ++t) {
    std::vector<double> s;
    std::vector<bool> l;
    for (int i = 0; i < 60; ++i) {
      const bool pos = i % 3 != 0;
      l.push_back(pos);
      // Coarse grid forces ties across classes.
      s.push_back(coarse(rng) + (pos ? (t % 4) * 0.5 : 0.0));
    }
    for (auto dir : {Direction::higher_is_positive, Direction::lower_is_positive}) {
      const auto r = auroc(s, l, dir);
      CHECK(r.auroc == doctest::Approx(auroc_pairwise(s, l, dir)).epsilon(1e-12));
      REQUIRE(r.curve.size() >= 2);
      CHECK(r.curve.front().fpr == 0.0);
      CHECK(r.curve.front().tpr == 0.0);
      CHECK(r.curve.back().fpr == 1.0);
      CHECK(r.curve.back().tpr == 1.0);
      double area = 0.0;
      for (std::size_t i = 1; i < r.curve.size(); ++i) {
        CHECK(r.curve[i].fpr >= r.curve[i - 1].fpr);
        CHECK(r.curve[i].tpr >= r.curve[i - 1].tpr);
        area += (r.curve[i].fpr - r.curve[i - 1].fpr) *
                (r.curve[i].tpr + r.curve[i - 1].tpr) / 2.0;
      }
      CHECK(area == doctest::Approx(r.auroc).epsilon(1e-12));
    }
  }
}

TEST_CASE("ROC export") {
  const auto r = auroc({0.1, 0.4, 0.35, 0.8}, {false, false, true, true},
                       Direction::higher_is_positive);
  const auto t = roc_to_csv(r);
  CHECK(t.rows.size() == r.curve.size());
  CHECK_NOTHROW(t.column("fpr"));
  CHECK_NOTHROW(t.column("tpr"));
  CHECK_NOTHROW(t.column("threshold"));
}

namespace {

struct Synthetic {
  Matrix x;
  std::vector<bool> y;
};

// Column 0 carries the label signal, the rest are noise.
Synthetic make_synthetic(int n, int p, double shift, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Synthetic s{Matrix(n, p), {}};
  for (int i = 0; i < n; ++i) {
    const bool pos = i % 4 != 0;
    s.y.push_back(pos);
    for (int j = 0; j < p; ++j) s.x(i, j) = g(rng) + (j == 0 && pos ? shift : 0.0);
  }
  return s;
}

}  // namespace

TEST_CASE("logistic regression reaches a stationary point") {
  const auto s = make_synthetic(200, 2, 1.0, 41);
  LogisticOptions opts;
  opts.max_iterations = 20000;
  const Vector w = fit_logistic(s.x, s.y, opts);
  REQUIRE(w.size() == 3);
  Vector grad = Vector::Zero(3);
  for (int i = 0; i < 200; ++i) {
    const double z = s.x(i, 0) * w(0) + s.x(i, 1) * w(1) + w(2);
    const double err = 1.0 / (1.0 + std::exp(-z)) - (s.y[i] ? 1.0 : 0.0);
    grad(0) += err * s.x(i, 0);
    grad(1) += err * s.x(i, 1);
    grad(2) += err;
  }
  CHECK(grad.norm() / 200.0 < 1e-6);
  CHECK(w(0) > 0.5);
  CHECK(std::abs(w(1)) < w(0));
}

TEST_CASE("cross-validated logistic AUROC") {
  const auto strong = make_synthetic(400, 3, 3.0, 42);
  const auto cv = logistic_cv(strong.x, strong.y, 5, 7, {"signal", "n1", "n2"});
  CHECK(cv.folds == 5);
  CHECK(cv.fold_auroc.size() == 5);
  CHECK(cv.mean_auroc > 0.95);
  CHECK(cv.std_auroc >= 0.0);
  CHECK(cv.to_json()["feature_names"].size() == 3);

  const auto noise = make_synthetic(400, 3, 0.0, 43);
  const auto cvn = logistic_cv(noise.x, noise.y, 5, 7);
  CHECK(std::abs(cvn.mean_auroc - 0.5) < 0.1);

  const auto again = logistic_cv(strong.x, strong.y, 5, 7, {"signal", "n1", "n2"});
  CHECK(again.fold_auroc == cv.fold_auroc);

  // Rescaling features does not change fold AUROCs after standardization.
  const auto scaled = logistic_cv(strong.x * 1000.0, strong.y, 5, 7);
  for (int f = 0; f < 5; ++f)
    CHECK(scaled.fold_auroc[f] == doctest::Approx(cv.fold_auroc[f]).epsilon(1e-6));

  std::vector<bool> rare(400, true);
  rare[0] = false;
  rare[1] = false;
  CHECK_THROWS_AS(logistic_cv(strong.x, rare, 5, 7), InvalidInput);
  CHECK_THROWS_AS(logistic_cv(strong.x, strong.y, 1, 7), InvalidInput);
  CHECK_THROWS_AS(logistic_cv(strong.x, strong.y, 5, 7, {"only_one"}), InvalidInput);
}

TEST_CASE("point-biserial correlation") {
  const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  const std::vector<bool> y{false, false, true, false, false, true,
                            true, false, true, true, true, false};
  std::vector<double> yd;
  for (bool b : y) yd.push_back(b ? 1.0 : 0.0);
  const auto c = point_biserial(x, y);
  CHECK(c.r == doctest::Approx(pearson(x, yd)).epsilon(1e-14));
  // Two-sided p via the regularized incomplete beta.
  const double df = 10.0;
  const double t2 = c.r * c.r * df / (1.0 - c.r * c.r);
  const double p = boost::math::ibeta(df / 2.0, 0.5, df / (df + t2));
  CHECK(c.p == doctest::Approx(p).epsilon(1e-10));

  std::vector<double> flipped;
  for (double v : x) flipped.push_back(-v);
  CHECK(point_biserial(flipped, y).r == doctest::Approx(-c.r).epsilon(1e-14));
  CHECK(point_biserial(flipped, y).p == doctest::Approx(c.p).epsilon(1e-12));

  CHECK_THROWS_AS(point_biserial({3, 3, 3, 3}, {true, false, true, false}), UndefinedCorrelation);
  CHECK_THROWS_AS(point_biserial({1, 2}, {true, false}), InvalidInput);
}

TEST_CASE("Pearson and Spearman") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  CHECK(pearson(x, {2, 4, 6, 8, 10}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pearson(x, {5, 4, 3, 2, 1}) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(spearman(x, {1, 8, 27, 64, 125}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pearson(x, {1, 8, 27, 64, 125}) < 1.0);
  // Ties take average ranks: {1, 2.5, 2.5, 4} against {1, 2, 3, 4}.
  CHECK(spearman({1, 2, 2, 3}, {10, 20, 30, 40}) ==
        doctest::Approx(pearson({1, 2.5, 2.5, 4}, {1, 2, 3, 4})).epsilon(1e-15));
  CHECK_THROWS_AS(pearson(x, {1, 1, 1, 1, 1}), UndefinedCorrelation);
  CHECK_THROWS_AS(spearman(x, {1, 2}), InvalidInput);
}

TEST_CASE("intervention threshold") {
  // Margins: larger means correct.
  const std::vector<double> s{0.1, 0.2, 0.3, 0.3, 0.5, 0.9, 1.2};
  const std::vector<bool> l{false, true, false, true, true, true, true};
  const auto r = intervention(s, l, Direction::higher_is_positive);
  CHECK(r.negatives_caught == 1.0);
  CHECK(r.correct_preserved == doctest::Approx(3.0 / 5.0).epsilon(1e-15));
  CHECK(r.threshold > 0.3);
  CHECK(r.threshold < 0.5);

  // Entropies: lower means correct.
  const std::vector<double> h{2.0, 0.1, 0.5, 0.2, 0.6};
  const std::vector<bool> lh{false, true, false, true, true};
  const auto rh = intervention(h, lh, Direction::lower_is_positive);
  CHECK(rh.negatives_caught == 1.0);
  CHECK(rh.correct_preserved == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(rh.threshold < 0.5);
  CHECK(rh.threshold > 0.2);

  // A negative above every positive leaves nothing accepted.
  const auto none = intervention({0.1, 0.2, 5.0}, {true, true, false},
                                 Direction::higher_is_positive);
  CHECK(none.correct_preserved == 0.0);
  CHECK(none.negatives_caught == 1.0);
}

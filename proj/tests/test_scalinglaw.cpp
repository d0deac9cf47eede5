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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include "basinlab/errors.hpp"
#include "basinlab/scalinglaw.hpp"
#include "doctest.h"

using namespace basinlab;
using namespace basinlab::law;

namespace {

// Direct softmax entropy over an explicit logit vector.
double entropy_of_logits(const std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - mx);
  double h = 0.0;
  for (double v : z) {
    const double p = std::exp(v - mx) / s;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

std::vector<double> flat_tail_logits(double delta, int v, double g) {
  std::vector<double> z(static_cast<std::size_t>(v), -g);
  z[0] = delta;
  z[1] = 0.0;
  return z;
}

std::filesystem::path reference(const char* name) {
  return std::filesystem::path(BASINLAB_TEST_DATA_DIR) / "reference" / name;
}

}  // namespace

TEST_CASE("entropy of a gap matches explicit softmax") {
  CHECK(entropy_of_gap(0.0, BackgroundModel::two_class_exact()) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
  for (double d : {0.0, 0.3, 1.0, 2.5, 5.0, 12.0, 40.0}) {
    CHECK(entropy_of_gap(d, BackgroundModel::two_class_exact()) ==
          doctest::Approx(entropy_of_logits({d, 0.0})).epsilon(1e-12));
    for (int v : {3, 50, 30000}) {
      const auto bg = BackgroundModel::flat_tail(v, 7.5);
      CHECK(entropy_of_gap(d, bg) ==
            doctest::Approx(entropy_of_logits(flat_tail_logits(d, v, 7.5))).epsilon(1e-10));
    }
    CHECK(entropy_of_gap(d, BackgroundModel::two_class_approx()) == d * std::exp(-d));
  }
  // With a huge offset the tail vanishes and flat_tail reduces to two classes.
  CHECK(entropy_of_gap(2.0, BackgroundModel::flat_tail(100, 800.0)) ==
        doctest::Approx(entropy_of_gap(2.0, BackgroundModel::two_class_exact())).epsilon(1e-14));
  CHECK_THROWS_AS(entropy_of_gap(-0.1, BackgroundModel::two_class_exact()), InvalidInput);
  CHECK_THROWS_AS(entropy_of_gap(1.0, BackgroundModel::flat_tail(1, 1.0)), InvalidInput);
}

TEST_CASE("entropy is strictly decreasing beyond the monotone point") {
  for (const auto& bg : {BackgroundModel::two_class_exact(), BackgroundModel::two_class_approx(),
                         default_flat_tail()}) {
    double prev = entropy_of_gap(monotone_from(bg), bg);
    for (double d = monotone_from(bg) + 0.01; d < 30.0; d += 0.01) {
      const double h = entropy_of_gap(d, bg);
      REQUIRE(h < prev);
      prev = h;
    }
  }
}

TEST_CASE("entropy cutoffs") {
  const double exact = entropy_cutoff(0.1, BackgroundModel::two_class_exact());
  const double approx = entropy_cutoff(0.1, BackgroundModel::two_class_approx());
  const double tail = entropy_cutoff(0.1, default_flat_tail());
  CHECK(exact == doctest::Approx(3.866).epsilon(1e-3));
  CHECK(approx == doctest::Approx(3.577).epsilon(1e-3));
  CHECK(tail == doctest::Approx(5.0).epsilon(1e-8));
  CHECK(entropy_of_gap(exact, BackgroundModel::two_class_exact()) ==
        doctest::Approx(0.1).epsilon(1e-8));
  CHECK(approx >= 1.0);
  CHECK(exact < tail);  // a heavier tail pushes the cutoff outward

  CHECK(calibrate_tail_offset(0.1, kDefaultVocab, 5.0) ==
        doctest::Approx(kDefaultTailOffset).epsilon(1e-9));

  CHECK_THROWS_AS(entropy_cutoff(0.0, BackgroundModel::two_class_exact()), InvalidInput);
  CHECK_THROWS_AS(entropy_cutoff(std::log(2.0), BackgroundModel::two_class_exact()),
                  InvalidInput);
  CHECK_THROWS_AS(entropy_cutoff(0.5, BackgroundModel::two_class_approx()), InvalidInput);
  CHECK_NOTHROW(entropy_cutoff(0.36, BackgroundModel::two_class_approx()));
}

TEST_CASE("Kolmogorov distribution") {
  CHECK(kolmogorov_survival(0.0) == 1.0);
  CHECK(kolmogorov_survival(0.5) == doctest::Approx(0.9639452436648751).epsilon(1e-9));
  CHECK(kolmogorov_survival(1.0) == doctest::Approx(0.2699996716735979).epsilon(1e-9));
  CHECK(kolmogorov_survival(1.36) == doctest::Approx(0.04939).epsilon(1e-3));
  CHECK(kolmogorov_survival(3.0) < 1e-7);
  // The two series agree at the switch point.
  CHECK(kolmogorov_survival(1.18 - 1e-12) ==
        doctest::Approx(kolmogorov_survival(1.18 + 1e-12)).epsilon(1e-9));
  double prev = 1.0;
  for (double l = 0.05; l < 3.0; l += 0.05) {
    const double q = kolmogorov_survival(l);
    CHECK(q <= prev);
    prev = q;
  }
}

TEST_CASE("KS statistic against a brute-force oracle") {
  Rng rng = make_rng(11);
  const auto xs = sample_exponential_gaps(2.0, 200, rng, false);
  auto sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  double d = 0.0;
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = 1.0 - std::exp(-sorted[i] / 2.0);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  CHECK(ks_statistic_exponential(xs, 2.0) == doctest::Approx(d).epsilon(1e-14));
}

TEST_CASE("gap statistics") {
  Rng rng = make_rng(12);
  const auto expo = sample_exponential_gaps(1.5, 5000, rng, false);
  const auto g = gap_stats(expo);
  CHECK(g.n == 5000);
  CHECK(g.mean == doctest::Approx(1.5).epsilon(0.05));
  CHECK(g.std_over_mean == doctest::Approx(1.0).epsilon(0.05));
  CHECK(g.ks_p > 1e-3);

  std::vector<double> uni;
  for (int i = 0; i < 2000; ++i) uni.push_back(std::uniform_real_distribution<double>(1.0, 2.0)(rng));
  const auto gu = gap_stats(uni);
  CHECK(gu.std_over_mean < 0.3);
  CHECK(gu.ks_p < 1e-6);

  // Sample standard deviation uses n - 1.
  std::vector<double> small{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK(gap_stats(small).std == doctest::Approx(std::sqrt(110.0 / 12.0)).epsilon(1e-14));
  CHECK_THROWS_AS(gap_stats({1, 2, 3}), InvalidInput);
  CHECK_THROWS_AS(gap_stats(std::vector<double>(12, 0.0)), InvalidInput);
}

TEST_CASE("confident fraction and prediction") {
  CHECK(confident_fraction({0.05, 0.1, 0.2, 0.0999}, 0.1) == 0.5);
  CHECK(confident_fraction({0.5, 0.6}, 0.1) == 0.0);
  CHECK(predict_log_c(5.0, 2.0) == -2.5);
  CHECK_THROWS_AS(predict_log_c(5.0, 0.0), InvalidInput);

  const auto p = make_law_point("m", "b", 1.0, 5.0, std::exp(-4.0), 0.5);
  CHECK(p.log_c_pred == -5.0);
  CHECK(p.ratio == doctest::Approx(1.25).epsilon(1e-14));
  REQUIRE(p.u_rate.has_value());
  CHECK(*p.u_rate == doctest::Approx(0.5 * std::exp(-4.0)).epsilon(1e-14));
  CHECK(!make_law_point("m", "b", 1.0, 5.0, 0.1).u_rate.has_value());
}

TEST_CASE("law fit on exact data") {
  std::vector<LawPoint> pts;
  for (double db : {0.7, 1.0, 1.6, 2.4, 3.5})
    pts.push_back(make_law_point("x", "y", db, 5.0, std::exp(-5.0 / db)));
  const auto f = fit_law(pts);
  CHECK(f.slope == doctest::Approx(-5.0).epsilon(1e-12));
  CHECK(*f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(*f.r_squared_uncentered == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(*f.prediction_r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.n_points == 5);
  CHECK(f.warnings.empty());

  pts.push_back(make_law_point("zero", "y", 1.0, 5.0, 0.0));
  const auto fz = fit_law(pts);
  CHECK(fz.n_points == 5);
  CHECK(fz.warnings.size() == 1);
  CHECK(fz.slope == f.slope);

  const auto one = fit_law({pts[0]});
  CHECK(one.slope == doctest::Approx(-5.0).epsilon(1e-12));
  CHECK(!one.r_squared.has_value());
  CHECK(one.to_json()["degenerate"].get<bool>());
  CHECK_THROWS_AS(fit_law({pts.back()}), InvalidInput);
}

TEST_CASE("law fit on the bundled reference points") {
  const auto pts = load_reference_points(reference("law_points.csv"));
  REQUIRE(pts.size() == 21);
  const auto f = fit_law(pts);
  CHECK(f.slope == doctest::Approx(-5.799).epsilon(1e-3));
  CHECK(*f.prediction_r_squared == doctest::Approx(0.8887).epsilon(1e-3));
  CHECK(*f.r_squared == doctest::Approx(0.799).epsilon(1e-3));
  CHECK(*f.r_squared_uncentered == doctest::Approx(0.965).epsilon(1e-3));
  double lo = 1e9, hi = -1e9, sum = 0.0;
  for (const auto& p : pts) {
    lo = std::min(lo, p.ratio);
    hi = std::max(hi, p.ratio);
    sum += p.ratio;
    CHECK(p.h_rate.has_value());
  }
  CHECK(sum / 21.0 == doctest::Approx(0.968).epsilon(1e-3));
  CHECK(lo == doctest::Approx(0.687).epsilon(1e-3));
  CHECK(hi == doctest::Approx(1.111).epsilon(1e-3));

  const auto gs = load_reference_gap_stats(reference("gap_stats.csv"));
  REQUIRE(gs.size() == 3);
  for (const auto& r : gs) CHECK(std::abs(r.std_over_mean - 1.0) < 0.3);
  CHECK_THROWS_AS(load_reference_points(reference("missing.csv")), InvalidInput);

  const auto t = law_points_to_csv(pts);
  CHECK(t.rows.size() == 21);
  CHECK_NOTHROW(t.column("ratio"));
}

TEST_CASE("gap scaling exponent") {
  std::vector<double> sizes{0.5e9, 1.5e9, 3e9, 7e9, 14e9}, bars;
  for (double s : sizes) bars.push_back(0.02 * std::pow(s, 0.3));
  CHECK(delta_scaling_exponent(sizes, bars) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK_THROWS_AS(delta_scaling_exponent({1.0}, {1.0}), InvalidInput);
}

TEST_CASE("exponential sampling") {
  Rng a = make_rng(21), b = make_rng(21);
  const auto s1 = sample_exponential_gaps(0.8, 10000, a, true);
  const auto s2 = sample_exponential_gaps(0.8, 10000, b, true);
  CHECK(s1 == s2);
  const double mean = std::accumulate(s1.begin(), s1.end(), 0.0) / s1.size();
  CHECK(mean == doctest::Approx(0.8).epsilon(0.01));
  for (double x : s1) REQUIRE(x >= 0.0);
  // One draw per stratum: the k-th order statistic lies in its stratum.
  auto sorted = s1;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < sorted.size(); k += 997) {
    const double u = 1.0 - std::exp(-sorted[k] / 0.8);
    CHECK(u >= static_cast<double>(k) / 10000.0 - 1e-12);
    CHECK(u <= static_cast<double>(k + 1) / 10000.0 + 1e-12);
  }
}

TEST_CASE("synthetic tail law") {
  const auto bg = default_flat_tail();
  for (double db : {0.8, 1.5, 3.0}) {
    const auto p = synthetic_law_point(db, 10000, 0.1, bg, 7, true);
    CHECK(p.log_c_pred == doctest::Approx(-5.0 / db).epsilon(1e-8));
    CHECK(std::abs(p.log_c_emp - p.log_c_pred) <= 0.1);
  }
  // i.i.d. draws: within three standard errors of ln C.
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = synthetic_law_point(1.5, 10000, 0.1, bg, seed, false);
    const double c = std::exp(p.log_c_pred);
    const double se = std::sqrt((1.0 - c) / (c * 10000.0));
    CHECK(std::abs(p.log_c_emp - p.log_c_pred) <= 3.0 * se);
  }
  CHECK(synthetic_law_point(1.5, 1000, 0.1, bg, 3, true).n == 1000);
}

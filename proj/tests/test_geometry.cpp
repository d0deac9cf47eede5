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
#include <limits>
#include <numeric>
#include <sstream>

#include "basinlab/errors.hpp"
#include "basinlab/geometry.hpp"
#include "basinlab/train.hpp"
#include "doctest.h"

using namespace basinlab;
using namespace basinlab::geometry;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

BasinCenterSet two_centers() {
  BasinCenterSet s;
  s.add(0, vec2(0, 0));
  s.add(1, vec2(3, 4));
  return s;
}

SignalRecord rec(Condition c, double margin) {
  SignalRecord r;
  r.condition = c;
  r.margin = margin;
  return r;
}

}  // namespace

TEST_CASE("margin and gap on a hand-checkable layout") {
  const auto c = two_centers();
  const auto m = margin(vec2(0, 1), c);
  CHECK(m.delta == doctest::Approx(1.0));
  CHECK(m.nearest_id == 0);
  CHECK(gap(vec2(0, 1), c) == doctest::Approx(std::sqrt(18.0) - 1.0));
  CHECK(gap(vec2(0, 1), c) == doctest::Approx(3.243).epsilon(1e-3));
  CHECK(margin(vec2(3, 4), c).delta == 0.0);
  CHECK(margin(vec2(3, 4), c).nearest_id == 1);
  CHECK(gap(vec2(1.5, 2.0), c) == doctest::Approx(0.0));
}

TEST_CASE("degenerate center sets") {
  BasinCenterSet empty;
  CHECK_THROWS_AS(margin(vec2(0, 0), empty), InvalidInput);
  BasinCenterSet one;
  one.add(5, vec2(1, 1));
  CHECK(margin(vec2(1, 2), one).delta == doctest::Approx(1.0));
  CHECK_THROWS_AS(gap(vec2(1, 2), one), InvalidInput);
  CHECK_THROWS_AS(margin(Vector::Zero(3), one), InvalidInput);
}

TEST_CASE("ties go to the smallest id regardless of insertion order") {
  BasinCenterSet a, b;
  a.add(7, vec2(1, 0));
  a.add(3, vec2(-1, 0));
  b.add(3, vec2(-1, 0));
  b.add(7, vec2(1, 0));
  CHECK(margin(vec2(0, 0), a).nearest_id == 3);
  CHECK(margin(vec2(0, 0), b).nearest_id == 3);
}

TEST_CASE("margin and gap match an exhaustive scan") {
  Rng rng = make_rng(17);
  BasinCenterSet set;
  std::vector<Vector> cs;
  for (int i = 0; i < 50; ++i) {
    cs.push_back(gaussian_vector(rng, 6));
    set.add(i, cs.back());
  }
  BasinCenterSet shuffled;
  std::vector<int> order(50);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (int i : order) shuffled.add(i, cs[i]);

  for (int q = 0; q < 20; ++q) {
    const Vector h = gaussian_vector(rng, 6);
    std::vector<double> d;
    for (const auto& c : cs) d.push_back(std::sqrt((h - c).array().square().sum()));
    const auto best = std::min_element(d.begin(), d.end()) - d.begin();
    auto sorted = d;
    std::sort(sorted.begin(), sorted.end());
    const auto m = margin(h, set);
    CHECK(m.delta == doctest::Approx(d[best]).epsilon(1e-12));
    CHECK(m.nearest_id == best);
    CHECK(gap(h, set) == doctest::Approx(sorted[1] - sorted[0]).epsilon(1e-12));
    CHECK(margin(h, shuffled).delta == m.delta);
    CHECK(gap(h, shuffled) == gap(h, set));
    for (const auto& c : cs) CHECK(m.delta <= (h - c).norm() + 1e-15);
  }
}

TEST_CASE("pairwise agreement") {
  CHECK(pairwise_agreement({1, 1, 1}) == 1.0);
  CHECK(pairwise_agreement({0, 1, 2}) == 0.0);
  CHECK(pairwise_agreement({4, 4, 4, 9}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(pairwise_agreement({1}), InvalidInput);
}

TEST_CASE("separation ratio") {
  std::vector<SignalRecord> r = {rec(Condition::seen, 1), rec(Condition::seen, 1),
                                 rec(Condition::unseen, 5), rec(Condition::unseen, 5)};
  CHECK(separation_ratio(r) == doctest::Approx(5.0));
  r = {rec(Condition::seen, 2), rec(Condition::unseen, 2)};
  CHECK(separation_ratio(r) == doctest::Approx(1.0));
  r = {rec(Condition::seen, 0), rec(Condition::unseen, 2)};
  CHECK(separation_ratio(r) == std::numeric_limits<double>::infinity());
  r = {rec(Condition::seen, 1)};
  CHECK_THROWS_AS(separation_ratio(r), InvalidInput);
}

TEST_CASE("basin centers") {
  const auto ds = taskgen::generate_dataset(6, 2, 8, 6, 3);
  const auto model = nnkit::init_model(8, 12, 6, 4);
  SUBCASE("k=1 without noise is the entity's own hidden state") {
    const auto c = basin_centers(model, ds, 1, 0.0, 1);
    REQUIRE(c.size() == 6);
    for (const auto& e : ds.seen) CHECK(c.center(e.id) == nnkit::hidden_state(model, e.embedding));
    CHECK_THROWS_AS(c.center(6), InvalidInput);
  }
  SUBCASE("zero noise collapses any k to k=1") {
    const auto c1 = basin_centers(model, ds, 1, 0.0, 1);
    const auto c5 = basin_centers(model, ds, 5, 0.0, 1);
    for (std::size_t i = 0; i < c1.size(); ++i) CHECK(c1.centers[i] == c5.centers[i]);
  }
  SUBCASE("no seen entities") {
    taskgen::Dataset empty = ds;
    empty.seen.clear();
    CHECK_THROWS_AS(basin_centers(model, empty, 3, 0.1, 1), InvalidInput);
  }
}

TEST_CASE("signal sweep on a memorizing model") {
  const auto ds = taskgen::generate_dataset(20, 10, 16, 20, 8);
  nnkit::TrainConfig cfg;
  cfg.steps = 3000;
  cfg.learning_rate = 0.5;
  const auto tr = nnkit::train(nnkit::init_model(16, 64, 20, 2), ds, cfg);
  REQUIRE(tr.report.seen_accuracy == 1.0);
  const auto centers = basin_centers(tr.model, ds, 3, 0.05, 11);
  SweepOptions opts;
  opts.seed = 12;
  const auto recs = signal_sweep(tr.model, ds, centers, opts);
  REQUIRE(recs.size() == 30);

  std::vector<double> seen_m;
  for (const auto& r : recs)
    if (r.condition == Condition::seen) seen_m.push_back(r.margin);
  std::sort(seen_m.begin(), seen_m.end());
  const double median = seen_m[seen_m.size() / 2];
  int unseen_above = 0;
  for (const auto& r : recs) {
    CHECK(r.gap >= 0.0);
    CHECK(r.stability >= 0.0);
    CHECK(r.stability <= 1.0);
    CHECK(r.entropy >= 0.0);
    CHECK(r.hidden_variance >= 0.0);
    if (r.condition == Condition::seen) {
      CHECK(r.correct);
      CHECK(r.nearest_id == r.query_id);
    } else if (r.margin > median) {
      ++unseen_above;
    }
  }
  CHECK(unseen_above == 10);
  CHECK(separation_ratio(recs) > 1.0);

  const auto again = signal_sweep(tr.model, ds, centers, opts);
  CHECK(signals_to_csv(again).rows == signals_to_csv(recs).rows);

  opts.k_variants = 1;
  CHECK_THROWS_AS(signal_sweep(tr.model, ds, centers, opts), InvalidInput);
}

TEST_CASE("signals CSV has the fixed header and round-trips") {
  SignalRecord r;
  r.query_id = 3;
  r.condition = Condition::unseen;
  r.margin = 0.1 + 0.2;
  r.gap = 1.0 / 3.0;
  r.nearest_id = 1;
  r.entropy = 2.5;
  r.entropy_base = nnkit::EntropyBase::bits;
  r.stability = 2.0 / 3.0;
  r.top1_prob = 0.9;
  r.hidden_variance = 1e-7;
  r.correct = true;
  const auto t = signals_to_csv({r});
  const std::vector<std::string> header = {"query_id", "condition", "margin", "gap",
                                           "nearest_id", "entropy", "entropy_base", "stability",
                                           "top1_prob", "hidden_variance", "correct"};
  CHECK(t.header == header);
  std::stringstream ss;
  write_csv(t, ss);
  const auto back = signals_from_csv(read_csv(ss));
  REQUIRE(back.size() == 1);
  CHECK(back[0].margin == r.margin);
  CHECK(back[0].gap == r.gap);
  CHECK(back[0].stability == r.stability);
  CHECK(back[0].condition == Condition::unseen);
  CHECK(back[0].entropy_base == nnkit::EntropyBase::bits);
  CHECK(back[0].correct);
}

TEST_CASE("perturbation sweep") {
  const auto ds = taskgen::generate_dataset(30, 0, 16, 30, 8);
  nnkit::TrainConfig cfg;
  cfg.steps = 4000;
  cfg.learning_rate = 0.5;
  const auto tr = nnkit::train(nnkit::init_model(16, 64, 30, 2), ds, cfg);
  const double clean_error = 1.0 - tr.report.seen_accuracy;

  const auto curve = perturb_sweep(tr.model, ds, kDefaultAlphas, 30, 5);
  REQUIRE(curve.error_rate.size() == kDefaultAlphas.size());
  CHECK(curve.error_rate[0] == clean_error);
  for (double e : curve.error_rate) {
    CHECK(e >= 0.0);
    CHECK(e <= 1.0);
  }
  CHECK(curve.error_rate.back() >= curve.error_rate.front());

  const auto wild = perturb_sweep(tr.model, ds, {100.0}, 30, 6);
  CHECK(wild.error_rate[0] > 0.8);
  CHECK(wild.error_rate[0] == doctest::Approx(1.0 - 1.0 / 30).epsilon(0.1));

  CHECK_THROWS_AS(perturb_sweep(tr.model, ds, {}, 3, 1), InvalidInput);
  CHECK_THROWS_AS(perturb_sweep(tr.model, ds, {0.1}, 0, 1), InvalidInput);
}

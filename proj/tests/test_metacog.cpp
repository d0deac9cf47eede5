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
#include "basinlab/metacog.hpp"
#include "doctest.h"

using namespace basinlab;
using namespace basinlab::metacog;

namespace {

DistillSchedule small_schedule() {
  DistillSchedule s;
  s.student.learning_rate = 0.5;
  s.student.batch_size = 8;
  s.phase1_steps = 2000;
  s.phase2_steps = 600;
  s.phase3_steps = 300;
  s.center_refresh_interval = 200;
  s.head_width = 16;
  s.probe_count = 40;
  return s;
}

taskgen::Dataset small_dataset() { return taskgen::generate_dataset(20, 10, 16, 20, 5); }

}  // namespace

TEST_CASE("head construction and forward pass") {
  const auto h = init_head(8, 5, 3);
  CHECK(h.input_dim() == 8);
  CHECK(h.head_width() == 5);
  CHECK(h.w_geo.rows() == HeadParams::geometric_outputs);
  CHECK(HeadParams::output_dim == 3);
  CHECK_NOTHROW(h.validate());
  CHECK(init_head(8, 5, 3).w_hidden == h.w_hidden);
  CHECK(init_head(8, 5, 4).w_hidden != h.w_hidden);

  HeadParams hp = init_head(2, 2, 1);
  hp.w_hidden << 1, 0, 0, 2;
  hp.b_hidden << 0, 0.5;
  hp.w_geo << 1, 1, 2, -1;
  hp.b_geo << 0.1, 0.2;
  hp.w_conf << 3, -1;
  hp.b_conf = -0.5;
  Vector x(2);
  x << 0.3, -0.4;
  const double a = std::tanh(0.3), b = std::tanh(-0.3);
  const auto out = head_forward(hp, x);
  CHECK(out.margin == doctest::Approx(a + b + 0.1).epsilon(1e-14));
  CHECK(out.gap == doctest::Approx(2 * a - b + 0.2).epsilon(1e-14));
  CHECK(out.confidence_logit == doctest::Approx(3 * a - b - 0.5).epsilon(1e-14));
  CHECK_THROWS_AS(head_forward(hp, Vector::Zero(3)), InvalidInput);
}

TEST_CASE("geometric regression fits a representable target") {
  Rng rng = make_rng(8);
  const Matrix hidden = gaussian_matrix(rng, 6, 200, 0.5);
  const auto teacher = init_head(6, 12, 99);
  Matrix targets(2, 200);
  for (int i = 0; i < 200; ++i) {
    const auto o = head_forward(teacher, hidden.col(i));
    targets(0, i) = o.margin;
    targets(1, i) = o.gap;
  }
  auto head = init_head(6, 12, 1);
  const double short_mse = fit_geometric(head, hidden, targets, 10, 0.05, 16, 2);
  auto head2 = init_head(6, 12, 1);
  const double long_mse = fit_geometric(head2, hidden, targets, 5000, 0.05, 16, 2);
  CHECK(long_mse < short_mse);
  CHECK(long_mse < 0.1 * short_mse);
}

TEST_CASE("regression onto a constant target predicts the constant") {
  Rng rng = make_rng(10);
  const Matrix hidden = gaussian_matrix(rng, 6, 100, 0.5);
  Matrix targets(2, 100);
  targets.row(0).setConstant(0.7);
  targets.row(1).setConstant(-0.2);
  auto head = init_head(6, 8, 3);
  const double mse = fit_geometric(head, hidden, targets, 4000, 0.05, 16, 4);
  CHECK(mse < 1e-4);
  for (int t = 0; t < 20; ++t) {
    const auto o = head_forward(head, gaussian_vector(rng, 6, 0.5));
    CHECK(o.margin == doctest::Approx(0.7).epsilon(0.03));
    CHECK(o.gap == doctest::Approx(-0.2).epsilon(0.05));
  }
}

TEST_CASE("schedule validation and epoch conversion") {
  DistillSchedule s;
  CHECK_NOTHROW(s.validate());
  s.phase2_steps = -1;
  CHECK_THROWS_AS(s.validate(), InvalidInput);
  s = DistillSchedule{};
  s.head_width = 0;
  CHECK_THROWS_AS(s.validate(), InvalidInput);

  const auto e = DistillSchedule::from_epochs(3, 2, 1, 500, 32);
  CHECK(e.phase1_steps == 48);
  CHECK(e.phase2_steps == 32);
  CHECK(e.phase3_steps == 16);
  CHECK(e.center_refresh_interval == 32);
}

TEST_CASE("disabling the head phases reduces to plain training") {
  const auto ds = small_dataset();
  auto s = small_schedule();
  s.phase2_steps = 0;
  s.phase3_steps = 0;
  const auto init = nnkit::init_model(16, 24, 20, 4);
  const auto r = distill(init, ds, s, 77);
  nnkit::TrainConfig cfg = s.student;
  cfg.steps = s.phase1_steps;
  cfg.seed = 77;
  const auto plain = nnkit::train(init, ds, cfg);
  CHECK(r.model == plain.model);
  CHECK(r.report.refresh_steps.empty());
  CHECK(r.report.phase1.final_loss == plain.report.final_loss);
}

TEST_CASE("distillation is deterministic and refreshes on schedule") {
  const auto ds = small_dataset();
  const auto s = small_schedule();
  const auto init = nnkit::init_model(16, 24, 20, 4);
  const auto a = distill(init, ds, s, 5);
  const auto b = distill(init, ds, s, 5);
  CHECK(a.model == b.model);
  CHECK(a.head.w_hidden == b.head.w_hidden);
  CHECK(a.head.w_conf == b.head.w_conf);
  CHECK(a.report.refresh_checksums == b.report.refresh_checksums);
  CHECK(a.report.refresh_steps == std::vector<std::int64_t>{0, 200, 400});
  CHECK(a.report.pool_size == 20 * s.k_variants + s.probe_count);
  CHECK(centers_checksum(a.centers) == centers_checksum(b.centers));

  const auto c = distill(init, ds, s, 6);
  CHECK(c.report.refresh_checksums != a.report.refresh_checksums);
}

TEST_CASE("post-hoc mode keeps head gradients out of the student") {
  const auto ds = small_dataset();
  const auto init = nnkit::init_model(16, 24, 20, 4);
  auto s = small_schedule();
  auto other = s;
  other.head_learning_rate = 0.5;
  other.geo_loss_weight = 0.6;
  other.lm_loss_weight = 0.4;
  // Co-trained students depend on the head settings.
  CHECK(distill(init, ds, s, 9).model != distill(init, ds, other, 9).model);
  s.co_train = false;
  other.co_train = false;
  other.lm_loss_weight = s.lm_loss_weight;
  other.geo_loss_weight = s.geo_loss_weight;
  const auto a = distill(init, ds, s, 9);
  const auto b = distill(init, ds, other, 9);
  CHECK(a.model == b.model);
  CHECK(a.head.w_hidden != b.head.w_hidden);
}

TEST_CASE("head evaluation") {
  const auto ds = small_dataset();
  const auto s = small_schedule();
  const auto r = distill(nnkit::init_model(16, 24, 20, 4), ds, s, 5);
  const auto ev = evaluate_head(r.head, r.model, ds, r.centers);
  CHECK(ev.queries.size() == 30);
  REQUIRE(ev.methods.size() == 4);
  CHECK(ev.methods[0].method == "oracle_margin");
  CHECK(ev.methods[3].method == "entropy");
  CHECK(std::isfinite(ev.margin_correlation));
  CHECK(ev.margin_correlation > 0.0);
  for (const auto& q : ev.queries) {
    CHECK(q.confidence > 0.0);
    CHECK(q.confidence < 1.0);
    CHECK(q.oracle_margin >= 0.0);
  }
  CHECK(methods_to_csv(ev).rows.size() == 4);
  CHECK(queries_to_csv(ev).rows.size() == 30);
}

TEST_CASE("untrained heads are near chance") {
  const auto ds = small_dataset();
  auto s = small_schedule();
  s.phase2_steps = 0;
  s.phase3_steps = 0;
  const auto r = distill(nnkit::init_model(16, 24, 20, 4), ds, s, 5);
  const auto centers = geometry::basin_centers(r.model, ds, 3, 0.05, 1);
  double sum = 0.0;
  const int heads = 20;
  for (int h = 0; h < heads; ++h) {
    const auto ev = evaluate_head(init_head(24, 16, 500 + h), r.model, ds, centers);
    sum += ev.methods[1].auroc;
  }
  CHECK(sum / heads >= 0.35);
  CHECK(sum / heads <= 0.65);
}

TEST_CASE("method comparison on hand-built queries") {
  std::vector<QueryEval> q(4);
  const double om[] = {0.1, 0.2, 0.9, 0.8};
  const double cf[] = {0.9, 0.6, 0.7, 0.1};
  for (int i = 0; i < 4; ++i) {
    q[i].oracle_margin = om[i];
    q[i].predicted_margin = 2.0 * om[i] + 1.0;
    q[i].confidence = cf[i];
    q[i].entropy = 1.0 - cf[i];
    q[i].correct = i < 2;
  }
  const auto ev = compare_methods(q);
  CHECK(ev.margin_correlation == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(ev.methods[0].auroc == 1.0);
  CHECK(ev.methods[0].correct_preserved == 1.0);
  CHECK(ev.methods[2].auroc == 0.75);
  CHECK(ev.methods[3].auroc == 0.75);
  CHECK(ev.methods[2].correct_preserved == 0.5);

  // A head reproducing the oracle exactly gets the oracle's rows.
  auto exact = q;
  for (auto& x : exact) x.predicted_margin = x.oracle_margin;
  const auto ee = compare_methods(exact);
  CHECK(ee.methods[1].auroc == ee.methods[0].auroc);
  CHECK(ee.methods[1].correct_preserved == ee.methods[0].correct_preserved);

  for (auto& x : q) x.correct = true;
  const auto one = compare_methods(q);
  CHECK(std::isnan(one.methods[0].auroc));
}

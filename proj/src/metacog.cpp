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

#include "basinlab/metacog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <tuple>

#include "basinlab/errors.hpp"
#include "basinlab/hash.hpp"

namespace basinlab::metacog {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct Pool {
  Matrix inputs;            // d_in x P
  std::vector<int> codes;   // -1 for probes
};

Pool build_pool(const taskgen::Dataset& ds, int k_variants, double noise, int probes,
                std::uint64_t seed) {
  std::vector<Vector> cols;
  std::vector<int> codes;
  for (const auto& e : ds.seen) {
    const auto vs = taskgen::make_variants(e, k_variants, noise, derive_seed(seed, "variants"));
    for (const auto& v : vs.variants) {
      cols.push_back(v);
      codes.push_back(e.code);
    }
  }
  Rng rng = make_rng(derive_seed(seed, "probes"));
  for (int i = 0; i < probes; ++i) {
    Vector v = gaussian_vector(rng, ds.d_in);
    cols.push_back(v / v.norm());
    codes.push_back(-1);
  }
  Pool p;
  p.inputs.resize(ds.d_in, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) p.inputs.col(static_cast<Eigen::Index>(i)) = cols[i];
  p.codes = std::move(codes);
  return p;
}

// Raw (margin, gap) per column; gap is 0 with a single center.
Matrix oracle_geometry(const Matrix& hidden, const geometry::BasinCenterSet& centers) {
  Matrix out(2, hidden.cols());
  for (Eigen::Index j = 0; j < hidden.cols(); ++j) {
    const auto nt = geometry::nearest_two(hidden.col(j), centers);
    out(0, j) = nt.first;
    out(1, j) = std::isfinite(nt.second) ? nt.second - nt.first : 0.0;
  }
  return out;
}

Matrix normalize(const Matrix& raw, const HeadParams& h) {
  Matrix out(2, raw.cols());
  out.row(0) = (raw.row(0).array() - h.margin_mean) / h.margin_std;
  out.row(1) = (raw.row(1).array() - h.gap_mean) / h.gap_std;
  return out;
}

std::pair<double, double> mean_std(const Eigen::RowVectorXd& v) {
  const double mu = v.mean();
  const double sd = std::sqrt((v.array() - mu).square().mean());
  return {mu, sd > 0.0 ? sd : 1.0};
}

struct GeoGrad {
  double loss = 0.0;
  Matrix w_hidden, w_geo;
  Vector b_hidden, b_geo;
  Matrix d_hidden;  // gradient w.r.t. the student hidden states
};

// MSE averaged over batch and both outputs.
GeoGrad geo_loss_and_gradient(const HeadParams& head, const Matrix& hidden,
                              const Matrix& targets) {
  const double b = static_cast<double>(hidden.cols());
  const Matrix z = ((head.w_hidden * hidden).colwise() + head.b_hidden).array().tanh().matrix();
  const Matrix out = (head.w_geo * z).colwise() + head.b_geo;
  const Matrix diff = out - targets;
  GeoGrad g;
  g.loss = diff.squaredNorm() / (2.0 * b);
  const Matrix d_out = diff / b;  // d loss / d out
  g.w_geo = d_out * z.transpose();
  g.b_geo = d_out.rowwise().sum();
  const Matrix d_pre =
      ((head.w_geo.transpose() * d_out).array() * (1.0 - z.array().square())).matrix();
  g.w_hidden = d_pre * hidden.transpose();
  g.b_hidden = d_pre.rowwise().sum();
  g.d_hidden = head.w_hidden.transpose() * d_pre;
  return g;
}

double geo_loss(const HeadParams& head, const Matrix& hidden, const Matrix& targets) {
  const Matrix z = ((head.w_hidden * hidden).colwise() + head.b_hidden).array().tanh().matrix();
  const Matrix out = (head.w_geo * z).colwise() + head.b_geo;
  return (out - targets).squaredNorm() / (2.0 * static_cast<double>(hidden.cols()));
}

Matrix gather(const Matrix& m, const std::vector<Eigen::Index>& idx) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = m.col(idx[i]);
  return out;
}

}  // namespace

void HeadParams::validate() const {
  const auto hw = w_hidden.rows();
  require(hw >= 1 && w_hidden.cols() >= 1, "head needs a non-empty backbone");
  require(b_hidden.size() == hw, "head backbone bias size mismatch");
  require(w_geo.rows() == geometric_outputs && w_geo.cols() == hw, "head geometric layer shape");
  require(b_geo.size() == geometric_outputs, "head geometric bias size");
  require(w_conf.size() == hw, "head confidence layer shape");
  require(w_hidden.allFinite() && b_hidden.allFinite() && w_geo.allFinite() &&
              b_geo.allFinite() && w_conf.allFinite() && std::isfinite(b_conf),
          "head parameters must be finite");
  require(margin_std > 0.0 && gap_std > 0.0, "normalization scales must be positive");
}

HeadParams init_head(Eigen::Index input_dim, Eigen::Index head_width, std::uint64_t seed) {
  require(input_dim >= 1 && head_width >= 1, "head dimensions must be positive");
  Rng rng = make_rng(seed);
  HeadParams h;
  h.w_hidden = gaussian_matrix(rng, head_width, input_dim, 1.0 / std::sqrt(double(input_dim)));
  h.b_hidden = Vector::Zero(head_width);
  h.w_geo = gaussian_matrix(rng, 2, head_width, 1.0 / std::sqrt(double(head_width)));
  h.b_geo = Vector::Zero(2);
  h.w_conf = gaussian_vector(rng, head_width, 1.0 / std::sqrt(double(head_width)));
  return h;
}

HeadOutput head_forward(const HeadParams& head, const Vector& hidden) {
  require(hidden.size() == head.input_dim(), "hidden state size != head input size");
  const Vector z = (head.w_hidden * hidden + head.b_hidden).array().tanh().matrix();
  const Vector g = head.w_geo * z + head.b_geo;
  return {g(0), g(1), head.w_conf.dot(z) + head.b_conf};
}

void DistillSchedule::validate() const {
  student.validate();
  require(phase1_steps >= 0 && phase2_steps >= 0 && phase3_steps >= 0,
          "phase step counts must be non-negative");
  require(geo_loss_weight >= 0.0 && lm_loss_weight >= 0.0, "loss weights must be non-negative");
  require(std::abs(geo_loss_weight + lm_loss_weight - 1.0) < 1e-9, "loss weights must sum to 1");
  require(center_refresh_interval >= 0, "refresh interval must be non-negative");
  require(head_width >= 1, "head width must be positive");
  require(head_learning_rate > 0.0 && confidence_learning_rate > 0.0,
          "head learning rates must be positive");
  require(k_variants >= 1, "k_variants must be at least 1");
  require(variant_noise >= 0.0, "variant noise must be non-negative");
  require(probe_count >= 0, "probe count must be non-negative");
}

DistillSchedule DistillSchedule::from_epochs(int e1, int e2, int e3, int n_seen,
                                             int batch_size) {
  require(n_seen >= 1 && batch_size >= 1, "need entities and a batch size");
  const std::int64_t per_epoch = (n_seen + batch_size - 1) / batch_size;
  DistillSchedule s;
  s.student.batch_size = batch_size;
  s.phase1_steps = e1 * per_epoch;
  s.phase2_steps = e2 * per_epoch;
  s.phase3_steps = e3 * per_epoch;
  s.center_refresh_interval = 2 * per_epoch;
  return s;
}

std::uint64_t centers_checksum(const geometry::BasinCenterSet& centers) {
  std::uint64_t h = fnv1a64(centers.ids.data(), centers.ids.size() * sizeof(taskgen::EntityId));
  for (const auto& c : centers.centers)
    h = fnv1a64(c.data(), static_cast<std::size_t>(c.size()) * sizeof(double), h);
  return h;
}

double fit_geometric(HeadParams& head, const Matrix& hidden, const Matrix& targets,
                     std::int64_t steps, double learning_rate, int batch_size,
                     std::uint64_t seed) {
  require(hidden.cols() == targets.cols() && targets.rows() == 2, "target shape mismatch");
  require(hidden.cols() >= 1, "need at least one training example");
  Rng rng = make_rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, hidden.cols() - 1);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(batch_size));
  for (std::int64_t s = 0; s < steps; ++s) {
    for (auto& i : idx) i = pick(rng);
    const auto g = geo_loss_and_gradient(head, gather(hidden, idx), gather(targets, idx));
    head.w_hidden -= learning_rate * g.w_hidden;
    head.b_hidden -= learning_rate * g.b_hidden;
    head.w_geo -= learning_rate * g.w_geo;
    head.b_geo -= learning_rate * g.b_geo;
  }
  return geo_loss(head, hidden, targets);
}

DistillResult distill(nnkit::ModelParams model, const taskgen::Dataset& dataset,
                      const DistillSchedule& schedule, std::uint64_t seed) {
  schedule.validate();
  model.validate();
  if (schedule.phase2_steps > 0 && dataset.seen.empty())
    throw InvalidInput("co-training needs at least one seen entity");

  DistillResult res;
  nnkit::TrainConfig cfg = schedule.student;
  cfg.seed = seed;
  cfg.steps = schedule.phase1_steps;

  // Phase 1: student alone, identical to a plain training run.
  if (schedule.phase1_steps > 0) {
    auto tr = nnkit::train(std::move(model), dataset, cfg);
    model = std::move(tr.model);
    res.report.phase1 = tr.report;
  }
  res.report.losses.phase1_loss = res.report.phase1.final_loss;

  res.head = init_head(model.width(), schedule.head_width, derive_seed(seed, "head"));
  if (dataset.seen.empty()) {
    res.model = std::move(model);
    return res;
  }

  const std::uint64_t center_seed = derive_seed(seed, "centers");
  auto refresh_centers = [&]() {
    return geometry::basin_centers(model, dataset, schedule.k_variants, schedule.variant_noise,
                                   center_seed);
  };
  const Pool pool = build_pool(dataset, schedule.k_variants, schedule.variant_noise,
                               schedule.probe_count, derive_seed(seed, "pool"));
  res.report.pool_size = static_cast<int>(pool.inputs.cols());

  // Phase 2: co-training against oracle geometry.
  if (schedule.phase2_steps > 0) {
    auto centers = refresh_centers();
    Matrix raw = oracle_geometry(nnkit::hidden_batch(model, pool.inputs), centers);
    std::tie(res.head.margin_mean, res.head.margin_std) = mean_std(raw.row(0));
    std::tie(res.head.gap_mean, res.head.gap_std) = mean_std(raw.row(1));
    Matrix targets = normalize(raw, res.head);
    res.report.refresh_steps.push_back(0);
    res.report.refresh_checksums.push_back(centers_checksum(centers));

    const Matrix seen_x = dataset.seen_inputs();
    const Matrix seen_t = nnkit::one_hot(dataset.seen_codes(), dataset.classes);
    Rng rng = make_rng(derive_seed(seed, "phase2"));
    std::uniform_int_distribution<Eigen::Index> pick_seen(0, seen_x.cols() - 1);
    std::uniform_int_distribution<Eigen::Index> pick_pool(0, pool.inputs.cols() - 1);
    const auto bsz = static_cast<std::size_t>(cfg.batch_size);
    std::vector<Eigen::Index> si(bsz), pi(bsz);
    const double lr = cfg.learning_rate, hlr = schedule.head_learning_rate;
    const double wl = schedule.lm_loss_weight, wg = schedule.geo_loss_weight;

    for (std::int64_t step = 0; step < schedule.phase2_steps; ++step) {
      if (step > 0 && schedule.center_refresh_interval > 0 &&
          step % schedule.center_refresh_interval == 0) {
        centers = refresh_centers();
        targets = normalize(oracle_geometry(nnkit::hidden_batch(model, pool.inputs), centers),
                            res.head);
        res.report.refresh_steps.push_back(step);
        res.report.refresh_checksums.push_back(centers_checksum(centers));
      }
      for (auto& i : si) i = pick_seen(rng);
      for (auto& i : pi) i = pick_pool(rng);

      const auto lm = nnkit::loss_and_gradient(model, gather(seen_x, si), gather(seen_t, si));
      const Matrix px = gather(pool.inputs, pi);
      const Matrix ph = nnkit::hidden_batch(model, px);
      const auto geo = geo_loss_and_gradient(res.head, ph, gather(targets, pi));
      if (!std::isfinite(lm.loss) || !std::isfinite(geo.loss))
        throw DivergedTraining(schedule.phase1_steps + step, lm.loss + geo.loss);

      Matrix gw1 = wl * lm.grad.w1;
      Vector gb1 = wl * lm.grad.b1;
      if (schedule.co_train) {
        Matrix d_pre = wg * geo.d_hidden;
        if (model.activation == nnkit::Activation::relu)
          d_pre = (ph.array() > 0.0).select(d_pre, 0.0);
        else
          d_pre = (d_pre.array() * (1.0 - ph.array().square())).matrix();
        gw1 += d_pre * px.transpose();
        gb1 += d_pre.rowwise().sum();
      }
      model.w1 -= lr * gw1;
      model.b1 -= lr * gb1;
      model.w2 -= lr * wl * lm.grad.w2;
      model.b2 -= lr * wl * lm.grad.b2;
      res.head.w_hidden -= hlr * wg * geo.w_hidden;
      res.head.b_hidden -= hlr * wg * geo.b_hidden;
      res.head.w_geo -= hlr * wg * geo.w_geo;
      res.head.b_geo -= hlr * wg * geo.b_geo;
    }
    res.report.losses.phase2_lm_loss = nnkit::mean_loss(model, seen_x, seen_t);
    res.report.losses.phase2_geo_loss =
        geo_loss(res.head, nnkit::hidden_batch(model, pool.inputs), targets);
  }

  // Phase 3: frozen student and backbone, confidence output against correctness.
  if (schedule.phase3_steps > 0) {
    const Matrix hidden = nnkit::hidden_batch(model, pool.inputs);
    const Matrix lg = nnkit::logits_batch(model, pool.inputs);
    const Matrix z =
        ((res.head.w_hidden * hidden).colwise() + res.head.b_hidden).array().tanh().matrix();
    Vector y(z.cols());
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      const int code = pool.codes[static_cast<std::size_t>(j)];
      y(j) = code >= 0 && nnkit::argmax(lg.col(j)) == code ? 1.0 : 0.0;
    }
    Rng rng = make_rng(derive_seed(seed, "phase3"));
    std::uniform_int_distribution<Eigen::Index> pick(0, z.cols() - 1);
    const double clr = schedule.confidence_learning_rate;
    const double b = static_cast<double>(cfg.batch_size);
    for (std::int64_t step = 0; step < schedule.phase3_steps; ++step) {
      Vector gw = Vector::Zero(z.rows());
      double gb = 0.0;
      for (int k = 0; k < cfg.batch_size; ++k) {
        const Eigen::Index j = pick(rng);
        const double d = sigmoid(res.head.w_conf.dot(z.col(j)) + res.head.b_conf) - y(j);
        gw += d * z.col(j);
        gb += d;
      }
      res.head.w_conf -= clr * gw / b;
      res.head.b_conf -= clr * gb / b;
    }
    double bce = 0.0;
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      const double c = res.head.w_conf.dot(z.col(j)) + res.head.b_conf;
      // log(1 + e^c) - y c, computed stably
      bce += std::max(c, 0.0) + std::log1p(std::exp(-std::abs(c))) - y(j) * c;
    }
    res.report.losses.phase3_bce_loss = bce / static_cast<double>(z.cols());
  }

  res.centers = refresh_centers();
  res.model = std::move(model);
  return res;
}

HeadEvaluation compare_methods(std::vector<QueryEval> queries) {
  HeadEvaluation ev;
  ev.queries = std::move(queries);
  const std::size_t n = ev.queries.size();
  std::vector<double> om(n), pm(n), cf(n), en(n);
  std::vector<bool> lab(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& q = ev.queries[i];
    om[i] = q.oracle_margin;
    pm[i] = q.predicted_margin;
    cf[i] = q.confidence;
    en[i] = q.entropy;
    lab[i] = q.correct;
  }
  using detect::Direction;
  const std::vector<std::tuple<std::string, const std::vector<double>*, Direction>> specs = {
      {"oracle_margin", &om, Direction::lower_is_positive},
      {"predicted_margin", &pm, Direction::lower_is_positive},
      {"confidence", &cf, Direction::higher_is_positive},
      {"entropy", &en, Direction::lower_is_positive}};
  const auto pos = std::count(lab.begin(), lab.end(), true);
  const bool both = pos > 0 && pos < static_cast<long>(n);
  for (const auto& [name, values, dir] : specs) {
    MethodRow row{name, dir, std::numeric_limits<double>::quiet_NaN(),
                  std::numeric_limits<double>::quiet_NaN()};
    if (both) {
      row.auroc = detect::auroc(*values, lab, dir).auroc;
      row.correct_preserved = detect::intervention(*values, lab, dir).correct_preserved;
    }
    ev.methods.push_back(row);
  }
  const Eigen::Map<const Vector> a(pm.data(), static_cast<Eigen::Index>(n));
  const Eigen::Map<const Vector> o(om.data(), static_cast<Eigen::Index>(n));
  const Vector da = a.array() - a.mean(), dob = o.array() - o.mean();
  const double den = std::sqrt(da.squaredNorm() * dob.squaredNorm());
  ev.margin_correlation = den > 0.0 ? da.dot(dob) / den : std::numeric_limits<double>::quiet_NaN();
  return ev;
}

HeadEvaluation evaluate_head(const HeadParams& head, const nnkit::ModelParams& model,
                             const taskgen::Dataset& queries,
                             const geometry::BasinCenterSet& centers) {
  head.validate();
  require(centers.size() >= 1, "oracle margins need basin centers");
  require(head.input_dim() == model.width(), "head input size != model width");
  std::vector<QueryEval> rows;
  auto add = [&](const taskgen::Entity& e, geometry::Condition cond) {
    const auto t = nnkit::forward(model, e.embedding);
    const auto out = head_forward(head, t.hidden);
    QueryEval q;
    q.query_id = e.id;
    q.condition = cond;
    q.oracle_margin = geometry::margin(t.hidden, centers).delta;
    q.predicted_margin = out.margin * head.margin_std + head.margin_mean;
    q.confidence = sigmoid(out.confidence_logit);
    q.entropy = nnkit::softmax_entropy(t.logits);
    q.correct = nnkit::argmax(t.logits) == e.code;
    rows.push_back(q);
  };
  for (const auto& e : queries.seen) add(e, geometry::Condition::seen);
  for (const auto& e : queries.unseen) add(e, geometry::Condition::unseen);
  return compare_methods(std::move(rows));
}

CsvTable methods_to_csv(const HeadEvaluation& eval) {
  CsvTable t;
  t.comments.push_back("margin_correlation=" + format_double(eval.margin_correlation));
  t.header = {"method", "direction", "auroc", "correct_preserved"};
  for (const auto& m : eval.methods)
    t.rows.push_back({m.method, detect::to_string(m.direction), format_double(m.auroc),
                      format_double(m.correct_preserved)});
  return t;
}

CsvTable queries_to_csv(const HeadEvaluation& eval) {
  CsvTable t;
  t.header = {"query_id", "condition", "oracle_margin", "predicted_margin",
              "confidence", "entropy", "correct"};
  for (const auto& q : eval.queries)
    t.rows.push_back({std::to_string(q.query_id), geometry::to_string(q.condition),
                      format_double(q.oracle_margin), format_double(q.predicted_margin),
                      format_double(q.confidence), format_double(q.entropy),
                      q.correct ? "1" : "0"});
  return t;
}

}  // namespace basinlab::metacog

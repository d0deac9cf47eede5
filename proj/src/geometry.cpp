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

#include "basinlab/geometry.hpp"

#include <cmath>
#include <limits>

#include "basinlab/errors.hpp"

namespace basinlab::geometry {

void BasinCenterSet::add(EntityId id, Vector center) {
  require(center.allFinite(), "basin center must be finite");
  require(centers.empty() || center.size() == dim(), "basin center dimension mismatch");
  for (EntityId existing : ids)
    require(existing != id, "duplicate basin center id " + std::to_string(id));
  ids.push_back(id);
  centers.push_back(std::move(center));
}

const Vector& BasinCenterSet::center(EntityId id) const {
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == id) return centers[i];
  throw InvalidInput("no basin center for entity " + std::to_string(id));
}

BasinCenterSet basin_centers(const nnkit::ModelParams& model,
                             const taskgen::Dataset& dataset, int k_variants,
                             double noise_scale, std::uint64_t seed) {
  require(!dataset.seen.empty(), "basin centers need at least one seen entity");
  require(k_variants >= 1, "k_variants must be at least 1");
  BasinCenterSet set;
  set.variants_used = k_variants;
  for (const auto& e : dataset.seen) {
    const auto vs = taskgen::make_variants(e, k_variants, noise_scale, seed);
    // Running mean: identical variants reproduce the single-variant center
    // bit for bit.
    Vector mean = nnkit::hidden_state(model, vs.variants[0]);
    for (std::size_t i = 1; i < vs.variants.size(); ++i)
      mean += (nnkit::hidden_state(model, vs.variants[i]) - mean) / double(i + 1);
    set.add(e.id, std::move(mean));
  }
  return set;
}

namespace {

double distance(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// Strict ordering on (distance, id).
bool closer(double d, EntityId id, double best, EntityId best_id) {
  return d < best || (d == best && id < best_id);
}

}  // namespace

NearestTwo nearest_two(const Vector& h, const BasinCenterSet& centers) {
  require(centers.size() > 0, "empty basin center set");
  require(h.size() == centers.dim(), "hidden state dimension does not match centers");
  constexpr double inf = std::numeric_limits<double>::infinity();
  NearestTwo r{inf, -1, inf, -1};
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double d = distance(h, centers.centers[i]);
    const EntityId id = centers.ids[i];
    if (r.first_id < 0 || closer(d, id, r.first, r.first_id)) {
      r.second = r.first;
      r.second_id = r.first_id;
      r.first = d;
      r.first_id = id;
    } else if (r.second_id < 0 || closer(d, id, r.second, r.second_id)) {
      r.second = d;
      r.second_id = id;
    }
  }
  return r;
}

Margin margin(const Vector& h, const BasinCenterSet& centers) {
  const NearestTwo n = nearest_two(h, centers);
  return Margin{n.first, n.first_id};
}

double gap(const Vector& h, const BasinCenterSet& centers) {
  if (centers.size() < 2)
    throw InvalidInput("gap is undefined with fewer than two basin centers");
  const NearestTwo n = nearest_two(h, centers);
  return n.second - n.first;
}

double pairwise_agreement(const std::vector<Eigen::Index>& predictions) {
  require(predictions.size() >= 2, "stability needs at least two variants");
  std::size_t agree = 0, pairs = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    for (std::size_t j = i + 1; j < predictions.size(); ++j) {
      ++pairs;
      if (predictions[i] == predictions[j]) ++agree;
    }
  return static_cast<double>(agree) / static_cast<double>(pairs);
}

double stability(const nnkit::ModelParams& model, const taskgen::VariantSet& variants) {
  require(variants.variants.size() >= 2, "stability needs at least two variants");
  std::vector<Eigen::Index> preds;
  preds.reserve(variants.variants.size());
  for (const auto& v : variants.variants) preds.push_back(nnkit::argmax(nnkit::logits(model, v)));
  return pairwise_agreement(preds);
}

std::string to_string(Condition c) { return c == Condition::seen ? "seen" : "unseen"; }

std::vector<SignalRecord> signal_sweep(const nnkit::ModelParams& model,
                                       const taskgen::Dataset& dataset,
                                       const BasinCenterSet& centers,
                                       const SweepOptions& opts) {
  require(opts.k_variants >= 2, "signal sweep needs k_variants >= 2 for stability");
  require(centers.dim() == model.width(), "centers were not built from this model");
  const std::uint64_t stab_seed = derive_seed(opts.seed, "stability");

  std::vector<SignalRecord> out;
  out.reserve(dataset.seen.size() + dataset.unseen.size());
  auto record = [&](const taskgen::Entity& e, Condition cond) {
    const nnkit::ForwardTrace t = nnkit::forward(model, e.embedding);
    const NearestTwo n = nearest_two(t.hidden, centers);
    if (n.second_id < 0)
      throw InvalidInput("gap is undefined with fewer than two basin centers");
    SignalRecord r;
    r.query_id = e.id;
    r.condition = cond;
    r.margin = n.first;
    r.gap = n.second - n.first;
    r.nearest_id = n.first_id;
    r.entropy = nnkit::softmax_entropy(t.logits, opts.entropy_base);
    r.entropy_base = opts.entropy_base;
    r.stability = stability(model, taskgen::make_variants(e, opts.k_variants,
                                                          opts.noise_scale, stab_seed));
    const Eigen::Index pred = nnkit::argmax(t.logits);
    r.top1_prob = t.probs[pred];
    const double mu = t.hidden.mean();
    r.hidden_variance = (t.hidden.array() - mu).square().mean();
    r.logit_gap = nnkit::top2_gap(t.logits);
    r.correct = pred == e.code;
    out.push_back(r);
  };
  for (const auto& e : dataset.seen) record(e, Condition::seen);
  for (const auto& e : dataset.unseen) record(e, Condition::unseen);
  return out;
}

double separation_ratio(const std::vector<SignalRecord>& records) {
  double seen = 0.0, unseen = 0.0;
  std::size_t ns = 0, nu = 0;
  for (const auto& r : records) {
    if (r.condition == Condition::seen) {
      seen += r.margin;
      ++ns;
    } else {
      unseen += r.margin;
      ++nu;
    }
  }
  require(ns > 0 && nu > 0, "separation ratio needs both seen and unseen records");
  seen /= double(ns);
  unseen /= double(nu);
  if (seen == 0.0) return std::numeric_limits<double>::infinity();
  return unseen / seen;
}

PerturbCurve perturb_sweep(const nnkit::ModelParams& model,
                           const taskgen::Dataset& dataset,
                           const std::vector<double>& alphas, int trials,
                           std::uint64_t seed, int max_entities) {
  require(!alphas.empty(), "alpha schedule is empty");
  require(trials >= 1, "need at least one trial per alpha");
  require(!dataset.seen.empty(), "perturbation sweep needs seen entities");
  std::size_t n_ent = dataset.seen.size();
  if (max_entities > 0) n_ent = std::min<std::size_t>(n_ent, max_entities);

  double mean_norm = 0.0;
  for (std::size_t i = 0; i < n_ent; ++i) mean_norm += dataset.seen[i].embedding.norm();
  mean_norm /= double(n_ent);

  PerturbCurve curve;
  curve.alphas = alphas;
  curve.trials_per_alpha = trials;
  curve.entities = static_cast<int>(n_ent);
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    require(alphas[a] >= 0.0, "alpha must be non-negative");
    const double sigma = alphas[a] * mean_norm;
    Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(a)));
    double errors = 0.0, ent_sum = 0.0, ent_sq = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < n_ent; ++i) {
      const auto& e = dataset.seen[i];
      for (int t = 0; t < trials; ++t) {
        Vector x = e.embedding;
        if (sigma > 0.0) x += gaussian_vector(rng, x.size(), sigma);
        const Vector lg = nnkit::logits(model, x);
        if (nnkit::argmax(lg) != e.code) errors += 1.0;
        const double h = nnkit::softmax_entropy(lg);
        ent_sum += h;
        ent_sq += h * h;
        ++n;
      }
    }
    const double dn = double(n);
    const double err = errors / dn;
    const double ent = ent_sum / dn;
    const double ent_var = n > 1 ? std::max(0.0, (ent_sq - dn * ent * ent) / (dn - 1.0)) : 0.0;
    curve.error_rate.push_back(err);
    curve.mean_entropy.push_back(ent);
    curve.error_sem.push_back(n > 1 ? std::sqrt(err * (1.0 - err) / (dn - 1.0)) : 0.0);
    curve.entropy_sem.push_back(std::sqrt(ent_var / dn));
  }
  return curve;
}

CsvTable signals_to_csv(const std::vector<SignalRecord>& records) {
  CsvTable t;
  t.header = {"query_id", "condition", "margin",    "gap",             "nearest_id", "entropy",
              "entropy_base", "stability", "top1_prob", "hidden_variance", "correct"};
  for (const auto& r : records)
    t.rows.push_back({std::to_string(r.query_id), to_string(r.condition),
                      format_double(r.margin), format_double(r.gap),
                      std::to_string(r.nearest_id), format_double(r.entropy),
                      nnkit::to_string(r.entropy_base), format_double(r.stability),
                      format_double(r.top1_prob), format_double(r.hidden_variance),
                      r.correct ? "1" : "0"});
  return t;
}

std::vector<SignalRecord> signals_from_csv(const CsvTable& t) {
  const auto c_id = t.column("query_id"), c_cond = t.column("condition"),
             c_margin = t.column("margin"), c_gap = t.column("gap"),
             c_near = t.column("nearest_id"), c_ent = t.column("entropy"),
             c_base = t.column("entropy_base"), c_stab = t.column("stability"),
             c_top = t.column("top1_prob"), c_var = t.column("hidden_variance"),
             c_ok = t.column("correct");
  std::vector<SignalRecord> out;
  for (const auto& row : t.rows) {
    SignalRecord r;
    r.query_id = std::stoi(row[c_id]);
    if (row[c_cond] == "seen")
      r.condition = Condition::seen;
    else if (row[c_cond] == "unseen")
      r.condition = Condition::unseen;
    else
      throw InvalidInput("unknown condition '" + row[c_cond] + "'");
    r.margin = parse_double(row[c_margin]);
    r.gap = parse_double(row[c_gap]);
    r.nearest_id = std::stoi(row[c_near]);
    r.entropy = parse_double(row[c_ent]);
    r.entropy_base = nnkit::entropy_base_from_string(row[c_base]);
    r.stability = parse_double(row[c_stab]);
    r.top1_prob = parse_double(row[c_top]);
    r.hidden_variance = parse_double(row[c_var]);
    r.logit_gap = std::nan("");
    r.correct = row[c_ok] == "1";
    out.push_back(r);
  }
  return out;
}

CsvTable perturb_to_csv(const PerturbCurve& c) {
  CsvTable t;
  t.comments.push_back("trials_per_alpha=" + std::to_string(c.trials_per_alpha) +
                       " entities=" + std::to_string(c.entities));
  t.header = {"alpha", "error_rate", "error_sem", "mean_entropy", "entropy_sem"};
  for (std::size_t i = 0; i < c.alphas.size(); ++i)
    t.rows.push_back({format_double(c.alphas[i]), format_double(c.error_rate[i]),
                      format_double(c.error_sem[i]), format_double(c.mean_entropy[i]),
                      format_double(c.entropy_sem[i])});
  return t;
}

}  // namespace basinlab::geometry

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

#include "basinlab/detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "basinlab/errors.hpp"

namespace basinlab::detect {

namespace {

void check_labels(const std::vector<double>& scores, const std::vector<bool>& labels) {
  require(scores.size() == labels.size(), "scores and labels differ in length");
  const auto pos = std::count(labels.begin(), labels.end(), true);
  if (pos == 0 || pos == static_cast<long>(labels.size()))
    throw InvalidInput("both classes must be present");
  for (double s : scores) require(!std::isnan(s), "scores must not be NaN");
}

// Flip so that higher always means positive.
std::vector<double> oriented(const std::vector<double>& scores, Direction d) {
  std::vector<double> out(scores);
  if (d == Direction::lower_is_positive)
    for (double& s : out) s = -s;
  return out;
}

}  // namespace

std::string to_string(Direction d) {
  return d == Direction::higher_is_positive ? "higher_is_positive" : "lower_is_positive";
}

Direction direction_from_string(const std::string& s) {
  if (s == "higher_is_positive") return Direction::higher_is_positive;
  if (s == "lower_is_positive") return Direction::lower_is_positive;
  throw InvalidInput("unknown direction '" + s + "'");
}

RocResult auroc(const std::vector<double>& scores, const std::vector<bool>& labels,
                Direction direction) {
  check_labels(scores, labels);
  const auto s = oriented(scores, direction);
  const std::size_t n = s.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s[a] < s[b]; });

  // Midranks over tie groups.
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && s[order[j + 1]] == s[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }
  double n_pos = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (labels[i]) {
      n_pos += 1.0;
      rank_sum += rank[i];
    }
  const double n_neg = static_cast<double>(n) - n_pos;

  RocResult r;
  r.direction = direction;
  r.auroc = (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);

  const double sign = direction == Direction::lower_is_positive ? -1.0 : 1.0;
  r.curve.push_back({0.0, 0.0, sign * std::numeric_limits<double>::infinity()});
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = n; i > 0;) {
    std::size_t j = i;
    const double t = s[order[i - 1]];
    while (j > 0 && s[order[j - 1]] == t) {
      (labels[order[j - 1]] ? tp : fp) += 1.0;
      --j;
    }
    r.curve.push_back({fp / n_neg, tp / n_pos, sign * t});
    i = j;
  }
  return r;
}

double auroc_pairwise(const std::vector<double>& scores, const std::vector<bool>& labels,
                      Direction direction) {
  check_labels(scores, labels);
  const auto s = oriented(scores, direction);
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (labels[j]) continue;
      pairs += 1.0;
      if (s[i] > s[j]) wins += 1.0;
      else if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

CsvTable roc_to_csv(const RocResult& roc) {
  CsvTable t;
  t.comments.push_back("direction=" + to_string(roc.direction) +
                       " auroc=" + format_double(roc.auroc));
  t.header = {"fpr", "tpr", "threshold"};
  for (const auto& p : roc.curve)
    t.rows.push_back({format_double(p.fpr), format_double(p.tpr), format_double(p.threshold)});
  return t;
}

nlohmann::json CvResult::to_json() const {
  return {{"mean_auroc", mean_auroc}, {"std_auroc", std_auroc}, {"folds", folds},
          {"feature_names", feature_names}, {"fold_auroc", fold_auroc}};
}

Vector fit_logistic(const Matrix& x, const std::vector<bool>& labels,
                    const LogisticOptions& opts) {
  require(x.rows() == static_cast<Eigen::Index>(labels.size()), "feature rows != labels");
  const Eigen::Index n = x.rows(), p = x.cols();
  Matrix xa(n, p + 1);
  xa.leftCols(p) = x;
  xa.col(p).setOnes();
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = labels[i] ? 1.0 : 0.0;
  Vector w = Vector::Zero(p + 1);
  for (int it = 0; it < opts.max_iterations; ++it) {
    const Vector z = xa * w;
    Vector prob(n);
    for (Eigen::Index i = 0; i < n; ++i) prob(i) = 1.0 / (1.0 + std::exp(-z(i)));
    const Vector grad = xa.transpose() * (prob - y) / static_cast<double>(n);
    if (grad.norm() < opts.gradient_tolerance) break;
    w -= opts.learning_rate * grad;
  }
  return w;
}

CvResult logistic_cv(const Matrix& features, const std::vector<bool>& labels, int folds,
                     std::uint64_t seed, std::vector<std::string> feature_names,
                     const LogisticOptions& opts) {
  require(folds >= 2, "need at least two folds");
  require(features.rows() == static_cast<Eigen::Index>(labels.size()),
          "feature rows != labels");
  require(features.cols() >= 1, "need at least one feature");
  if (feature_names.empty())
    for (Eigen::Index j = 0; j < features.cols(); ++j)
      feature_names.push_back("x" + std::to_string(j));
  require(feature_names.size() == static_cast<std::size_t>(features.cols()),
          "feature name count != feature columns");

  // Stratified assignment: shuffle each class, then deal round-robin.
  std::vector<int> fold_of(labels.size());
  Rng rng = make_rng(derive_seed(seed, "folds"));
  for (bool cls : {false, true}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) idx.push_back(i);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t k = 0; k < idx.size(); ++k) fold_of[idx[k]] = static_cast<int>(k % folds);
  }

  CvResult res;
  res.folds = folds;
  res.feature_names = feature_names;
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> tr, te;
    for (std::size_t i = 0; i < labels.size(); ++i)
      (fold_of[i] == f ? te : tr).push_back(static_cast<Eigen::Index>(i));
    std::vector<bool> ytr, yte;
    for (auto i : tr) ytr.push_back(labels[i]);
    for (auto i : te) yte.push_back(labels[i]);
    auto both = [](const std::vector<bool>& y) {
      const auto c = std::count(y.begin(), y.end(), true);
      return c > 0 && c < static_cast<long>(y.size());
    };
    if (!both(ytr) || !both(yte))
      throw InvalidInput("fold " + std::to_string(f) + " lacks one of the classes");

    Matrix xtr = features(tr, Eigen::all);
    Matrix xte = features(te, Eigen::all);
    const Eigen::RowVectorXd mu = xtr.colwise().mean();
    Eigen::RowVectorXd sd = ((xtr.rowwise() - mu).array().square().colwise().sum() /
                             static_cast<double>(xtr.rows()))
                                .sqrt()
                                .matrix();
    for (Eigen::Index j = 0; j < sd.size(); ++j)
      if (!(sd(j) > 0.0)) sd(j) = 1.0;
    xtr = (xtr.rowwise() - mu).array().rowwise() / sd.array();
    xte = (xte.rowwise() - mu).array().rowwise() / sd.array();

    const Vector w = fit_logistic(xtr, ytr, opts);
    const Vector z = xte * w.head(w.size() - 1);
    std::vector<double> score(z.data(), z.data() + z.size());
    res.fold_auroc.push_back(auroc(score, yte, Direction::higher_is_positive).auroc);
  }
  const double k = static_cast<double>(folds);
  res.mean_auroc = std::accumulate(res.fold_auroc.begin(), res.fold_auroc.end(), 0.0) / k;
  double ss = 0.0;
  for (double a : res.fold_auroc) ss += (a - res.mean_auroc) * (a - res.mean_auroc);
  res.std_auroc = std::sqrt(ss / k);
  return res;
}

Correlation point_biserial(const std::vector<double>& x, const std::vector<bool>& labels) {
  check_labels(x, labels);
  const std::size_t n = x.size();
  require(n >= 3, "point-biserial needs at least 3 samples");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += labels[i] ? 1.0 : 0.0;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = (labels[i] ? 1.0 : 0.0) - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw UndefinedCorrelation("point-biserial on constant scores");
  Correlation c;
  c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(n) - 2.0;
  if (std::abs(c.r) >= 1.0) {
    c.p = 0.0;
  } else {
    const double t = c.r * std::sqrt(df / (1.0 - c.r * c.r));
    boost::math::students_t dist(df);
    c.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  }
  return c;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), "correlation inputs differ in length");
  require(x.size() >= 2, "correlation needs at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw UndefinedCorrelation("correlation of a constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j + 1 < v.size() && v[order[j + 1]] == v[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = 0.5 * double(i + j) + 1.0;
    i = j + 1;
  }
  return rank;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(average_ranks(x), average_ranks(y));
}

InterventionResult intervention(const std::vector<double>& scores,
                                const std::vector<bool>& labels, Direction direction) {
  check_labels(scores, labels);
  const auto s = oriented(scores, direction);
  double worst = std::numeric_limits<double>::lowest();
  for (std::size_t i = 0; i < s.size(); ++i)
    if (!labels[i]) worst = std::max(worst, s[i]);
  const double t = std::nextafter(worst, std::numeric_limits<double>::infinity());
  double kept = 0.0, pos = 0.0, caught = 0.0, neg = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (labels[i]) {
      pos += 1.0;
      if (s[i] >= t) kept += 1.0;
    } else {
      neg += 1.0;
      if (s[i] < t) caught += 1.0;
    }
  }
  InterventionResult r;
  r.direction = direction;
  r.threshold = direction == Direction::lower_is_positive ? -t : t;
  r.negatives_caught = caught / neg;
  r.correct_preserved = kept / pos;
  return r;
}

}  // namespace basinlab::detect

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

#include "basinlab/scalinglaw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "basinlab/errors.hpp"

namespace basinlab::law {

std::string to_string(BackgroundKind k) {
  switch (k) {
    case BackgroundKind::two_class_exact: return "two_class_exact";
    case BackgroundKind::two_class_approx: return "two_class_approx";
    case BackgroundKind::flat_tail: return "flat_tail";
  }
  return "unknown";
}

BackgroundKind background_kind_from_string(const std::string& s) {
  if (s == "two_class_exact") return BackgroundKind::two_class_exact;
  if (s == "two_class_approx") return BackgroundKind::two_class_approx;
  if (s == "flat_tail") return BackgroundKind::flat_tail;
  throw InvalidInput("unknown background model '" + s + "'");
}

BackgroundModel BackgroundModel::two_class_exact() {
  return {BackgroundKind::two_class_exact, 2, 0.0};
}

BackgroundModel BackgroundModel::two_class_approx() {
  return {BackgroundKind::two_class_approx, 2, 0.0};
}

BackgroundModel BackgroundModel::flat_tail(int v, double g) {
  BackgroundModel bg{BackgroundKind::flat_tail, v, g};
  bg.validate();
  return bg;
}

void BackgroundModel::validate() const {
  if (kind == BackgroundKind::flat_tail) {
    require(v >= 3, "flat_tail needs a vocabulary of at least 3");
    require(tail_offset_g >= 0.0, "flat_tail offset must be non-negative");
  }
}

nlohmann::json BackgroundModel::to_json() const {
  nlohmann::json j{{"kind", to_string(kind)}};
  if (kind == BackgroundKind::flat_tail) {
    j["v"] = v;
    j["tail_offset_g"] = tail_offset_g;
  }
  return j;
}

BackgroundModel default_flat_tail() {
  return BackgroundModel::flat_tail(kDefaultVocab, kDefaultTailOffset);
}

double entropy_of_gap(double delta, const BackgroundModel& bg) {
  require(delta >= 0.0, "gap must be non-negative");
  switch (bg.kind) {
    case BackgroundKind::two_class_approx:
      return delta * std::exp(-delta);
    case BackgroundKind::two_class_exact: {
      // p = 1/(1+e^-d): H = log(1+e^-d) + d e^-d / (1+e^-d)
      const double e = std::exp(-delta);
      return std::log1p(e) + delta * e / (1.0 + e);
    }
    case BackgroundKind::flat_tail: {
      bg.validate();
      // Logits shifted by -delta: top at 0, runner-up at -delta, tail at -delta-g.
      const double tail_count = static_cast<double>(bg.v - 2);
      const double a = std::exp(-delta);
      const double b = tail_count * std::exp(-delta - bg.tail_offset_g);
      const double z = 1.0 + a + b;
      // H = log z - sum p_i * shifted_i
      return std::log(z) + (delta * a + (delta + bg.tail_offset_g) * b) / z;
    }
  }
  return 0.0;
}

double monotone_from(const BackgroundModel& bg) {
  return bg.kind == BackgroundKind::two_class_approx ? 1.0 : 0.0;
}

double max_cutoff_entropy(const BackgroundModel& bg) {
  return entropy_of_gap(monotone_from(bg), bg);
}

double entropy_cutoff(double h0, const BackgroundModel& bg) {
  bg.validate();
  const double hmax = max_cutoff_entropy(bg);
  if (!(h0 > 0.0 && h0 < hmax))
    throw InvalidInput("entropy threshold " + std::to_string(h0) + " outside (0, " +
                       std::to_string(hmax) + ")");
  double lo = monotone_from(bg);
  double hi = lo + 1.0;
  while (entropy_of_gap(hi, bg) > h0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw NumericError("entropy cutoff bracket did not close");
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (entropy_of_gap(mid, bg) > h0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double calibrate_tail_offset(double h0, int v, double target_gap) {
  require(v >= 3, "vocabulary must be at least 3");
  require(target_gap > 0.0, "target gap must be positive");
  // Entropy at the target gap falls as the tail moves away (g grows).
  auto h_at = [&](double g) {
    return entropy_of_gap(target_gap, BackgroundModel{BackgroundKind::flat_tail, v, g});
  };
  double lo = 0.0, hi = 1.0;
  if (h_at(lo) < h0)
    throw InvalidInput("threshold unreachable: even g = 0 gives lower entropy");
  if (entropy_of_gap(target_gap, BackgroundModel::two_class_exact()) >= h0)
    throw InvalidInput("threshold unreachable: two-class limit is above it");
  while (h_at(hi) > h0) hi *= 2.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (h_at(mid) > h0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // P(K <= l) = sqrt(2 pi)/l * sum exp(-(2k-1)^2 pi^2 / (8 l^2))
    const double c = -std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
    double s = 0.0;
    for (int k = 1; k <= 20; ++k) s += std::exp(c * (2 * k - 1) * (2 * k - 1));
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-300) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

double ks_p_value(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  return kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d);
}

double ks_statistic_exponential(std::vector<double> samples, double mean) {
  require(!samples.empty(), "KS test on no samples");
  require(mean > 0.0, "exponential mean must be positive");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = -std::expm1(-samples[i] / mean);
    d = std::max({d, (double(i) + 1.0) / n - f, f - double(i) / n});
  }
  return d;
}

GapStats gap_stats(const std::vector<double>& samples) {
  require(samples.size() >= 10, "gap statistics need at least 10 samples");
  for (double s : samples) require(s >= 0.0 && std::isfinite(s), "gaps must be finite and >= 0");
  GapStats g;
  g.n = samples.size();
  const double n = static_cast<double>(g.n);
  double sum = 0.0;
  for (double s : samples) sum += s;
  g.mean = sum / n;
  if (g.mean == 0.0) throw InvalidInput("gap statistics undefined for zero mean");
  double ss = 0.0;
  for (double s : samples) ss += (s - g.mean) * (s - g.mean);
  g.std = std::sqrt(ss / (n - 1.0));
  g.std_over_mean = g.std / g.mean;
  g.ks_stat = ks_statistic_exponential(samples, g.mean);
  g.ks_p = ks_p_value(g.ks_stat, g.n);
  return g;
}

double confident_fraction(const std::vector<double>& entropies, double h0) {
  require(!entropies.empty(), "confident fraction of an empty list");
  std::size_t below = 0;
  for (double h : entropies)
    if (h < h0) ++below;
  return static_cast<double>(below) / static_cast<double>(entropies.size());
}

double predict_log_c(double delta_star, double delta_bar) {
  if (!(delta_bar > 0.0)) throw InvalidInput("mean gap must be positive");
  return -delta_star / delta_bar;
}

LawPoint make_law_point(std::string label, std::string benchmark, double delta_bar,
                        double delta_star, double c_emp, std::optional<double> h_rate) {
  require(c_emp >= 0.0 && c_emp <= 1.0, "confident fraction outside [0,1]");
  LawPoint p;
  p.label = std::move(label);
  p.benchmark = std::move(benchmark);
  p.delta_bar = delta_bar;
  p.delta_star = delta_star;
  p.c_emp = c_emp;
  p.log_c_pred = predict_log_c(delta_star, delta_bar);
  p.ratio = c_emp > 0.0 && c_emp < 1.0 ? p.log_c_pred / std::log(c_emp)
                                       : std::numeric_limits<double>::quiet_NaN();
  p.h_rate = h_rate;
  if (h_rate) p.u_rate = *h_rate * c_emp;
  return p;
}

LawFit fit_law(const std::vector<LawPoint>& points) {
  LawFit fit;
  std::vector<double> x, y, pred;
  for (const auto& p : points) {
    if (!(p.c_emp > 0.0)) {
      fit.warnings.push_back("excluded " + p.label + " " + p.benchmark + ": c_emp = 0");
      continue;
    }
    require(p.delta_bar > 0.0, "mean gap must be positive");
    x.push_back(1.0 / p.delta_bar);
    y.push_back(std::log(p.c_emp));
    pred.push_back(-p.delta_star / p.delta_bar);
  }
  fit.n_points = x.size();
  if (x.empty()) throw InvalidInput("law fit needs at least one point with c_emp > 0");
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += x[i] * y[i];
    sxx += x[i] * x[i];
  }
  fit.slope = sxy / sxx;
  if (x.size() < 2) return fit;

  const double n = static_cast<double>(x.size());
  double ybar = 0.0;
  for (double v : y) ybar += v;
  ybar /= n;
  double ss_res = 0.0, ss_tot = 0.0, ss_raw = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.slope * x[i];
    ss_res += r * r;
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
    ss_raw += y[i] * y[i];
  }
  if (ss_tot > 0.0) fit.r_squared = std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
  else if (ss_res == 0.0) fit.r_squared = 1.0;
  if (ss_raw > 0.0) fit.r_squared_uncentered = std::clamp(1.0 - ss_res / ss_raw, 0.0, 1.0);

  double pbar = 0.0;
  for (double v : pred) pbar += v;
  pbar /= n;
  double cov = 0.0, vp = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    cov += (pred[i] - pbar) * (y[i] - ybar);
    vp += (pred[i] - pbar) * (pred[i] - pbar);
    vy += (y[i] - ybar) * (y[i] - ybar);
  }
  if (vp > 0.0 && vy > 0.0) fit.prediction_r_squared = cov * cov / (vp * vy);
  return fit;
}

nlohmann::json LawFit::to_json() const {
  nlohmann::json j{{"slope", slope},
                    {"n_points", n_points},
                    {"degenerate", n_points < 2},
                    {"warnings", warnings}};
  if (r_squared) j["r_squared"] = *r_squared;
  if (r_squared_uncentered) j["r_squared_uncentered"] = *r_squared_uncentered;
  if (prediction_r_squared) j["prediction_r_squared"] = *prediction_r_squared;
  return j;
}

double delta_scaling_exponent(const std::vector<double>& sizes,
                              const std::vector<double>& delta_bars) {
  require(sizes.size() == delta_bars.size(), "sizes and gaps differ in length");
  require(sizes.size() >= 2, "need at least two points");
  const double n = static_cast<double>(sizes.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    require(sizes[i] > 0.0 && delta_bars[i] > 0.0, "sizes and gaps must be positive");
    mx += std::log(sizes[i]);
    my += std::log(delta_bars[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double dx = std::log(sizes[i]) - mx;
    sxy += dx * (std::log(delta_bars[i]) - my);
    sxx += dx * dx;
  }
  require(sxx > 0.0, "sizes must not all be equal");
  return sxy / sxx;
}

std::vector<double> sample_exponential_gaps(double mean, std::size_t n, Rng& rng,
                                            bool stratified) {
  require(mean > 0.0, "exponential mean must be positive");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u = unif(rng);
    if (stratified) u = (static_cast<double>(i) + u) / static_cast<double>(n);
    // Survival-function inversion: gap = -mean * log(1 - u).
    out[i] = -mean * std::log1p(-std::min(u, 1.0 - 1e-16));
  }
  return out;
}

SyntheticLawPoint synthetic_law_point(double delta_bar, std::size_t n, double h0,
                                      const BackgroundModel& bg, std::uint64_t seed,
                                      bool stratified) {
  require(n > 0, "need at least one sample");
  Rng rng = make_rng(seed);
  const auto gaps = sample_exponential_gaps(delta_bar, n, rng, stratified);
  std::vector<double> ent;
  ent.reserve(n);
  for (double g : gaps) ent.push_back(entropy_of_gap(g, bg));
  SyntheticLawPoint p;
  p.delta_bar = delta_bar;
  p.delta_star = entropy_cutoff(h0, bg);
  p.n = n;
  p.c_emp = confident_fraction(ent, h0);
  p.log_c_emp = p.c_emp > 0.0 ? std::log(p.c_emp) : -std::numeric_limits<double>::infinity();
  p.log_c_pred = predict_log_c(p.delta_star, delta_bar);
  return p;
}

std::vector<LawPoint> load_reference_points(const std::filesystem::path& csv) {
  if (!std::filesystem::exists(csv))
    throw InvalidInput("reference file not found: " + csv.string());
  const CsvTable t = read_csv(csv);
  const auto c_label = t.column("label"), c_bench = t.column("benchmark"),
             c_db = t.column("delta_bar"), c_ds = t.column("delta_star"),
             c_c = t.column("c_emp");
  std::optional<std::size_t> c_h;
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i] == "h_rate") c_h = i;
  std::vector<LawPoint> out;
  for (const auto& row : t.rows) {
    std::optional<double> h;
    if (c_h && !row[*c_h].empty()) h = parse_double(row[*c_h]);
    out.push_back(make_law_point(row[c_label], row[c_bench], parse_double(row[c_db]),
                                 parse_double(row[c_ds]), parse_double(row[c_c]), h));
  }
  return out;
}

std::vector<GapStatsRow> load_reference_gap_stats(const std::filesystem::path& csv) {
  if (!std::filesystem::exists(csv))
    throw InvalidInput("reference file not found: " + csv.string());
  const CsvTable t = read_csv(csv);
  const auto c_m = t.column("model"), c_db = t.column("delta_bar"),
             c_r = t.column("std_over_mean"), c_p = t.column("ks_p");
  std::vector<GapStatsRow> out;
  for (const auto& row : t.rows)
    out.push_back({row[c_m], parse_double(row[c_db]), parse_double(row[c_r]),
                   parse_double(row[c_p])});
  return out;
}

CsvTable law_points_to_csv(const std::vector<LawPoint>& points, const BackgroundModel* bg) {
  CsvTable t;
  if (bg) t.comments.push_back("background=" + bg->to_json().dump());
  t.header = {"label", "benchmark", "delta_bar", "delta_star", "c_emp",
              "log_c_emp", "log_c_pred", "ratio", "h_rate", "u_rate"};
  for (const auto& p : points) {
    const double log_c = p.c_emp > 0.0 ? std::log(p.c_emp)
                                       : -std::numeric_limits<double>::infinity();
    t.rows.push_back({p.label, p.benchmark, format_double(p.delta_bar),
                      format_double(p.delta_star), format_double(p.c_emp),
                      format_double(log_c), format_double(p.log_c_pred),
                      format_double(p.ratio), p.h_rate ? format_double(*p.h_rate) : "",
                      p.u_rate ? format_double(*p.u_rate) : ""});
  }
  return t;
}

}  // namespace basinlab::law

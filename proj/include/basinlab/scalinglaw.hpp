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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "basinlab/csv.hpp"
#include "basinlab/rng.hpp"
#include "json.hpp"

// Confident-error scaling law C = exp(-c / mean_gap): entropy as a function
// of the top-2 logit gap, the entropy cutoff, gap statistics, and fitting.
// Every entropy in this namespace is in nats.
namespace basinlab::law {

enum class BackgroundKind { two_class_exact, two_class_approx, flat_tail };

std::string to_string(BackgroundKind k);
BackgroundKind background_kind_from_string(const std::string& s);

/// How the logits below the top two are modeled when mapping a gap to an
/// output entropy. flat_tail places v - 2 logits at (second - g).
struct BackgroundModel {
  BackgroundKind kind = BackgroundKind::two_class_exact;
  int v = 2;
  double tail_offset_g = 0.0;

  static BackgroundModel two_class_exact();
  static BackgroundModel two_class_approx();
  static BackgroundModel flat_tail(int v, double g);

  void validate() const;
  nlohmann::json to_json() const;
};

// Tail offset for v = 30000 at which the h0 = 0.1 cutoff sits at a gap of 5.0.
// Reproduced by calibrate_tail_offset(0.1, 30000, 5.0).
inline constexpr int kDefaultVocab = 30000;
inline constexpr double kDefaultTailOffset = 10.943019355039269;
BackgroundModel default_flat_tail();

/// Output entropy (nats) at top-2 gap `delta`.
double entropy_of_gap(double delta, const BackgroundModel& bg);

// Smallest gap at which entropy_of_gap is strictly decreasing: 1 for the
// delta * exp(-delta) approximation, 0 otherwise.
double monotone_from(const BackgroundModel& bg);

// Supremum of the entropies the cutoff solver accepts.
double max_cutoff_entropy(const BackgroundModel& bg);

/// The gap delta* with entropy_of_gap(delta*) == h0, by bisection to 1e-9.
double entropy_cutoff(double h0, const BackgroundModel& bg);

/// Solve for the flat-tail offset g such that entropy_cutoff(h0) == target_gap.
double calibrate_tail_offset(double h0, int v, double target_gap);

struct GapStats {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
  double std_over_mean = 0.0;
  std::size_t n = 0;
  double ks_stat = 0.0;
  double ks_p = 0.0;
};

/// Moments and one-sample KS test against Exponential(mean = sample mean).
GapStats gap_stats(const std::vector<double>& samples);

// KS statistic of samples against an exponential CDF with the given mean.
double ks_statistic_exponential(std::vector<double> samples, double mean);

/// Asymptotic Kolmogorov survival function Q(lambda) = P(K > lambda).
double kolmogorov_survival(double lambda);

// p-value for statistic d at sample size n (Stephens' finite-n scaling).
double ks_p_value(double d, std::size_t n);

/// Fraction of entropies strictly below h0.
double confident_fraction(const std::vector<double>& entropies, double h0);

/// Parameter-free prediction log C = -delta_star / delta_bar.
double predict_log_c(double delta_star, double delta_bar);

struct LawPoint {
  std::string label;
  std::string benchmark;
  double delta_bar = 0.0;
  double delta_star = 0.0;
  double c_emp = 0.0;
  double log_c_pred = 0.0;
  double ratio = 0.0;  // log_c_pred / ln(c_emp)
  std::optional<double> h_rate;
  std::optional<double> u_rate;  // h_rate * c_emp
};

LawPoint make_law_point(std::string label, std::string benchmark, double delta_bar,
                        double delta_star, double c_emp,
                        std::optional<double> h_rate = std::nullopt);

struct LawFit {
  double slope = 0.0;  // through-origin fit of ln C on 1 / delta_bar
  std::optional<double> r_squared;  // 1 - SS_res / SS_tot, SS_tot about mean ln C
  std::optional<double> r_squared_uncentered;
  // Squared Pearson correlation between -delta_star/delta_bar and ln C.
  std::optional<double> prediction_r_squared;
  std::size_t n_points = 0;
  std::vector<std::string> warnings;  // excluded points

  nlohmann::json to_json() const;
};

/// Points with c_emp <= 0 are excluded with a warning. Needs at least one
/// usable point; r^2 values are omitted for a single point.
LawFit fit_law(const std::vector<LawPoint>& points);

/// Least-squares slope of ln(delta_bar) against ln(size).
double delta_scaling_exponent(const std::vector<double>& sizes,
                              const std::vector<double>& delta_bars);

// Exponential(mean) gaps. Stratified draws place one uniform in each of n
// equal-probability strata before the inverse-CDF transform.
std::vector<double> sample_exponential_gaps(double mean, std::size_t n, Rng& rng,
                                            bool stratified);

struct SyntheticLawPoint {
  double delta_bar = 0.0;
  double delta_star = 0.0;
  std::size_t n = 0;
  double c_emp = 0.0;
  double log_c_emp = 0.0;
  double log_c_pred = 0.0;
};

/// Exponential gaps -> entropies under `bg` -> confident fraction at h0.
SyntheticLawPoint synthetic_law_point(double delta_bar, std::size_t n, double h0,
                                      const BackgroundModel& bg, std::uint64_t seed,
                                      bool stratified);

// Reference data: per-(model, benchmark) law points and gap statistics.
std::vector<LawPoint> load_reference_points(const std::filesystem::path& csv);

struct GapStatsRow {
  std::string model;
  double delta_bar = 0.0;
  double std_over_mean = 0.0;
  double ks_p = 0.0;
};
std::vector<GapStatsRow> load_reference_gap_stats(const std::filesystem::path& csv);

CsvTable law_points_to_csv(const std::vector<LawPoint>& points,
                           const BackgroundModel* bg = nullptr);

}  // namespace basinlab::law

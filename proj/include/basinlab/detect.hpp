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
#include <string>
#include <vector>

#include "basinlab/csv.hpp"
#include "basinlab/nnkit.hpp"
#include "json.hpp"

// Detection statistics over scalar signals. Labels are "positive" = true;
// in the detection experiments a positive is a correct answer and a
// negative is a hallucination.
namespace basinlab::detect {

enum class Direction { higher_is_positive, lower_is_positive };

std::string to_string(Direction d);
Direction direction_from_string(const std::string& s);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // scores on the positive side of this are flagged positive
};

struct RocResult {
  double auroc = 0.5;
  std::vector<RocPoint> curve;  // (0,0) first, (1,1) last
  Direction direction = Direction::higher_is_positive;
};

/// Mann-Whitney AUROC (ties count one half) plus the threshold-sweep curve.
RocResult auroc(const std::vector<double>& scores, const std::vector<bool>& labels,
                Direction direction);

// O(n^2) pairwise reference implementation.
double auroc_pairwise(const std::vector<double>& scores, const std::vector<bool>& labels,
                      Direction direction);

CsvTable roc_to_csv(const RocResult& roc);

struct CvResult {
  double mean_auroc = 0.0;
  double std_auroc = 0.0;  // population std over folds
  int folds = 0;
  std::vector<std::string> feature_names;
  std::vector<double> fold_auroc;

  nlohmann::json to_json() const;
};

struct LogisticOptions {
  int max_iterations = 2000;
  double learning_rate = 0.5;
  double gradient_tolerance = 1e-8;
};

// Logistic regression weights; bias is the last entry.
Vector fit_logistic(const Matrix& x, const std::vector<bool>& labels,
                    const LogisticOptions& opts = {});

/// Stratified k-fold logistic regression. `features` is n x p with one row
/// per sample. Standardization is fit on each training fold.
CvResult logistic_cv(const Matrix& features, const std::vector<bool>& labels, int folds,
                     std::uint64_t seed, std::vector<std::string> feature_names = {},
                     const LogisticOptions& opts = {});

struct Correlation {
  double r = 0.0;
  double p = 1.0;
};

/// Pearson correlation with the 0/1 label and its two-sided t-test p-value.
Correlation point_biserial(const std::vector<double>& x, const std::vector<bool>& labels);

// Plain Pearson and Spearman (average ranks for ties) correlations.
// Both throw UndefinedCorrelation when either input is constant.
double pearson(const std::vector<double>& x, const std::vector<double>& y);
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct InterventionResult {
  double threshold = 0.0;
  double negatives_caught = 1.0;
  double correct_preserved = 0.0;
  Direction direction = Direction::lower_is_positive;
};

/// Most permissive single-threshold rule that refuses every negative. The
/// threshold sits just past the worst negative; accepted scores are those at
/// or beyond it on the positive side.
InterventionResult intervention(const std::vector<double>& scores,
                                const std::vector<bool>& labels, Direction direction);

}  // namespace basinlab::detect

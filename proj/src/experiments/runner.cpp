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

#include "basinlab/experiments/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <thread>

#include "basinlab/csv.hpp"
#include "basinlab/detect.hpp"
#include "basinlab/errors.hpp"
#include "basinlab/experiments/manifest.hpp"
#include "basinlab/experiments/plot.hpp"
#include "basinlab/geometry.hpp"
#include "basinlab/hash.hpp"
#include "basinlab/jacobian.hpp"
#include "basinlab/metacog.hpp"
#include "basinlab/scalinglaw.hpp"
#include "basinlab/train.hpp"

namespace basinlab::experiments {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Collects files as they are written, in write order.
struct Sink {
  fs::path dir;
  std::vector<fs::path> files;

  fs::path csv(const std::string& name, const CsvTable& t) {
    const auto p = dir / name;
    write_csv(t, p);
    files.push_back(p);
    return p;
  }
  fs::path json_file(const std::string& name, const json& j) {
    const auto p = dir / name;
    std::ofstream out(p);
    if (!out) throw InvalidInput("cannot write " + p.string());
    out << j.dump(2) << '\n';
    files.push_back(p);
    return p;
  }
  void plot(const std::string& name, const CsvTable& t, PlotKind kind) {
    const auto [svg, side] = emit_plot(t, kind, dir / name);
    files.push_back(svg);
    files.push_back(side);
  }
  void add(const fs::path& p) { files.push_back(p); }
};

// NaN and infinities are not valid JSON numbers.
json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return nullptr;
  return v > 0 ? "inf" : "-inf";
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? kNaN : std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

std::optional<double> teacher_beta(const json& block) {
  if (block.at("teacher_beta").is_null()) return std::nullopt;
  return block.at("teacher_beta").get<double>();
}

nnkit::ModelParams teacher_for(const json& block, std::uint64_t seed) {
  return taskgen::make_teacher(block.at("d_in"), block.at("classes"), block.at("teacher_width"),
                               derive_seed(seed, "teacher"));
}

geometry::SweepOptions sweep_options(const json& block, std::uint64_t seed) {
  geometry::SweepOptions o;
  o.k_variants = std::max(2, block.at("k_variants").get<int>());
  o.noise_scale = block.at("variant_noise");
  o.seed = seed;
  return o;
}

// ---------------------------------------------------------------- width sweep

struct WidthRow {
  int m = 0;
  std::size_t params = 0;
  double seen_acc = kNaN, h_seen = kNaN, h_unseen = kNaN, ratio = kNaN, c_at_h0 = kNaN;
  double final_loss = kNaN;
  std::string status = "ok";
  std::vector<geometry::SignalRecord> signals;
  nnkit::ModelParams model;
};

WidthRow run_width(const json& p, const taskgen::Dataset& ds, int m, std::uint64_t seed) {
  WidthRow row;
  row.m = m;
  try {
    nnkit::TrainReport rep;
    row.model = train_from_block(p, ds, m, seed, &rep);
    row.params = row.model.parameter_count();
    row.final_loss = rep.final_loss;
    row.seen_acc = rep.seen_accuracy;
    const auto centers =
        geometry::basin_centers(row.model, ds, p.at("k_variants"), p.at("variant_noise"),
                                derive_seed(seed, "centers"));
    row.signals = geometry::signal_sweep(
        row.model, ds, centers, sweep_options(p, derive_seed(seed, "sweep/" + std::to_string(m))));
    std::vector<double> hs, hu;
    std::size_t wrong = 0, confident = 0;
    const double h0 = p.at("h0");
    for (const auto& r : row.signals) {
      (r.condition == geometry::Condition::seen ? hs : hu).push_back(r.entropy);
      if (r.condition == geometry::Condition::unseen && !r.correct) {
        ++wrong;
        if (r.entropy < h0) ++confident;
      }
    }
    row.h_seen = mean_of(hs);
    row.h_unseen = mean_of(hu);
    row.ratio = geometry::separation_ratio(row.signals);
    row.c_at_h0 = wrong ? double(confident) / double(wrong) : kNaN;
  } catch (const Error& e) {
    row.status = std::string("failed: ") + e.what();
  }
  return row;
}

RunResult run_width_sweep(const ExperimentConfig& cfg, Sink& sink, const RunOptions& opts) {
  const auto& p = cfg.params;
  const auto ds = dataset_from_block(p, cfg.seed);
  const auto widths = p.at("widths").get<std::vector<int>>();
  std::vector<WidthRow> rows(widths.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < widths.size();)
      rows[i] = run_width(p, ds, widths[i], cfg.seed);
  };
  const int jobs = std::clamp(opts.jobs, 1, static_cast<int>(widths.size()));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  taskgen::save_dataset_json(ds, sink.dir / "dataset.json");
  sink.add(sink.dir / "dataset.json");

  CsvTable t;
  t.comments.push_back("steps=" + std::to_string(p.at("steps").get<long>()) +
                       " h0=" + format_double(p.at("h0")));
  t.header = {"m", "params", "seen_acc", "H_seen", "H_unseen", "separation_ratio",
              "C_at_h0", "final_loss", "status"};
  CsvTable plot;
  plot.header = {"series", "x", "y"};
  json rows_json = json::array();
  for (const auto& r : rows) {
    t.rows.push_back({std::to_string(r.m), std::to_string(r.params), format_double(r.seen_acc),
                      format_double(r.h_seen), format_double(r.h_unseen), format_double(r.ratio),
                      format_double(r.c_at_h0), format_double(r.final_loss), r.status});
    rows_json.push_back({{"m", r.m}, {"params", r.params}, {"seen_acc", num(r.seen_acc)},
                         {"H_seen", num(r.h_seen)}, {"H_unseen", num(r.h_unseen)},
                         {"separation_ratio", num(r.ratio)}, {"C_at_h0", num(r.c_at_h0)},
                         {"status", r.status}});
    if (r.status != "ok") continue;
    sink.csv("signals_m" + std::to_string(r.m) + ".csv", geometry::signals_to_csv(r.signals));
    if (p.at("save_checkpoints").get<bool>()) {
      const auto ck = sink.dir / ("checkpoint_m" + std::to_string(r.m) + ".json");
      nnkit::save_checkpoint_json({r.model, cfg.seed}, ck);
      sink.add(ck);
    }
  }
  sink.csv("width_sweep.csv", t);
  for (const auto& [series, get] :
       std::vector<std::pair<std::string, double (*)(const WidthRow&)>>{
           {"log10_separation_ratio", [](const WidthRow& r) { return std::log10(r.ratio); }},
           {"confident_fraction", [](const WidthRow& r) { return r.c_at_h0; }},
           {"seen_accuracy", [](const WidthRow& r) { return r.seen_acc; }}})
    for (const auto& r : rows)
      if (r.status == "ok" && std::isfinite(get(r)))
        plot.rows.push_back({series, std::to_string(r.m), format_double(get(r))});
  if (!plot.rows.empty()) {
    try {
      sink.plot("width_sweep.svg", plot, PlotKind::width_sweep);
    } catch (const InvalidInput&) {
      // No finite separation ratio to draw.
    }
  }

  RunResult res;
  res.summary = {{"rows", rows_json}, {"steps", p.at("steps")}};
  const auto& first = rows.front();
  const auto& last = rows.back();
  const bool ok = first.status == "ok" && last.status == "ok";
  const double growth = ok ? last.ratio / first.ratio : kNaN;
  res.summary["ratio_growth"] = num(growth);
  res.checks.push_back({"separation_ratio_growth", ok && growth >= 20.0,
                        "ratio(last)/ratio(first) = " + format_double(growth) + ", need >= 20"});
  res.checks.push_back({"confident_fraction_trend",
                        ok && last.c_at_h0 > first.c_at_h0 && last.c_at_h0 >= 0.5,
                        "C first = " + format_double(first.c_at_h0) +
                            ", C last = " + format_double(last.c_at_h0) +
                            ", need last > first and last >= 0.5"});
  res.checks.push_back({"first_width_seen_accuracy", first.status == "ok" && first.seen_acc >= 0.5,
                        "seen accuracy = " + format_double(first.seen_acc) + ", need >= 0.5"});
  return res;
}

// -------------------------------------------------------------- scaling law

json fit_summary(const std::vector<law::LawPoint>& pts, const law::LawFit& fit) {
  std::vector<double> ratios;
  for (const auto& pt : pts)
    if (std::isfinite(pt.ratio)) ratios.push_back(pt.ratio);
  json s = fit.to_json();
  if (!ratios.empty()) {
    const double m = mean_of(ratios);
    double ss = 0.0;
    for (double r : ratios) ss += (r - m) * (r - m);
    s["ratio_mean"] = m;
    s["ratio_std"] = ratios.size() > 1 ? std::sqrt(ss / double(ratios.size() - 1)) : 0.0;
    s["ratio_min"] = *std::min_element(ratios.begin(), ratios.end());
    s["ratio_max"] = *std::max_element(ratios.begin(), ratios.end());
  }
  return s;
}

CsvTable law_plot_table(const std::vector<law::LawPoint>& pts, const law::LawFit& fit) {
  CsvTable t;
  t.header = {"series", "x", "y"};
  double lo = 0.0, hi = -std::numeric_limits<double>::infinity();
  for (const auto& pt : pts) {
    if (!(pt.c_emp > 0.0)) continue;
    const double x = -1.0 / pt.delta_bar;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
    t.rows.push_back({"points", format_double(x), format_double(std::log(pt.c_emp))});
  }
  // ln C = slope / delta_bar = -slope * x.
  for (double x : {lo, std::max(hi, 0.0)})
    t.rows.push_back({"fit", format_double(x), format_double(-fit.slope * x)});
  return t;
}

void add_law_checks(RunResult& res, const std::vector<law::LawPoint>& pts,
                    const law::LawFit& fit) {
  const double r2 = fit.prediction_r_squared.value_or(kNaN);
  res.checks.push_back({"through_origin_slope", fit.slope >= -6.2 && fit.slope <= -5.5,
                        "slope = " + format_double(fit.slope) + ", need [-6.2, -5.5]"});
  res.checks.push_back({"prediction_r_squared", r2 >= 0.85,
                        "r^2(pred, ln C) = " + format_double(r2) + ", need >= 0.85; centered fit r^2 = " +
                            format_double(fit.r_squared.value_or(kNaN))});
  bool in_band = true;
  std::vector<double> ratios;
  for (const auto& pt : pts) {
    in_band = in_band && pt.ratio >= 0.6 && pt.ratio <= 1.3;
    ratios.push_back(pt.ratio);
  }
  const double m = mean_of(ratios);
  res.checks.push_back({"per_point_ratio_band", in_band, "every ratio in [0.6, 1.3]"});
  res.checks.push_back({"mean_ratio", std::abs(m - 0.96) <= 0.15,
                        "mean ratio = " + format_double(m) + ", need 0.96 +/- 0.15"});
}

RunResult run_reference_fit(const fs::path& csv, Sink& sink) {
  const auto path = resolve_data_path(csv.string());
  const auto pts = law::load_reference_points(path);
  const auto fit = law::fit_law(pts);
  sink.csv("law_points.csv", law::law_points_to_csv(pts));
  sink.json_file("law_fit.json", fit_summary(pts, fit));
  sink.plot("law_fit.svg", law_plot_table(pts, fit), PlotKind::law_fit);
  RunResult res;
  res.summary = fit_summary(pts, fit);
  res.summary["reference_csv"] = csv.string();
  add_law_checks(res, pts, fit);
  return res;
}

law::BackgroundModel background_from(const json& b) {
  const auto kind = law::background_kind_from_string(b.at("kind"));
  switch (kind) {
    case law::BackgroundKind::two_class_exact: return law::BackgroundModel::two_class_exact();
    case law::BackgroundKind::two_class_approx: return law::BackgroundModel::two_class_approx();
    case law::BackgroundKind::flat_tail:
      return law::BackgroundModel::flat_tail(b.at("v"), b.at("tail_offset_g"));
  }
  return {};
}

RunResult run_law_verify(const ExperimentConfig& cfg, Sink& sink) {
  const auto& p = cfg.params;
  if (p.at("mode") == "reference") return run_reference_fit(p.at("reference_csv").get<std::string>(), sink);

  const auto bg = background_from(p.at("background"));
  const double h0 = p.at("h0"), tol = p.at("tolerance");
  const auto dbs = p.at("delta_bars").get<std::vector<double>>();
  CsvTable t;
  t.comments.push_back("background=" + bg.to_json().dump() + " h0=" + format_double(h0));
  t.header = {"delta_bar", "delta_star", "n", "c_emp", "log_c_emp", "log_c_pred", "abs_error"};
  std::vector<law::LawPoint> pts;
  RunResult res;
  json rows = json::array();
  bool all_ok = true;
  for (std::size_t i = 0; i < dbs.size(); ++i) {
    const auto sp = law::synthetic_law_point(dbs[i], p.at("n"), h0, bg, derive_seed(cfg.seed, i),
                                             p.at("stratified"));
    const double err = std::abs(sp.log_c_emp - sp.log_c_pred);
    all_ok = all_ok && err <= tol;
    t.rows.push_back({format_double(sp.delta_bar), format_double(sp.delta_star),
                      std::to_string(sp.n), format_double(sp.c_emp), format_double(sp.log_c_emp),
                      format_double(sp.log_c_pred), format_double(err)});
    rows.push_back({{"delta_bar", sp.delta_bar}, {"delta_star", sp.delta_star},
                    {"c_emp", sp.c_emp}, {"log_c_emp", num(sp.log_c_emp)},
                    {"log_c_pred", sp.log_c_pred}, {"abs_error", num(err)}});
    pts.push_back(law::make_law_point("synthetic", "exponential", sp.delta_bar, sp.delta_star,
                                      sp.c_emp));
  }
  sink.csv("synthetic_law.csv", t);
  const auto fit = law::fit_law(pts);
  sink.json_file("law_fit.json", fit.to_json());
  if (fit.n_points >= 1) sink.plot("law_fit.svg", law_plot_table(pts, fit), PlotKind::law_fit);
  res.summary = {{"points", rows}, {"fit", fit.to_json()}};
  res.checks.push_back({"synthetic_tail_law", all_ok,
                        "|ln C_emp - ln C_pred| <= " + format_double(tol) + " at every mean gap"});
  return res;
}

RunResult run_law_fit(const ExperimentConfig& cfg, Sink& sink) {
  const auto& p = cfg.params;
  RunResult res = run_reference_fit(p.at("reference_csv").get<std::string>(), sink);
  const auto gpath = resolve_data_path(p.at("gap_stats_csv"));
  const auto gaps = law::load_reference_gap_stats(gpath);
  CsvTable g;
  g.header = {"model", "delta_bar", "std_over_mean", "ks_p"};
  for (const auto& r : gaps)
    g.rows.push_back({r.model, format_double(r.delta_bar), format_double(r.std_over_mean),
                      format_double(r.ks_p)});
  sink.csv("gap_stats.csv", g);
  const double h0 = p.at("h0");
  res.summary["cutoffs"] = {
      {"two_class_approx", law::entropy_cutoff(h0, law::BackgroundModel::two_class_approx())},
      {"two_class_exact", law::entropy_cutoff(h0, law::BackgroundModel::two_class_exact())},
      {"flat_tail_default", law::entropy_cutoff(h0, law::default_flat_tail())}};
  return res;
}

// ----------------------------------------------------------------- jacobian

RunResult run_jacobian_suite(const ExperimentConfig& cfg, Sink& sink) {
  const auto& p = cfg.params;
  const int trials = p.at("trials"), d = p.at("dim"), nh = p.at("heads");
  double orth = 0.0, phi_sym = 0.0, phi_anti = 0.0, scale_inv = 0.0, transpose_inv = 0.0;
  double energy_err = 0.0, energy_sym_err = 0.0;
  int boosted = 0;
  for (int t = 0; t < trials; ++t) {
    Rng rng = make_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(t)));
    const Matrix j = gaussian_matrix(rng, d, d);
    const auto rep = jacobian::decompose(j, false);
    orth = std::max(orth, std::abs(j.squaredNorm() - rep.s_frob_sq - rep.a_frob_sq));
    phi_sym = std::max(phi_sym, std::abs(jacobian::phi(jacobian::random_symmetric(rng, d)) - 1.0));
    phi_anti =
        std::max(phi_anti, std::abs(jacobian::phi(jacobian::random_antisymmetric(rng, d)) + 1.0));
    scale_inv = std::max(scale_inv, std::abs(jacobian::phi(3.7 * j) - rep.phi));
    transpose_inv = std::max(transpose_inv, std::abs(jacobian::phi(j.transpose()) - rep.phi));

    // One symmetric head carries most of the attention.
    jacobian::HeadSet hs;
    hs.heads.push_back(jacobian::random_symmetric(rng, d));
    hs.attn_weights.push_back(0.7);
    for (int h = 1; h < nh; ++h) {
      hs.heads.push_back(jacobian::random_antisymmetric(rng, d));
      hs.attn_weights.push_back(0.3 / (nh - 1));
    }
    const auto vc = jacobian::vo_composite(hs);
    if (vc.phi_weighted > vc.phi_uniform) ++boosted;

    const Vector h = gaussian_vector(rng, d);
    const auto e = jacobian::vo_energy(h, hs);
    double brute = 0.0;
    for (std::size_t k = 0; k < hs.heads.size(); ++k)
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) brute += hs.attn_weights[k] * h(a) * hs.heads[k](a, b) * h(b);
    energy_err = std::max(energy_err, std::abs(e.energy - brute));
    energy_sym_err = std::max(energy_sym_err, std::abs(e.energy_symmetric - e.energy));
  }
  const int need = (95 * trials + 99) / 100;

  CsvTable t;
  t.header = {"check", "value", "threshold", "pass"};
  RunResult res;
  auto add = [&](const std::string& name, double v, double thr, bool pass) {
    t.rows.push_back({name, format_double(v), format_double(thr), pass ? "1" : "0"});
    res.checks.push_back({name, pass, format_double(v) + " vs " + format_double(thr)});
  };
  add("orthogonality_max_error", orth, 1e-9, orth <= 1e-9);
  add("phi_symmetric_max_error", phi_sym, 1e-12, phi_sym <= 1e-12);
  add("phi_antisymmetric_max_error", phi_anti, 1e-12, phi_anti <= 1e-12);
  add("phi_scale_invariance_max_error", scale_inv, 1e-12, scale_inv <= 1e-12);
  add("phi_transpose_invariance_max_error", transpose_inv, 1e-12, transpose_inv <= 1e-12);
  add("vo_energy_brute_force_max_error", energy_err, 1e-9, energy_err <= 1e-9);
  add("vo_energy_symmetric_max_error", energy_sym_err, 1e-9, energy_sym_err <= 1e-9);
  add("attention_boost_count", boosted, need, boosted >= need);
  sink.csv("jacobian_suite.csv", t);

  // Exploratory: untrained square student at a seen point and a random point.
  const int m = p.at("model_width");
  const auto model = nnkit::init_model(m, m, 2 * m, derive_seed(cfg.seed, "model"),
                                       nnkit::Activation::tanh);
  Rng rng = make_rng(derive_seed(cfg.seed, "probe"));
  Vector x = gaussian_vector(rng, m);
  x /= x.norm();
  json model_json;
  try {
    model_json = jacobian::to_json(jacobian::model_jacobian_report(model, x));
  } catch (const Error& e) {
    model_json = {{"error", e.what()}};
  }
  sink.json_file("jacobian_model.json", model_json);
  res.summary = {{"trials", trials}, {"attention_boost_count", boosted}, {"model", model_json}};
  return res;
}

// ------------------------------------------------------------------ perturb

RunResult run_perturb(const ExperimentConfig& cfg, Sink& sink) {
  const auto& p = cfg.params;
  const auto& tb = p.at("training");
  const auto ds = dataset_from_block(tb, cfg.seed);
  nnkit::ModelParams model;
  json train_info;
  if (!p.at("checkpoint").get<std::string>().empty()) {
    model = nnkit::load_checkpoint_json(p.at("checkpoint").get<std::string>()).model;
    train_info = {{"checkpoint", p.at("checkpoint")}};
  } else {
    nnkit::TrainReport rep;
    model = train_from_block(tb, ds, tb.at("width"), cfg.seed, &rep);
    train_info = {{"seen_accuracy", rep.seen_accuracy}, {"final_loss", rep.final_loss}};
  }
  const auto alphas = p.at("alphas").get<std::vector<double>>();
  const auto curve = geometry::perturb_sweep(model, ds, alphas, p.at("trials"),
                                             derive_seed(cfg.seed, "perturb"), p.at("max_entities"));
  sink.csv("perturb.csv", geometry::perturb_to_csv(curve));
  CsvTable plot;
  plot.header = {"series", "x", "y"};
  for (std::size_t i = 0; i < alphas.size(); ++i)
    plot.rows.push_back({"error_rate", format_double(alphas[i]), format_double(curve.error_rate[i])});
  for (std::size_t i = 0; i < alphas.size(); ++i)
    plot.rows.push_back(
        {"mean_entropy", format_double(alphas[i]), format_double(curve.mean_entropy[i])});
  sink.plot("perturb.svg", plot, PlotKind::perturb);

  RunResult res;
  double rho = kNaN, r = kNaN;
  try {
    rho = detect::spearman(alphas, curve.error_rate);
  } catch (const UndefinedCorrelation&) {
  }
  try {
    r = detect::pearson(curve.mean_entropy, curve.error_rate);
  } catch (const UndefinedCorrelation&) {
  }
  res.summary = {{"training", train_info}, {"spearman_alpha_error", num(rho)},
                 {"pearson_entropy_error", num(r)}, {"error_rate", curve.error_rate},
                 {"mean_entropy", curve.mean_entropy}};
  res.checks.push_back({"error_monotone_in_alpha", rho >= 0.9,
                        "Spearman rho = " + format_double(rho) + ", need >= 0.9"});
  res.checks.push_back({"entropy_tracks_error", r > 0.0,
                        "Pearson r = " + format_double(r) + ", need > 0"});
  return res;
}

// ------------------------------------------------------------- detect suite

struct SignalColumn {
  std::string name;
  detect::Direction dir;
  double (*get)(const geometry::SignalRecord&);
};

const std::vector<SignalColumn>& signal_columns() {
  using D = detect::Direction;
  static const std::vector<SignalColumn> cols = {
      {"margin", D::lower_is_positive, [](const geometry::SignalRecord& r) { return r.margin; }},
      {"gap", D::higher_is_positive, [](const geometry::SignalRecord& r) { return r.gap; }},
      {"entropy", D::lower_is_positive, [](const geometry::SignalRecord& r) { return r.entropy; }},
      {"stability", D::higher_is_positive,
       [](const geometry::SignalRecord& r) { return r.stability; }},
      {"top1_prob", D::higher_is_positive,
       [](const geometry::SignalRecord& r) { return r.top1_prob; }},
      {"hidden_variance", D::higher_is_positive,
       [](const geometry::SignalRecord& r) { return r.hidden_variance; }},
  };
  return cols;
}

std::vector<std::string> ladder_features(const std::string& rung) {
  if (rung == "entropy_only") return {"entropy"};
  if (rung == "margin_only") return {"margin"};
  if (rung == "margin_stability") return {"margin", "stability"};
  return {"margin", "gap", "entropy", "stability", "top1_prob", "hidden_variance"};
}

RunResult run_detect_suite(const ExperimentConfig& cfg, Sink& sink) {
  const auto& p = cfg.params;
  const auto& tb = p.at("training");
  const int width = tb.at("width");
  taskgen::Dataset ds;
  nnkit::ModelParams model;
  json source;
  const std::string art = p.at("artifact_dir");
  if (!art.empty()) {
    ds = taskgen::load_dataset_json(fs::path(art) / "dataset.json");
    model = nnkit::load_checkpoint_json(fs::path(art) / ("checkpoint_m" + std::to_string(width) +
                                                         ".json"))
                .model;
    source = {{"artifact_dir", art}, {"width", width}};
  } else {
    ds = dataset_from_block(tb, cfg.seed);
    nnkit::TrainReport rep;
    model = train_from_block(tb, ds, width, cfg.seed, &rep);
    source = {{"trained", true}, {"seen_accuracy", rep.seen_accuracy}};
  }
  const auto centers = geometry::basin_centers(model, ds, tb.at("k_variants"),
                                               tb.at("variant_noise"), derive_seed(cfg.seed, "centers"));
  const auto recs =
      geometry::signal_sweep(model, ds, centers, sweep_options(tb, derive_seed(cfg.seed, "sweep")));
  sink.csv("signals.csv", geometry::signals_to_csv(recs));

  std::vector<bool> labels;
  for (const auto& r : recs) labels.push_back(r.correct);
  auto column = [&](const SignalColumn& c) {
    std::vector<double> v;
    for (const auto& r : recs) v.push_back(c.get(r));
    return v;
  };

  RunResult res;
  res.summary["source"] = source;
  const auto n_pos = std::count(labels.begin(), labels.end(), true);
  res.summary["positives"] = n_pos;
  res.summary["negatives"] = static_cast<long>(labels.size()) - n_pos;
  if (n_pos == 0 || n_pos == static_cast<long>(labels.size())) {
    res.summary["error"] = "only one class present; detection statistics undefined";
    res.checks.push_back({"margin_beats_entropy", false, "single-class labels"});
    return res;
  }

  CsvTable au, iv, pb;
  au.header = {"signal", "direction", "auroc"};
  iv.header = {"signal", "direction", "threshold", "negatives_caught", "correct_preserved"};
  pb.header = {"signal", "r", "p"};
  CsvTable roc_plot;
  roc_plot.header = {"series", "x", "y"};
  json au_json, iv_json;
  for (const auto& c : signal_columns()) {
    const auto v = column(c);
    const auto roc = detect::auroc(v, labels, c.dir);
    au.rows.push_back({c.name, detect::to_string(c.dir), format_double(roc.auroc)});
    au_json[c.name] = roc.auroc;
    if (c.name == "margin" || c.name == "gap" || c.name == "entropy") {
      sink.csv("roc_" + c.name + ".csv", detect::roc_to_csv(roc));
      for (const auto& pt : roc.curve)
        roc_plot.rows.push_back({c.name, format_double(pt.fpr), format_double(pt.tpr)});
      const auto in = detect::intervention(v, labels, c.dir);
      iv.rows.push_back({c.name, detect::to_string(c.dir), format_double(in.threshold),
                         format_double(in.negatives_caught), format_double(in.correct_preserved)});
      iv_json[c.name] = in.correct_preserved;
    }
    try {
      const auto corr = detect::point_biserial(v, labels);
      pb.rows.push_back({c.name, format_double(corr.r), format_double(corr.p)});
    } catch (const UndefinedCorrelation&) {
      pb.rows.push_back({c.name, "nan", "nan"});
    }
  }
  sink.csv("auroc.csv", au);
  sink.csv("intervention.csv", iv);
  sink.csv("point_biserial.csv", pb);
  sink.plot("roc.svg", roc_plot, PlotKind::roc);

  CsvTable lad;
  lad.header = {"model", "features", "mean_auroc", "std_auroc", "folds"};
  json lad_json = json::object();
  for (const auto& rung : p.at("ladder")) {
    const auto feats = ladder_features(rung);
    Matrix x(static_cast<Eigen::Index>(recs.size()), static_cast<Eigen::Index>(feats.size()));
    for (std::size_t f = 0; f < feats.size(); ++f) {
      const auto& col = *std::find_if(signal_columns().begin(), signal_columns().end(),
                                      [&](const SignalColumn& c) { return c.name == feats[f]; });
      for (std::size_t i = 0; i < recs.size(); ++i)
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = col.get(recs[i]);
    }
    std::string joined;
    for (const auto& f : feats) joined += (joined.empty() ? "" : "+") + f;
    try {
      const auto cv = detect::logistic_cv(x, labels, p.at("folds"),
                                          derive_seed(cfg.seed, "cv/" + rung.get<std::string>()), feats);
      lad.rows.push_back({rung, joined, format_double(cv.mean_auroc), format_double(cv.std_auroc),
                          std::to_string(cv.folds)});
      lad_json[rung.get<std::string>()] = cv.to_json();
    } catch (const InvalidInput& e) {
      lad.rows.push_back({rung, joined, "nan", "nan", std::to_string(p.at("folds").get<int>())});
      lad_json[rung.get<std::string>()] = {{"error", e.what()}};
    }
  }
  sink.csv("ladder.csv", lad);
  res.summary["auroc"] = au_json;
  res.summary["correct_preserved"] = iv_json;
  res.summary["ladder"] = lad_json;

  const double am = au_json["margin"], ae = au_json["entropy"];
  const double pm = iv_json["margin"], pe = iv_json["entropy"];
  res.checks.push_back({"margin_auroc_beats_entropy", am > ae,
                        "margin " + format_double(am) + " vs entropy " + format_double(ae)});
  res.checks.push_back({"margin_preserves_at_least_entropy", pm >= pe,
                        "margin " + format_double(pm) + " vs entropy " + format_double(pe)});
  return res;
}

// ------------------------------------------------------------------ distill

RunResult run_distill(const ExperimentConfig& cfg, Sink& sink) {
  const auto& p = cfg.params;
  const auto& tb = p.at("training");
  const auto& sp = p.at("schedule");
  const auto ds = dataset_from_block(tb, cfg.seed);
  const int width = tb.at("width");

  metacog::DistillSchedule s;
  s.student.learning_rate = tb.at("learning_rate");
  s.student.batch_size = tb.at("batch_size");
  s.student.loss_threshold = tb.at("loss_threshold");
  s.student.input_noise = tb.at("input_noise");
  s.phase1_steps = tb.at("steps");
  s.phase2_steps = sp.at("phase2_steps");
  s.phase3_steps = sp.at("phase3_steps");
  s.geo_loss_weight = sp.at("geo_loss_weight");
  s.lm_loss_weight = sp.at("lm_loss_weight");
  s.center_refresh_interval = sp.at("center_refresh_interval");
  s.head_width = sp.at("head_width");
  s.head_learning_rate = sp.at("head_learning_rate");
  s.confidence_learning_rate = sp.at("confidence_learning_rate");
  s.co_train = sp.at("co_train");
  s.k_variants = tb.at("k_variants");
  s.variant_noise = tb.at("variant_noise");
  s.probe_count = sp.at("probe_count");

  const auto init = nnkit::init_model(ds.d_in, width, ds.classes,
                                      derive_seed(cfg.seed, "init/" + std::to_string(width)),
                                      nnkit::activation_from_string(tb.at("activation")));
  const auto out = metacog::distill(init, ds, s, derive_seed(cfg.seed, "train/" + std::to_string(width)));
  const auto ev = metacog::evaluate_head(out.head, out.model, ds, out.centers);
  sink.csv("head_methods.csv", metacog::methods_to_csv(ev));
  sink.csv("head_queries.csv", metacog::queries_to_csv(ev));

  json checksums = json::array();
  for (auto c : out.report.refresh_checksums) checksums.push_back(hex64(c));
  json report = {{"phase1_loss", out.report.losses.phase1_loss},
                 {"phase1_seen_accuracy", out.report.phase1.seen_accuracy},
                 {"phase2_lm_loss", out.report.losses.phase2_lm_loss},
                 {"phase2_geo_loss", out.report.losses.phase2_geo_loss},
                 {"phase3_bce_loss", out.report.losses.phase3_bce_loss},
                 {"refresh_steps", out.report.refresh_steps},
                 {"refresh_checksums", checksums},
                 {"pool_size", out.report.pool_size},
                 {"margin_correlation", num(ev.margin_correlation)}};
  json methods = json::object();
  for (const auto& m : ev.methods)
    methods[m.method] = {{"auroc", num(m.auroc)}, {"correct_preserved", num(m.correct_preserved)}};
  report["methods"] = methods;
  sink.json_file("distill_report.json", report);

  RunResult res;
  res.summary = report;
  const double oracle = ev.methods[0].auroc, predicted = ev.methods[1].auroc;
  res.checks.push_back({"predicted_margin_correlation", ev.margin_correlation >= 0.7,
                        "r = " + format_double(ev.margin_correlation) + ", need >= 0.7"});
  res.checks.push_back({"oracle_dominance", predicted <= oracle + 0.02,
                        "predicted " + format_double(predicted) + " vs oracle " + format_double(oracle)});
  return res;
}

}  // namespace

bool RunResult::all_checks_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

taskgen::Dataset dataset_from_block(const json& block, std::uint64_t seed) {
  auto ds = taskgen::generate_dataset(block.at("n_seen"), block.at("n_unseen"), block.at("d_in"),
                                      block.at("classes"), derive_seed(seed, "dataset"));
  if (teacher_beta(block)) ds = taskgen::relabel_with_teacher(std::move(ds), teacher_for(block, seed));
  return ds;
}

nnkit::ModelParams train_from_block(const json& block, const taskgen::Dataset& ds, int width,
                                    std::uint64_t seed, nnkit::TrainReport* report) {
  const std::string tag = std::to_string(width);
  auto model = nnkit::init_model(ds.d_in, width, ds.classes, derive_seed(seed, "init/" + tag),
                                 nnkit::activation_from_string(block.at("activation")));
  nnkit::TrainConfig tc;
  tc.steps = block.at("steps");
  tc.learning_rate = block.at("learning_rate");
  tc.batch_size = block.at("batch_size");
  tc.loss_threshold = block.at("loss_threshold");
  tc.input_noise = block.at("input_noise");
  tc.seed = derive_seed(seed, "train/" + tag);
  tc.teacher_beta = teacher_beta(block);
  std::optional<nnkit::ModelParams> teacher;
  if (tc.teacher_beta) teacher = teacher_for(block, seed);
  auto out = nnkit::train(std::move(model), ds, tc, teacher ? &*teacher : nullptr);
  if (report) *report = out.report;
  return std::move(out.model);
}

RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  fs::create_directories(cfg.output_dir);
  Sink sink{cfg.output_dir, {}};
  RunResult res;
  switch (cfg.experiment) {
    case ExperimentKind::width_sweep: res = run_width_sweep(cfg, sink, opts); break;
    case ExperimentKind::law_verify: res = run_law_verify(cfg, sink); break;
    case ExperimentKind::law_fit_reference: res = run_law_fit(cfg, sink); break;
    case ExperimentKind::jacobian_suite: res = run_jacobian_suite(cfg, sink); break;
    case ExperimentKind::perturb: res = run_perturb(cfg, sink); break;
    case ExperimentKind::detect_suite: res = run_detect_suite(cfg, sink); break;
    case ExperimentKind::distill: res = run_distill(cfg, sink); break;
  }
  res.output_dir = cfg.output_dir;
  res.artifacts = sink.files;
  std::vector<ArtifactEntry> entries;
  for (const auto& f : sink.files) entries.push_back(describe_artifact(cfg.output_dir, f));
  json checks = json::array();
  for (const auto& c : res.checks)
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  json summary = res.summary;
  summary["checks"] = checks;
  write_manifest(cfg.output_dir / "manifest.json", make_manifest(cfg, entries, summary));
  return res;
}

}  // namespace basinlab::experiments

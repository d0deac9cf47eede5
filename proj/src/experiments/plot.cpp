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

#include "basinlab/experiments/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "basinlab/errors.hpp"

namespace basinlab::experiments {

namespace {

struct KindInfo {
  PlotKind kind;
  const char* name;
  const char* x_label;
  const char* y_label;
  std::vector<std::string> required;
};

const std::vector<KindInfo>& kinds() {
  static const std::vector<KindInfo> k = {
      {PlotKind::law_fit, "law_fit", "-1 / mean gap", "ln C", {"points", "fit"}},
      {PlotKind::width_sweep, "width_sweep", "width m", "value", {"log10_separation_ratio"}},
      {PlotKind::perturb, "perturb", "noise alpha", "value", {"error_rate"}},
      {PlotKind::roc, "roc", "false positive rate", "true positive rate", {}},
  };
  return k;
}

const KindInfo& info(PlotKind kind) {
  for (const auto& k : kinds())
    if (k.kind == kind) return k;
  throw InvalidInput("unknown plot kind");
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::string to_string(PlotKind k) { return info(k).name; }

PlotKind plot_kind_from_string(const std::string& s) {
  for (const auto& k : kinds())
    if (s == k.name) return k.kind;
  throw InvalidInput("unknown plot kind '" + s + "'");
}

void validate_plot_table(const CsvTable& table, PlotKind kind) {
  const std::vector<std::string> header = {"series", "x", "y"};
  if (table.header != header) throw InvalidInput("plot schema: header must be series,x,y");
  if (table.rows.empty()) throw InvalidInput("plot schema: table is empty");
  std::vector<std::string> seen;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    if (r.size() != 3) throw InvalidInput("plot schema: row " + std::to_string(i) + " width");
    for (int c = 1; c <= 2; ++c)
      if (!std::isfinite(parse_double(r[c])))
        throw InvalidInput("plot schema: non-finite value in row " + std::to_string(i));
    seen.push_back(r[0]);
  }
  for (const auto& s : info(kind).required)
    if (std::find(seen.begin(), seen.end(), s) == seen.end())
      throw InvalidInput("plot schema: " + to_string(kind) + " needs series '" + s + "'");
}

std::string render_svg(const CsvTable& table, PlotKind kind) {
  validate_plot_table(table, kind);
  const auto& ki = info(kind);
  constexpr double W = 640, H = 420, L = 70, R = 150, T = 30, B = 50;

  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& r : table.rows) {
    const double x = parse_double(r[1]), y = parse_double(r[2]);
    if (!series.count(r[0])) order.push_back(r[0]);
    series[r[0]].push_back({x, y});
    x0 = std::min(x0, x), x1 = std::max(x1, x);
    y0 = std::min(y0, y), y1 = std::max(y1, y);
  }
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<g stroke=\"#444\" stroke-width=\"1\">\n"
    << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\"/>\n"
    << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\"/>\n"
    << "</g>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
    s << "<text x=\"" << fmt("%.2f", px(xv)) << "\" y=\"" << H - B + 16
      << "\" text-anchor=\"middle\">" << fmt("%.3g", xv) << "</text>\n";
    s << "<text x=\"" << L - 6 << "\" y=\"" << fmt("%.2f", py(yv) + 4)
      << "\" text-anchor=\"end\">" << fmt("%.3g", yv) << "</text>\n";
  }
  s << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
    << ki.x_label << "</text>\n";
  s << "<text transform=\"translate(16," << (T + H - B) / 2
    << ") rotate(-90)\" text-anchor=\"middle\">" << ki.y_label << "</text>\n";

  for (std::size_t si = 0; si < order.size(); ++si) {
    const auto& name = order[si];
    const char* color = kPalette[si % std::size(kPalette)];
    const auto& pts = series[name];
    if (name != "points") {
      s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < pts.size(); ++i)
        s << (i ? " " : "") << fmt("%.2f", px(pts[i].first)) << ','
          << fmt("%.2f", py(pts[i].second));
      s << "\"/>\n";
    }
    for (const auto& [x, y] : pts)
      s << "<circle cx=\"" << fmt("%.2f", px(x)) << "\" cy=\"" << fmt("%.2f", py(y))
        << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    s << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 14 * (si + 1) << "\" fill=\"" << color
      << "\">" << name << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::pair<std::filesystem::path, std::filesystem::path> emit_plot(
    const CsvTable& table, PlotKind kind, const std::filesystem::path& svg_path) {
  const std::string svg = render_svg(table, kind);
  std::ofstream out(svg_path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + svg_path.string());
  out << svg;
  auto csv_path = svg_path;
  csv_path.replace_extension(".plot.csv");
  CsvTable sidecar = table;
  sidecar.comments = {"plot=" + to_string(kind)};
  write_csv(sidecar, csv_path);
  return {svg_path, csv_path};
}

}  // namespace basinlab::experiments

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

#include <filesystem>
#include <string>
#include <utility>

#include "basinlab/csv.hpp"

namespace basinlab::experiments {

enum class PlotKind { law_fit, width_sweep, perturb, roc };

std::string to_string(PlotKind k);
PlotKind plot_kind_from_string(const std::string& s);

/// Plot data is a (series, x, y) table. "points" series render as markers,
/// every other series as a marked polyline. Each kind requires some series:
///   law_fit: points, fit; width_sweep: log10_separation_ratio;
///   perturb: error_rate; roc: any.
/// Throws InvalidInput on a schema mismatch or an empty table.
void validate_plot_table(const CsvTable& table, PlotKind kind);

// Deterministic SVG text for a validated table.
std::string render_svg(const CsvTable& table, PlotKind kind);

/// Writes the SVG and a sidecar CSV (same stem, .plot.csv) holding exactly the
/// plotted values. Returns (svg, csv) paths.
std::pair<std::filesystem::path, std::filesystem::path> emit_plot(
    const CsvTable& table, PlotKind kind, const std::filesystem::path& svg_path);

}  // namespace basinlab::experiments

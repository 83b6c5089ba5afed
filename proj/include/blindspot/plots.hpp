// Copyright 2026 The Blindspot Authors
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
#include <string_view>
#include <vector>

#include "blindspot/types.hpp"

namespace blindspot {

/// Tab-separated table with a header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; kSchema when absent.
  std::size_t column(std::string_view name) const;
};

Table parse_tsv(std::string_view text);
Table read_tsv(const std::filesystem::path& path);

// Each renderer takes the matching table written by the eval command and
// returns a standalone SVG document.
std::string svg_bars(const Table& bars);            // mean accuracy per test family, grouped by train source
std::string svg_severity(const Table& severity);    // accuracy against speckle sigma
std::string svg_scatter(const Table& scatter);      // same- vs cross-mentee accuracy with y = x
std::string svg_grid(const Table& grid);            // train-source x test-source heat map
std::string svg_landscape(const Table& landscape);  // accuracy against weight perturbation
std::string svg_report(const EvaluationReport& report);

}  // namespace blindspot

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

#include "blindspot/types.hpp"

namespace blindspot {

inline constexpr int kManifestSchemaVersion = 1;
inline constexpr int kReportSchemaVersion = 1;

// Manifest file:
//   blindspot-manifest v1 dataset=<name> seed=<seed>
//   <id>,train
//   ...
//   <id>,test
std::string manifest_to_text(const SplitManifest& manifest);
SplitManifest manifest_from_text(std::string_view text);
void write_manifest(const SplitManifest& manifest, const std::filesystem::path& path);
SplitManifest read_manifest(const std::filesystem::path& path);

/// Checks disjointness, duplicates and non-emptiness.
void validate_manifest(const SplitManifest& manifest);

// Report file: "blindspot-report v1" header, key=value lines, then a
// tab-separated per-source table introduced by a column header row.
std::string report_to_text(const EvaluationReport& report);
EvaluationReport report_from_text(std::string_view text);
void write_report(const EvaluationReport& report, const std::filesystem::path& path);
EvaluationReport read_report(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file then renames over the target.
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace blindspot

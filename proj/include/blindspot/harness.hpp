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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "blindspot/config.hpp"
#include "blindspot/types.hpp"

namespace blindspot {

inline constexpr const char* kRootEnv = "BLINDSPOT_ROOT";

/// $BLINDSPOT_ROOT, or ./artifacts when unset or empty.
std::filesystem::path artifact_root();

/// Everything a run writes lives under {root}/{run_id}/.
struct RunPaths {
  std::filesystem::path run;

  std::filesystem::path manifest() const { return run / "run_manifest.txt"; }
  std::filesystem::path config() const { return run / "config.json"; }
  std::filesystem::path registry() const { return run / "mentee_registry.json"; }
  std::filesystem::path split(const std::string& dataset) const { return run / "splits" / (dataset + ".manifest"); }
  std::filesystem::path data() const { return run / "data"; }
  std::filesystem::path mentor(const std::string& id) const { return run / "mentors" / (id + ".weights"); }
  std::filesystem::path reports() const { return run / "reports"; }
  std::filesystem::path tables() const { return run / "tables"; }
  std::filesystem::path plots() const { return run / "plots"; }
};

RunPaths run_paths(const ExperimentConfig& config, const std::filesystem::path& root);

inline constexpr std::string_view kSkipped = "skipped (digest match)";

struct StageRecord {
  std::string name;
  std::string status;  // ok | skipped (digest match) | failed
  double seconds = 0.0;
  std::string message;
  std::vector<std::string> artifacts;  // relative to the run directory
};

class RunManifest {
 public:
  static constexpr int kSchemaVersion = 1;

  std::string config_digest;
  std::uint64_t seed = 0;
  std::vector<StageRecord> stages;

  /// Replaces a stage of the same name or appends.
  void record(StageRecord stage);
  const StageRecord* find(std::string_view name) const;
  /// Artifacts listed by successful stages that are missing on disk.
  std::vector<std::string> missing_artifacts(const std::filesystem::path& run_dir) const;
  bool lists(std::string_view artifact) const;

  std::string to_text() const;
  static RunManifest from_text(std::string_view text);
  /// Starts empty when absent or written for another config.
  static RunManifest load_for(const std::filesystem::path& path, const ExperimentConfig& config);
  void write(const std::filesystem::path& path) const;
};

/// Trains and registers missing mentees, writes the split manifest, curates
/// train and test sets for every source and relabels test sets for the
/// extra mentees. Stages whose input digest matches are skipped.
void cmd_curate(const ExperimentConfig& config, const std::filesystem::path& root, std::ostream& log);

/// Trains every configured mentor. Missing curated data is kNotFound.
void cmd_train(const ExperimentConfig& config, const std::filesystem::path& root, std::ostream& log);

/// Reports for mentors and baselines, plus plot tables under tables/.
void cmd_eval(const ExperimentConfig& config, const std::filesystem::path& root, std::ostream& log);

/// Renders SVG figures from the run tables and from any extra report files.
void cmd_plot(const ExperimentConfig& config, const std::filesystem::path& root,
              const std::vector<std::filesystem::path>& report_paths, std::ostream& log);

/// Summary text for the run; also written to summary.txt. Fails with
/// kIntegrity if the manifest lists artifacts that are missing.
std::string cmd_report(const ExperimentConfig& config, const std::filesystem::path& root, std::ostream& log);

/// Column layout shared by the baseline comparison table.
inline constexpr const char* kTableColumns[] = {"ID", "SpN", "GaB", "Spat", "Sat", "PGD", "CW", "Jitter", "PIFGSM"};

/// One table row: per-column accuracy (first configured source of each kind)
/// and the report average.
std::vector<std::optional<double>> table_row(const EvaluationReport& report);

}  // namespace blindspot

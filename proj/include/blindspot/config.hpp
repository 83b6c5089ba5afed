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
#include <string>
#include <string_view>
#include <vector>

#include "blindspot/error_source.hpp"
#include "blindspot/mentor.hpp"

namespace blindspot {

struct DatasetConfig {
  std::string name = "gratings";
  std::string kind = "synthetic";  // synthetic | ppm
  std::string path;                // ppm: class-per-subdirectory folder
  int count = 2000;
  int num_classes = 6;
  int image_size = 16;
  double angle_jitter = 0.6;
  double pixel_noise = 0.15;
};

struct MenteeConfig {
  std::string id;
  std::string arch = "toy-cnn";
  int train_count = 3000;
  std::string train_path;  // ppm datasets only
  int epochs = 12;
  int batch_size = 32;
  double lr = 3e-3;
};

struct CurationConfig {
  std::vector<ErrorSource> sources;  // test and train sources
  bool severity_sweep = false;       // adds OOD-SpN-sweep1..4 test sets
  bool relabel = true;               // label test sets with every extra mentee
  int attack_batch = 64;
  std::string severity_table = "small";  // small | large
};

struct MentorConfig {
  std::string backbone = "toy-cnn";
  std::vector<ErrorSource> train_sources;
  bool joint = false;  // one mentor on the union of train_sources
  bool init_from_mentee = false;
  int epochs = 30;
  int batch_size = 32;
  double lr = 3e-3;
  double weight_decay = 0.01;
  double q = 1.0;
  double temperature = 1.0;
  LossMode loss_mode = LossMode::kStandard;
  std::vector<std::uint64_t> seeds;
  double threshold = 0.5;
};

struct EvalConfig {
  bool baselines = true;
  std::vector<double> landscape_magnitudes;
  std::uint64_t landscape_seed = 1;
  int embeddings_per_class = 50;
};

struct ExperimentConfig {
  std::string run_id;
  std::string preset;
  std::uint64_t seed = 0;
  DatasetConfig dataset;
  std::vector<MenteeConfig> mentees;  // first one is diagnosed, the rest relabel
  CurationConfig curation;
  MentorConfig mentor;
  EvalConfig eval;

  /// Canonical JSON of the resolved config (defaults, preset, file, overrides).
  std::string json;
  /// SHA-256 of `json`.
  std::string digest;

  const MenteeConfig& primary_mentee() const { return mentees.front(); }
  /// Mentor ids in training order.
  std::vector<std::string> mentor_ids() const;
  /// Train sources of a mentor id (all train sources for a joint mentor).
  std::vector<ErrorSource> mentor_train_sources(const std::string& mentor_id) const;
  std::uint64_t mentor_seed(const std::string& mentor_id) const;
};

/// Presets usable through "preset" in a config or an override.
std::vector<std::string> preset_names();

/// Resolves defaults <- preset <- document <- overrides and validates.
/// Overrides are "dot.path=value" with JSON values (bare words are strings).
/// Every problem is reported as kConfig naming the field and its domain.
ExperimentConfig parse_config(std::string_view json_text, const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Defaults as a JSON document (the config schema by example).
std::string default_config_json();

}  // namespace blindspot

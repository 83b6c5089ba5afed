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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "blindspot/baselines.hpp"
#include "blindspot/curation.hpp"
#include "blindspot/mentor.hpp"
#include "blindspot/types.hpp"

namespace blindspot {

/// Mean of the accuracies on the c_E = 1 and c_E = 0 subsets. Throws
/// kUndefined when either subset is empty.
double balanced_accuracy(std::span<const int> predictions, std::span<const int> labels);

/// Per-source balanced accuracy and the unweighted mean over defined
/// sources. One-class sources are excluded with a reason. Results are
/// ordered by source, so dataset order does not matter.
EvaluationReport evaluate(const Predictor& predictor, std::span<const CuratedDataset> datasets);

struct ConfusionGrid {
  std::vector<std::string> row_ids;          // predictor ids
  std::vector<ErrorSource> row_sources;      // training source of each row
  std::vector<ErrorSource> col_sources;      // test sources
  std::vector<std::vector<double>> values;   // NaN where undefined
  std::vector<double> row_means;             // over defined cells
};

/// grid[i][j] = balanced accuracy of row predictor i on test dataset j.
/// Every predictor must target the mentee that labeled the datasets.
ConfusionGrid confusion_grid(std::span<const std::pair<ErrorSource, const Predictor*>> rows,
                             std::span<const CuratedDataset> datasets);
std::string grid_to_tsv(const ConfusionGrid& grid);

/// Evaluates a mentor on datasets relabeled by another mentee. Throws
/// kNotFound if any dataset was not labeled by `other_mentee_id`.
EvaluationReport cross_mentee_eval(const MentorModel& mentor, std::span<const CuratedDataset> relabeled,
                                   const std::string& other_mentee_id);

struct ScatterPoint {
  std::string mentor_id;
  double same_mentee = 0.0;
  double cross_mentee = 0.0;
};
std::string scatter_to_tsv(std::span<const ScatterPoint> points);

struct LandscapeProfile {
  std::vector<double> magnitudes;
  std::vector<double> accuracies;
  std::uint64_t direction_seed = 0;
  std::string scheme = "tensor-normalized";
  std::string digest_before;
  std::string digest_after;
};

/// Average accuracy at weights + m * direction for each magnitude m, on a
/// private copy of the mentor. Non-finite evaluations record 0.
LandscapeProfile loss_landscape_probe(const MentorModel& mentor, std::span<const CuratedDataset> datasets,
                                      std::span<const double> magnitudes, std::uint64_t seed);
std::string landscape_to_tsv(const std::vector<std::pair<std::string, LandscapeProfile>>& profiles);

/// N1: wrong under both mentees; N2: wrong under A only; N3: wrong under B only.
struct Partition {
  std::vector<std::string> n1, n2, n3;
  std::size_t both_correct = 0;
};

Partition natural_adversarial_partition(std::span<const std::string> ids, std::span<const int> correct_a,
                                        std::span<const int> correct_b);
/// Datasets must hold the same ids in the same order.
Partition natural_adversarial_partition(const CuratedDataset& labeled_by_a, const CuratedDataset& labeled_by_b);

struct SetAccuracy {
  int hits = 0;
  int total = 0;

  std::optional<double> fraction() const;
  /// "1750/2225 (78.7%)", or "0/0 (–)" for an empty set.
  std::string format() const;
};

/// Plain accuracy of predictions against target bits.
SetAccuracy set_accuracy(std::span<const int> predictions, std::span<const int> targets);

/// Accuracy of the mentor on each of N1, N2, N3, with the target bit taken
/// from `dataset` (labeled by the mentor's mentee).
std::map<std::string, SetAccuracy> per_set_accuracy(const MentorModel& mentor, const Partition& sets,
                                                    const CuratedDataset& dataset);

struct EmbeddingRow {
  std::string original_id;
  int correctness = 0;
  std::vector<double> embedding;
};

/// Up to n_per_class seeded picks from each of c_E = 0 and c_E = 1; a class
/// with too few records contributes all it has and adds a warning.
std::vector<EmbeddingRow> export_embeddings(const MentorModel& mentor, const CuratedDataset& dataset, int n_per_class,
                                            std::uint64_t seed, std::vector<std::string>* warnings = nullptr);
std::string embeddings_to_tsv(std::span<const EmbeddingRow> rows);

}  // namespace blindspot

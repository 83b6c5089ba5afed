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
#include <span>
#include <string>
#include <vector>

#include "blindspot/corruptions.hpp"
#include "blindspot/image_source.hpp"
#include "blindspot/mentee.hpp"
#include "blindspot/types.hpp"

namespace blindspot {

/// Correctness-labeled records for one (dataset, mentee, source, split).
struct CuratedDataset {
  std::string dataset_name;
  std::string mentee_id;
  ErrorSource source;
  Split split = Split::kTrain;
  int num_classes = 0;
  std::vector<SampleRecord> records;
  std::vector<std::string> warnings;

  int n_correct() const;
  int n_wrong() const { return static_cast<int>(records.size()) - n_correct(); }
  std::vector<int> correctness_bits() const;
  std::vector<Image> images() const;
  nn::Tensor logits() const;

  /// SHA-256 over the record table and packed pixels.
  std::string content_digest() const;
  /// Throws kValidation if a record disagrees with the dataset fields or
  /// its c_E does not match its logits.
  void validate() const;
};

/// Seeded 70/30 partition. Ids are sorted before the shuffle, so input order
/// does not matter. Needs at least ten distinct ids.
SplitManifest split_dataset(std::span<const std::string> original_ids, std::uint64_t seed,
                            const std::string& dataset_name = "dataset");

/// Number of training ids for n ids: 70 percent, rounded half up.
std::size_t train_count(std::size_t n);

/// Seed for one image of one source; independent of batch order.
std::uint64_t sample_seed(std::uint64_t seed, const std::string& original_id, const ErrorSource& source);

struct CurationOptions {
  int attack_batch = 64;
  const SeverityTable* severities = nullptr;  // null: small-image table
};

/// Generates the source's images for every id in the split, runs the mentee
/// and labels correctness. Throws kValidation on an empty split.
CuratedDataset build_error_dataset(const SplitManifest& manifest, Split split, const ErrorSource& source,
                                   const ImagePool& pool, const Mentee& mentee, std::uint64_t seed,
                                   const CurationOptions& options = {});

/// Same images, logits and correctness recomputed with another mentee.
CuratedDataset relabel_dataset(const CuratedDataset& dataset, const Mentee& mentee);

/// Merges datasets of one split (joint training); records keep their own
/// sources and the merged dataset takes the first source.
CuratedDataset concat_datasets(std::span<const CuratedDataset> parts);

/// One epoch of index batches, each exactly half mentee-correct and half
/// mentee-wrong. The epoch has max(1, n / batch_size) batches; a class with
/// too few records is topped up by sampling with replacement. Throws
/// kValidation for an odd batch size and kEmptyClass if a class is absent.
std::vector<std::vector<int>> balanced_batches(const CuratedDataset& dataset, int batch_size, std::uint64_t seed);

// On-disk layout: {root}/{dataset}/{mentee_id}/{source_id}/{split}/ holding
//   records.csv  original_id,label,c_E,logit_0;logit_1;...
//   images.f32   packed float32 H x W x 3 pixels in record order
//   meta.txt     key=value (schema, counts, image size, input digest, warnings)
//   digest.txt   content digest
std::filesystem::path dataset_dir(const std::filesystem::path& root, const std::string& dataset,
                                  const std::string& mentee_id, const ErrorSource& source, Split split);

void write_dataset(const CuratedDataset& dataset, const std::filesystem::path& dir,
                   const std::string& input_digest = "");
/// kNotFound when absent, kIntegrity when the content digest disagrees.
CuratedDataset read_dataset(const std::filesystem::path& dir);
/// The input digest recorded at write time, or empty when absent.
std::string stored_input_digest(const std::filesystem::path& dir);

}  // namespace blindspot

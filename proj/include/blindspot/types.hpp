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

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blindspot/error_source.hpp"

namespace blindspot {

/// H x W x 3 image, interleaved channels, values in [0, 1]. Pixels are
/// float so that curated images persist losslessly.
struct Image {
  static constexpr int kChannels = 3;

  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int h, int w, float fill = 0.0f)
      : height(h), width(w), pixels(static_cast<std::size_t>(h) * w * kChannels, fill) {}

  std::size_t size() const { return pixels.size(); }
  float& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * kChannels + c]; }
  float at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * kChannels + c];
  }
  bool same_shape(const Image& o) const { return height == o.height && width == o.width; }

  bool operator==(const Image&) const = default;
};

enum class Split { kTrain, kTest };

std::string_view split_name(Split split);
Split parse_split(std::string_view name);

/// Index of the largest entry; ties go to the lowest index.
inline int argmax(std::span<const double> values) {
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

struct SampleRecord {
  std::string original_id;
  Image image;
  int label = 0;
  std::vector<double> mentee_logits;
  int correctness = 0;
  ErrorSource source;
  Split split = Split::kTrain;
};

/// Deterministic 70/30 partition over original-image ids.
struct SplitManifest {
  static constexpr int kTrainPercent = 70;

  std::string dataset_name;
  std::uint64_t seed = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;

  const std::vector<std::string>& ids(Split split) const {
    return split == Split::kTrain ? train_ids : test_ids;
  }
  bool operator==(const SplitManifest&) const = default;
};

struct SourceAccuracy {
  ErrorSource source;
  double balanced_accuracy = 0.0;
  int n_correct = 0;
  int n_wrong = 0;
};

struct ExcludedSource {
  ErrorSource source;
  std::string reason;
};

struct EvaluationReport {
  std::string mentor_id;
  std::string mentee_id;
  std::string tag = "standard";
  std::vector<SourceAccuracy> per_source;
  std::vector<ExcludedSource> excluded;
  double average = 0.0;
  std::uint64_t seed = 0;
  std::string timestamp;
  std::string config_digest;

  std::optional<double> accuracy(const ErrorSource& source) const {
    for (const auto& e : per_source) {
      if (e.source == source) return e.balanced_accuracy;
    }
    return std::nullopt;
  }

  /// Arithmetic mean of per_source; NaN when empty.
  double recompute_average() const;
};

}  // namespace blindspot

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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "blindspot/curation.hpp"
#include "blindspot/mentee.hpp"
#include "blindspot/mentor.hpp"

namespace blindspot {

/// Anything that guesses mentee correctness for every record of a dataset.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::string id() const = 0;
  /// Mentee whose errors the predictor targets; empty if mentee-agnostic.
  virtual std::string mentee_id() const { return ""; }
  virtual std::vector<int> predict(const CuratedDataset& dataset) const = 0;
};

class MentorPredictor : public Predictor {
 public:
  explicit MentorPredictor(const MentorModel& mentor, double threshold = 0.5)
      : mentor_(mentor), threshold_(threshold) {}
  std::string id() const override { return mentor_.id(); }
  std::string mentee_id() const override { return mentor_.mentee_id(); }
  std::vector<int> predict(const CuratedDataset& dataset) const override;

 private:
  const MentorModel& mentor_;
  double threshold_;
};

/// Seeded Bernoulli draws with P(1) = in_domain_accuracy.
std::vector<int> ser_predict(double in_domain_accuracy, std::uint64_t seed, std::size_t count);

/// 1 iff max softmax(z_E) > gamma.
int mcp_predict(std::span<const double> z_e, double gamma);
double max_class_probability(std::span<const double> z_e);

/// 1 iff entropy(softmax(z_E)) < cpe_alpha * ln K. kValidation for K < 2.
int cpe_predict(std::span<const double> z_e, double cpe_alpha);
double class_probability_entropy(std::span<const double> z_e);

/// Per-predicted-class mean features.
struct CentroidTable {
  int dim = 0;
  std::map<int, std::vector<double>> centroids;
  std::map<int, int> counts;

  bool has(int cls) const { return centroids.contains(cls); }
};

CentroidTable build_centroids(const nn::Tensor& features, std::span<const int> predicted);
CentroidTable build_centroids(const Mentee& mentee, std::span<const Image> images);

struct DtcResult {
  int bit = 0;
  double distance = 0.0;
  bool missing_centroid = false;
};

/// 1 iff ||feature - centroid(predicted)||_2 < d; a missing centroid gives 0.
DtcResult dtc_predict(std::span<const double> feature, int predicted, const CentroidTable& table, double d);

class SerPredictor : public Predictor {
 public:
  SerPredictor(double in_domain_accuracy, std::uint64_t seed) : accuracy_(in_domain_accuracy), seed_(seed) {}
  std::string id() const override;
  std::vector<int> predict(const CuratedDataset& dataset) const override;

 private:
  double accuracy_;
  std::uint64_t seed_;
};

class McpPredictor : public Predictor {
 public:
  explicit McpPredictor(double gamma) : gamma_(gamma) {}
  std::string id() const override;
  std::vector<int> predict(const CuratedDataset& dataset) const override;

 private:
  double gamma_;
};

class CpePredictor : public Predictor {
 public:
  explicit CpePredictor(double cpe_alpha) : alpha_(cpe_alpha) {}
  std::string id() const override;
  std::vector<int> predict(const CuratedDataset& dataset) const override;

 private:
  double alpha_;
};

/// Centroids are rebuilt per dataset (per source) from that dataset's own
/// images, keyed by the mentee's predicted class.
class DtcPredictor : public Predictor {
 public:
  DtcPredictor(const Mentee& mentee, double d) : mentee_(mentee), d_(d) {}
  std::string id() const override;
  std::string mentee_id() const override { return mentee_.id(); }
  std::vector<int> predict(const CuratedDataset& dataset) const override;
  /// Records with no centroid for their predicted class in the last call.
  int last_missing() const { return last_missing_; }

 private:
  const Mentee& mentee_;
  double d_;
  mutable int last_missing_ = 0;
};

inline constexpr double kMcpGammas[] = {0.5, 0.7, 0.9};
inline constexpr double kCpeAlphas[] = {0.01, 0.1, 0.3};
inline constexpr double kDtcDistances[] = {10.0, 20.0, 30.0};

}  // namespace blindspot

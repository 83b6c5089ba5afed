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

#include "blindspot/baselines.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "blindspot/error.hpp"
#include "blindspot/nn/autograd.hpp"
#include "blindspot/rng.hpp"

namespace blindspot {

std::vector<int> MentorPredictor::predict(const CuratedDataset& dataset) const {
  return mentor_predict(mentor_, dataset.images(), threshold_);
}

std::vector<int> ser_predict(double in_domain_accuracy, std::uint64_t seed, std::size_t count) {
  require(in_domain_accuracy >= 0.0 && in_domain_accuracy <= 1.0,
          fmt::format("in-domain accuracy {} outside [0, 1]", in_domain_accuracy));
  Rng rng(seed);
  std::vector<int> out(count);
  for (auto& b : out) b = rng.bernoulli(in_domain_accuracy) ? 1 : 0;
  return out;
}

double max_class_probability(std::span<const double> z_e) {
  const auto p = nn::softmax(z_e);
  return *std::max_element(p.begin(), p.end());
}

int mcp_predict(std::span<const double> z_e, double gamma) { return max_class_probability(z_e) > gamma ? 1 : 0; }

double class_probability_entropy(std::span<const double> z_e) {
  double h = 0.0;
  for (double p : nn::softmax(z_e)) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

int cpe_predict(std::span<const double> z_e, double cpe_alpha) {
  require(z_e.size() >= 2, "entropy threshold needs at least two classes");
  return class_probability_entropy(z_e) < cpe_alpha * std::log(static_cast<double>(z_e.size())) ? 1 : 0;
}

CentroidTable build_centroids(const nn::Tensor& features, std::span<const int> predicted) {
  require(features.rank() == 2 && static_cast<std::size_t>(features.dim(0)) == predicted.size(),
          "centroids need one predicted class per feature row");
  CentroidTable t;
  t.dim = features.dim(1);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    auto& c = t.centroids[predicted[i]];
    if (c.empty()) c.assign(t.dim, 0.0);
    const auto row = features.row(i);
    for (int j = 0; j < t.dim; ++j) c[j] += row[j];
    ++t.counts[predicted[i]];
  }
  for (auto& [cls, c] : t.centroids) {
    for (auto& v : c) v /= t.counts[cls];
  }
  return t;
}

CentroidTable build_centroids(const Mentee& mentee, std::span<const Image> images) {
  const nn::Tensor logits = mentee.predict_logits(images);
  std::vector<int> predicted;
  for (std::size_t i = 0; i < images.size(); ++i) predicted.push_back(argmax(logits.row(i)));
  return build_centroids(mentee.features(images), predicted);
}

DtcResult dtc_predict(std::span<const double> feature, int predicted, const CentroidTable& table, double d) {
  require(d > 0.0, fmt::format("distance threshold must be > 0, got {}", d));
  require(static_cast<int>(feature.size()) == table.dim,
          fmt::format("feature has {} dims, centroids {}", feature.size(), table.dim));
  DtcResult r;
  auto it = table.centroids.find(predicted);
  if (it == table.centroids.end()) {
    r.missing_centroid = true;
    r.distance = std::numeric_limits<double>::infinity();
    return r;
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < feature.size(); ++j) acc += (feature[j] - it->second[j]) * (feature[j] - it->second[j]);
  r.distance = std::sqrt(acc);
  r.bit = r.distance < d ? 1 : 0;
  return r;
}

std::string SerPredictor::id() const { return fmt::format("SER-{:.3f}", accuracy_); }

std::vector<int> SerPredictor::predict(const CuratedDataset& dataset) const {
  return ser_predict(accuracy_, mix_seed(seed_, dataset.source.id()), dataset.records.size());
}

std::string McpPredictor::id() const { return fmt::format("MCP-{}", gamma_); }

std::vector<int> McpPredictor::predict(const CuratedDataset& dataset) const {
  std::vector<int> out;
  for (const auto& r : dataset.records) out.push_back(mcp_predict(r.mentee_logits, gamma_));
  return out;
}

std::string CpePredictor::id() const { return fmt::format("CPE-{}", alpha_); }

std::vector<int> CpePredictor::predict(const CuratedDataset& dataset) const {
  std::vector<int> out;
  for (const auto& r : dataset.records) out.push_back(cpe_predict(r.mentee_logits, alpha_));
  return out;
}

std::string DtcPredictor::id() const { return fmt::format("DTC-{}", d_); }

std::vector<int> DtcPredictor::predict(const CuratedDataset& dataset) const {
  if (dataset.records.empty()) return {};
  require(dataset.mentee_id == mentee_.id(),
          fmt::format("DTC features come from mentee '{}' but the dataset is labeled by '{}'", mentee_.id(),
                      dataset.mentee_id));
  const auto images = dataset.images();
  const nn::Tensor features = mentee_.features(images);
  std::vector<int> predicted;
  for (const auto& r : dataset.records) predicted.push_back(argmax(r.mentee_logits));
  const CentroidTable table = build_centroids(features, predicted);
  std::vector<int> out;
  last_missing_ = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const auto res = dtc_predict(features.row(i), predicted[i], table, d_);
    last_missing_ += res.missing_centroid;
    out.push_back(res.bit);
  }
  return out;
}

}  // namespace blindspot

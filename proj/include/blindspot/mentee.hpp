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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blindspot/image_source.hpp"
#include "blindspot/nn/layers.hpp"
#include "blindspot/types.hpp"

namespace blindspot {

/// Packs HWC images into an NCHW batch tensor.
nn::Tensor to_nchw(std::span<const Image> images);
/// Unpacks item `index` of an NCHW tensor, rounding to float storage.
Image from_nchw(const nn::Tensor& batch, int index);

/// Frozen classifier under diagnosis. Implementations keep their own
/// pixel normalisation, so every input is an H x W x 3 image in [0, 1].
class Mentee {
 public:
  virtual ~Mentee() = default;

  virtual const std::string& id() const = 0;
  virtual int num_classes() const = 0;
  virtual int image_size() const = 0;
  virtual int feature_dim() const = 0;
  /// False for mentees whose logits cannot be differentiated w.r.t. pixels.
  virtual bool differentiable() const { return true; }

  /// Logits for an NCHW batch as a graph node, so gradients can reach the
  /// input. Parameters never require grad here.
  virtual nn::Var logits_graph(const nn::Var& images) const = 0;
  /// Penultimate features for an NCHW batch.
  virtual nn::Tensor features_nchw(const nn::Tensor& images) const = 0;
  virtual std::string weight_digest() const = 0;

  /// [N, K] logits, no softmax. Throws kValidation on a size mismatch.
  nn::Tensor predict_logits(std::span<const Image> images) const;
  nn::Tensor features(std::span<const Image> images) const;

 protected:
  void check_images(std::span<const Image> images) const;
};

/// 1 iff argmax(logits) == label, ties to the lowest index.
int correctness(std::span<const double> logits, int label);

/// logits = flatten(x) W + b on NCHW-flattened pixels. Its features are the
/// flattened pixels.
class LinearMentee : public Mentee {
 public:
  LinearMentee(std::string id, int image_size, nn::Tensor weight, nn::Tensor bias);

  const std::string& id() const override { return id_; }
  int num_classes() const override { return weight_.value().dim(1); }
  int image_size() const override { return image_size_; }
  int feature_dim() const override { return weight_.value().dim(0); }
  nn::Var logits_graph(const nn::Var& images) const override;
  nn::Tensor features_nchw(const nn::Tensor& images) const override;
  std::string weight_digest() const override;

 private:
  std::string id_;
  int image_size_;
  nn::Var weight_;
  nn::Var bias_;
};

/// Toy backbone plus a linear classifier.
class ToyMentee : public Mentee {
 public:
  ToyMentee(std::string id, const nn::BackboneSpec& spec, int num_classes, Rng& rng);

  const std::string& id() const override { return id_; }
  int num_classes() const override { return num_classes_; }
  int image_size() const override { return backbone_.spec().image_size; }
  int feature_dim() const override { return backbone_.feature_dim(); }
  nn::Var logits_graph(const nn::Var& images) const override;
  nn::Tensor features_nchw(const nn::Tensor& images) const override;
  std::string weight_digest() const override;

  const nn::BackboneSpec& spec() const { return backbone_.spec(); }
  nn::ParamRefs params();
  void set_frozen(bool frozen);

 private:
  std::string id_;
  int num_classes_;
  nn::Backbone backbone_;
  nn::Linear classifier_;
};

struct MenteeTrainOptions {
  int epochs = 12;
  int batch_size = 32;
  double lr = 3e-3;
  double weight_decay = 1e-4;
};

struct TrainedMentee {
  std::unique_ptr<ToyMentee> model;
  double train_accuracy = 0.0;
  double clean_accuracy = 0.0;  // on the held-out pool
};

/// Trains a toy reference mentee on `train`, scoring clean accuracy on
/// `held_out`. The returned model is frozen.
TrainedMentee train_reference_mentee(const std::string& id, const ImagePool& train, const ImagePool& held_out,
                                     const nn::BackboneSpec& spec, const MenteeTrainOptions& options,
                                     std::uint64_t seed);

/// Plain accuracy of the mentee on a pool.
double clean_accuracy(const Mentee& mentee, const ImagePool& pool);

// Registry: a JSON document
//   {"mentees": {"<id>": {"weights": "<path relative to registry>",
//                         "digest": "<weight digest>", "arch": "toy-cnn",
//                         "num_classes": 4, "image_size": 16, "seed": 1,
//                         "clean_accuracy": 0.9, "dataset": "gratings"}}}
struct MenteeEntry {
  std::string id;
  std::string weights;  // relative to the registry file, may be empty for metadata-only entries
  std::string digest;
  std::string arch;
  std::string dataset;
  int num_classes = 0;
  int image_size = 0;
  std::uint64_t seed = 0;
  double clean_accuracy = 0.0;
};

class MenteeRegistry {
 public:
  static MenteeRegistry read(const std::filesystem::path& path);  // empty when absent
  void write(const std::filesystem::path& path) const;

  std::optional<MenteeEntry> find(const std::string& id) const;
  void put(const MenteeEntry& entry);
  const std::vector<MenteeEntry>& entries() const { return entries_; }

 private:
  std::vector<MenteeEntry> entries_;
};

/// Full-scale mentees, recorded as metadata only (clean accuracy in percent
/// on CIFAR-10, CIFAR-100, ImageNet).
std::vector<MenteeEntry> published_mentees();

/// Saves weights plus sidecar and records the entry in the registry.
MenteeEntry register_mentee(ToyMentee& mentee, const std::filesystem::path& registry_path,
                            const std::string& dataset, std::uint64_t seed, double accuracy);

/// Loads a registered toy mentee. kNotFound for unknown ids or missing
/// weights, kIntegrity on digest mismatch.
std::unique_ptr<ToyMentee> load_mentee(const std::filesystem::path& registry_path, const std::string& id);

}  // namespace blindspot

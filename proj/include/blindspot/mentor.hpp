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
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blindspot/curation.hpp"
#include "blindspot/mentee.hpp"
#include "blindspot/nn/layers.hpp"

namespace blindspot {

struct MentorSpec {
  nn::BackboneSpec backbone;
  int num_classes = 0;
  /// Hidden width of both heads; 0 means the backbone feature width.
  int head_hidden = 0;

  int resolved_hidden() const { return head_hidden > 0 ? head_hidden : backbone.output_dim(); }
};

struct MentorOutput {
  nn::Var z_r;        // [N, K] class logits
  nn::Var z_p;        // [N] correctness probability in (0, 1)
  nn::Var embedding;  // [N, hidden] stream P penultimate activation
};

/// Shared backbone feeding two disjoint two-layer heads: stream R
/// (distillation, K logits) and stream P (sigmoid correctness probability).
class MentorModel {
 public:
  MentorModel(std::string id, const MentorSpec& spec, std::uint64_t seed);
  /// Deep copy with private parameters.
  MentorModel clone() const;

  const std::string& id() const { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }
  const MentorSpec& spec() const { return spec_; }
  /// Mentee whose errors this mentor was trained on.
  const std::string& mentee_id() const { return mentee_id_; }
  void set_mentee_id(std::string id) { mentee_id_ = std::move(id); }

  MentorOutput forward(const nn::Var& images) const;
  MentorOutput forward(std::span<const Image> images) const;

  nn::ParamRefs params();
  nn::ParamRefs backbone_params();
  nn::ParamRefs stream_r_params();
  nn::ParamRefs stream_p_params();
  std::string weight_digest() const;

  /// Batched z_p in eval mode.
  std::vector<double> predict_probs(std::span<const Image> images) const;
  /// Batched stream P embeddings, [N, hidden].
  nn::Tensor embeddings(std::span<const Image> images) const;

  /// Copies backbone tensors named "backbone.*" from a weights file, such as
  /// a mentee checkpoint of the same architecture.
  void init_backbone(const std::filesystem::path& weights);

 private:
  MentorModel(std::string id, const MentorSpec& spec, Rng&& rng);

  std::string id_;
  std::string mentee_id_;
  MentorSpec spec_;
  nn::Backbone backbone_;
  nn::MlpHead stream_r_;
  nn::MlpHead stream_p_;
};

/// T^2 * KL(softmax(z_E / T) || softmax(z_R / T)), batch mean, gradient to z_R only.
nn::Var distillation_loss(const nn::Var& z_r, const nn::Tensor& z_e, double temperature = 1.0);
double distillation_loss(std::span<const double> z_r, std::span<const double> z_e, double temperature = 1.0);

/// Batch-mean BCE with z_p clamped to [1e-7, 1 - 1e-7]. kValidation for bits
/// outside {0, 1}.
nn::Var correctness_loss(const nn::Var& z_p, std::span<const int> c_e);
double correctness_loss(double z_p, int c_e);

/// (n / N)^q. kValidation unless 0 <= n <= N, N >= 1, q > 0.
double schedule_alpha(int n, int total, double q);

nn::Var total_loss(const nn::Var& l_r, const nn::Var& l_d, double alpha);
double total_loss(double l_r, double l_d, double alpha);

enum class LossMode {
  kStandard,
  kNoDistillation,  // alpha forced to 1
  kArgmaxCe,        // L_d replaced by cross entropy against argmax z_E
};

std::string_view loss_mode_name(LossMode mode);
LossMode parse_loss_mode(std::string_view name);

struct MentorTrainOptions {
  int epochs = 30;
  int batch_size = 32;
  double lr = 1e-4;
  double weight_decay = 0.01;
  double q = 1.0;
  double temperature = 1.0;
  LossMode loss_mode = LossMode::kStandard;
  std::uint64_t seed = 0;
  /// Keep every batch's loss terms (for decomposition checks).
  bool record_batches = false;
};

/// Paper default initial learning rate for a backbone family.
double default_mentor_lr(nn::BackboneKind kind);

struct BatchLoss {
  int epoch = 0;
  double alpha = 0.0;
  double loss = 0.0;
  double loss_r = 0.0;
  double loss_d = 0.0;
};

struct EpochLoss {
  int epoch = 0;
  double alpha = 0.0;
  double lr = 0.0;
  double loss = 0.0;  // batch means
  double loss_r = 0.0;
  double loss_d = 0.0;
};

struct TrainHistory {
  std::vector<EpochLoss> epochs;
  std::vector<BatchLoss> batches;
  std::string mentee_digest_before;
  std::string mentee_digest_after;
};

/// Trains in place over epochs 0..N-1 with balanced batches. A non-finite
/// loss aborts with kNonFinite. When `mentee` is given its digest is checked
/// before and after (kIntegrity if it changed).
TrainHistory train_mentor(MentorModel& mentor, const CuratedDataset& train, const MentorTrainOptions& options,
                          const Mentee* mentee = nullptr);

/// c_R = [z_p >= threshold].
std::vector<int> mentor_predict(const MentorModel& mentor, std::span<const Image> images, double threshold = 0.5);
int threshold_bit(double z_p, double threshold = 0.5);

/// Weights file with the spec and metadata in its header; history goes to
/// "<file>.history.tsv".
void save_mentor(MentorModel& mentor, const std::filesystem::path& path,
                 const std::map<std::string, std::string>& metadata, const TrainHistory* history = nullptr);
MentorModel load_mentor(const std::filesystem::path& path, std::map<std::string, std::string>* metadata = nullptr);
std::filesystem::path history_sidecar(const std::filesystem::path& weights);

}  // namespace blindspot

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

#include "blindspot/mentor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "blindspot/error.hpp"
#include "blindspot/nn/optim.hpp"
#include "blindspot/nn/weights_io.hpp"
#include "blindspot/persistence.hpp"

namespace blindspot {
namespace {

constexpr std::size_t kInferenceChunk = 256;

nn::Backbone make_backbone(const MentorSpec& spec, Rng& rng) {
  require(spec.num_classes >= 2, "mentor needs at least two classes");
  return nn::Backbone(spec.backbone, rng);
}

}  // namespace

MentorModel::MentorModel(std::string id, const MentorSpec& spec, std::uint64_t seed)
    : MentorModel(std::move(id), spec, Rng(mix_seed(seed, "mentor-init"))) {}

MentorModel::MentorModel(std::string id, const MentorSpec& spec, Rng&& rng)
    : id_(std::move(id)),
      spec_(spec),
      backbone_(make_backbone(spec, rng)),
      stream_r_(spec.backbone.output_dim(), spec.resolved_hidden(), spec.num_classes, rng),
      stream_p_(spec.backbone.output_dim(), spec.resolved_hidden(), 1, rng) {}

MentorModel MentorModel::clone() const {
  MentorModel copy = *this;
  nn::detach_params(copy.params());
  return copy;
}

MentorOutput MentorModel::forward(const nn::Var& images) const {
  const nn::Var features = backbone_.forward(images);
  MentorOutput out;
  out.z_r = stream_r_.forward(features);
  out.embedding = stream_p_.hidden(features);
  const nn::Var logit = stream_p_.output_from_hidden(out.embedding);
  out.z_p = nn::sigmoid(nn::reshape(logit, {logit.shape()[0]}));
  return out;
}

MentorOutput MentorModel::forward(std::span<const Image> images) const {
  for (const auto& img : images) {
    if (img.height != spec_.backbone.image_size || img.width != spec_.backbone.image_size) {
      fail(ErrorCode::kValidation, fmt::format("mentor '{}' expects {}x{} images, got {}x{}", id_,
                                               spec_.backbone.image_size, spec_.backbone.image_size, img.height,
                                               img.width));
    }
  }
  return forward(nn::Var(to_nchw(images)));
}

nn::ParamRefs MentorModel::backbone_params() {
  nn::ParamRefs out;
  backbone_.collect("backbone", out);
  return out;
}

nn::ParamRefs MentorModel::stream_r_params() {
  nn::ParamRefs out;
  stream_r_.collect("stream_r", out);
  return out;
}

nn::ParamRefs MentorModel::stream_p_params() {
  nn::ParamRefs out;
  stream_p_.collect("stream_p", out);
  return out;
}

nn::ParamRefs MentorModel::params() {
  nn::ParamRefs out = backbone_params();
  for (auto& p : stream_r_params()) out.push_back(p);
  for (auto& p : stream_p_params()) out.push_back(p);
  return out;
}

std::string MentorModel::weight_digest() const { return nn::weight_digest(const_cast<MentorModel*>(this)->params()); }

std::vector<double> MentorModel::predict_probs(std::span<const Image> images) const {
  std::vector<double> out;
  out.reserve(images.size());
  for (std::size_t start = 0; start < images.size(); start += kInferenceChunk) {
    const auto chunk = images.subspan(start, std::min(kInferenceChunk, images.size() - start));
    const auto res = forward(chunk);
    out.insert(out.end(), res.z_p.value().values().begin(), res.z_p.value().values().end());
  }
  return out;
}

nn::Tensor MentorModel::embeddings(std::span<const Image> images) const {
  const int width = spec_.resolved_hidden();
  nn::Tensor out({static_cast<int>(images.size()), width});
  for (std::size_t start = 0; start < images.size(); start += kInferenceChunk) {
    const auto chunk = images.subspan(start, std::min(kInferenceChunk, images.size() - start));
    const auto res = forward(chunk);
    std::copy(res.embedding.value().values().begin(), res.embedding.value().values().end(),
              out.data() + start * width);
  }
  return out;
}

void MentorModel::init_backbone(const std::filesystem::path& weights) {
  nn::assign_params(backbone_params(), nn::load_weights(weights));
}

nn::Var distillation_loss(const nn::Var& z_r, const nn::Tensor& z_e, double temperature) {
  require(z_r.shape() == z_e.shape(), fmt::format("distillation needs equal logit shapes, got {} and {}",
                                                  nn::shape_string(z_r.shape()), nn::shape_string(z_e.shape())));
  require(temperature > 0.0, "temperature must be > 0");
  return nn::distillation_kl(z_r, z_e, temperature);
}

double distillation_loss(std::span<const double> z_r, std::span<const double> z_e, double temperature) {
  require(z_r.size() == z_e.size(), fmt::format("logit lengths differ: {} vs {}", z_r.size(), z_e.size()));
  const int k = static_cast<int>(z_r.size());
  nn::Var r(nn::Tensor({1, k}, std::vector<double>(z_r.begin(), z_r.end())));
  return distillation_loss(r, nn::Tensor({1, k}, std::vector<double>(z_e.begin(), z_e.end())), temperature)
      .value()[0];
}

nn::Var correctness_loss(const nn::Var& z_p, std::span<const int> c_e) {
  for (int c : c_e) require(c == 0 || c == 1, fmt::format("correctness label must be 0 or 1, got {}", c));
  return nn::binary_cross_entropy(z_p, c_e);
}

double correctness_loss(double z_p, int c_e) {
  return correctness_loss(nn::Var(nn::Tensor({1}, z_p)), std::span(&c_e, 1)).value()[0];
}

double schedule_alpha(int n, int total, double q) {
  require(q > 0.0, fmt::format("q must be > 0, got {}", q));
  require(total >= 1, fmt::format("epoch count must be >= 1, got {}", total));
  require(n >= 0 && n <= total, fmt::format("epoch {} outside 0..{}", n, total));
  return std::pow(static_cast<double>(n) / total, q);
}

nn::Var total_loss(const nn::Var& l_r, const nn::Var& l_d, double alpha) {
  require(alpha >= 0.0 && alpha <= 1.0, fmt::format("alpha {} outside [0, 1]", alpha));
  if (alpha == 1.0) return l_r;
  if (alpha == 0.0) return l_d;
  return nn::add(nn::scale(l_r, alpha), nn::scale(l_d, 1.0 - alpha));
}

double total_loss(double l_r, double l_d, double alpha) {
  require(alpha >= 0.0 && alpha <= 1.0, fmt::format("alpha {} outside [0, 1]", alpha));
  if (alpha == 1.0) return l_r;
  if (alpha == 0.0) return l_d;
  return alpha * l_r + (1.0 - alpha) * l_d;
}

std::string_view loss_mode_name(LossMode mode) {
  switch (mode) {
    case LossMode::kStandard: return "standard";
    case LossMode::kNoDistillation: return "no-Ld";
    case LossMode::kArgmaxCe: return "La-replace";
  }
  return "?";
}

LossMode parse_loss_mode(std::string_view name) {
  for (auto m : {LossMode::kStandard, LossMode::kNoDistillation, LossMode::kArgmaxCe}) {
    if (loss_mode_name(m) == name) return m;
  }
  fail(ErrorCode::kValidation, fmt::format("unknown loss mode '{}' (standard, no-Ld, La-replace)", name));
}

double default_mentor_lr(nn::BackboneKind kind) { return kind == nn::BackboneKind::kToyAttention ? 3e-5 : 1e-4; }

TrainHistory train_mentor(MentorModel& mentor, const CuratedDataset& train, const MentorTrainOptions& o,
                          const Mentee* mentee) {
  require(o.epochs >= 1, fmt::format("epochs must be >= 1, got {}", o.epochs));
  require(o.q > 0.0, fmt::format("q must be > 0, got {}", o.q));
  require(o.lr > 0.0, "learning rate must be > 0");
  require(train.num_classes == mentor.spec().num_classes,
          fmt::format("dataset has {} classes, mentor {}", train.num_classes, mentor.spec().num_classes));
  TrainHistory history;
  if (mentee) history.mentee_digest_before = mentee->weight_digest();
  nn::AdamW opt(mentor.params(), {.lr = o.lr, .weight_decay = o.weight_decay});
  const int k = train.num_classes;
  for (int epoch = 0; epoch < o.epochs; ++epoch) {
    const double lr = nn::cosine_lr(o.lr, epoch, o.epochs);
    opt.set_lr(lr);
    const double alpha = o.loss_mode == LossMode::kNoDistillation ? 1.0 : schedule_alpha(epoch, o.epochs, o.q);
    const auto batches = balanced_batches(train, o.batch_size, mix_seed(o.seed, static_cast<std::uint64_t>(epoch)));
    EpochLoss stats{.epoch = epoch, .alpha = alpha, .lr = lr};
    for (const auto& batch : batches) {
      std::vector<Image> images;
      std::vector<int> bits, targets;
      nn::Tensor z_e({static_cast<int>(batch.size()), k});
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& r = train.records[batch[i]];
        images.push_back(r.image);
        bits.push_back(r.correctness);
        targets.push_back(argmax(r.mentee_logits));
        std::copy(r.mentee_logits.begin(), r.mentee_logits.end(), z_e.data() + i * k);
      }
      const auto out = mentor.forward(images);
      const nn::Var l_r = correctness_loss(out.z_p, bits);
      const nn::Var l_d = o.loss_mode == LossMode::kArgmaxCe ? nn::cross_entropy(out.z_r, targets)
                                                              : distillation_loss(out.z_r, z_e, o.temperature);
      nn::Var loss = total_loss(l_r, l_d, alpha);
      const double lv = loss.value()[0];
      if (!std::isfinite(lv)) {
        fail(ErrorCode::kNonFinite, fmt::format("non-finite mentor loss at epoch {} (L_r={}, L_d={}, alpha={})", epoch,
                                                l_r.value()[0], l_d.value()[0], alpha));
      }
      opt.zero_grad();
      loss.backward();
      opt.step();
      stats.loss += lv;
      stats.loss_r += l_r.value()[0];
      stats.loss_d += l_d.value()[0];
      if (o.record_batches) history.batches.push_back({epoch, alpha, lv, l_r.value()[0], l_d.value()[0]});
    }
    const double nb = static_cast<double>(batches.size());
    stats.loss /= nb;
    stats.loss_r /= nb;
    stats.loss_d /= nb;
    history.epochs.push_back(stats);
  }
  mentor.set_mentee_id(train.mentee_id);
  if (mentee) {
    history.mentee_digest_after = mentee->weight_digest();
    if (history.mentee_digest_after != history.mentee_digest_before) {
      fail(ErrorCode::kIntegrity, fmt::format("mentee '{}' weights changed during mentor training", mentee->id()));
    }
  }
  return history;
}

int threshold_bit(double z_p, double threshold) { return z_p >= threshold ? 1 : 0; }

std::vector<int> mentor_predict(const MentorModel& mentor, std::span<const Image> images, double threshold) {
  const auto probs = mentor.predict_probs(images);
  std::vector<int> out;
  out.reserve(probs.size());
  for (double p : probs) out.push_back(threshold_bit(p, threshold));
  return out;
}

std::filesystem::path history_sidecar(const std::filesystem::path& weights) {
  auto p = weights;
  p += ".history.tsv";
  return p;
}

void save_mentor(MentorModel& mentor, const std::filesystem::path& path,
                 const std::map<std::string, std::string>& metadata, const TrainHistory* history) {
  const auto& s = mentor.spec();
  std::map<std::string, std::string> header = metadata;
  header["kind"] = "mentor";
  header["mentor_id"] = mentor.id();
  header["mentee_id"] = mentor.mentee_id();
  header["arch"] = std::string(nn::backbone_name(s.backbone.kind));
  header["image_size"] = std::to_string(s.backbone.image_size);
  header["conv1_channels"] = std::to_string(s.backbone.conv1_channels);
  header["conv2_channels"] = std::to_string(s.backbone.conv2_channels);
  header["feature_dim"] = std::to_string(s.backbone.feature_dim);
  header["patch"] = std::to_string(s.backbone.patch);
  header["embed_dim"] = std::to_string(s.backbone.embed_dim);
  header["num_classes"] = std::to_string(s.num_classes);
  header["head_hidden"] = std::to_string(s.head_hidden);
  nn::save_weights(path, header, mentor.params());
  if (history) {
    std::string text = "epoch\talpha\tlr\tloss\tloss_r\tloss_d\n";
    for (const auto& e : history->epochs) {
      text += fmt::format("{}\t{:.17g}\t{:.17g}\t{:.17g}\t{:.17g}\t{:.17g}\n", e.epoch, e.alpha, e.lr, e.loss, e.loss_r,
                          e.loss_d);
    }
    write_text_file(history_sidecar(path), text);
  }
}

MentorModel load_mentor(const std::filesystem::path& path, std::map<std::string, std::string>* metadata) {
  const nn::WeightFile wf = nn::load_weights(path);
  if (wf.header.count("kind") == 0 || wf.get("kind") != "mentor") {
    fail(ErrorCode::kIntegrity, fmt::format("'{}' is not a mentor checkpoint", path.string()));
  }
  MentorSpec spec;
  try {
    spec.backbone.kind = nn::parse_backbone(wf.get("arch"));
    spec.backbone.image_size = std::stoi(wf.get("image_size"));
    spec.backbone.conv1_channels = std::stoi(wf.get("conv1_channels"));
    spec.backbone.conv2_channels = std::stoi(wf.get("conv2_channels"));
    spec.backbone.feature_dim = std::stoi(wf.get("feature_dim"));
    spec.backbone.patch = std::stoi(wf.get("patch"));
    spec.backbone.embed_dim = std::stoi(wf.get("embed_dim"));
    spec.num_classes = std::stoi(wf.get("num_classes"));
    spec.head_hidden = std::stoi(wf.get("head_hidden"));
  } catch (const std::logic_error&) {
    fail(ErrorCode::kIntegrity, fmt::format("mentor checkpoint '{}' has a malformed header", path.string()));
  }
  MentorModel mentor(wf.get("mentor_id"), spec, 0);
  mentor.set_mentee_id(wf.get("mentee_id"));
  nn::assign_params(mentor.params(), wf);
  if (metadata) *metadata = wf.header;
  return mentor;
}

}  // namespace blindspot

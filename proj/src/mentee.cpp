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

#include "blindspot/mentee.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>
#include <json.hpp>

#include "blindspot/digest.hpp"
#include "blindspot/error.hpp"
#include "blindspot/nn/optim.hpp"
#include "blindspot/nn/weights_io.hpp"
#include "blindspot/persistence.hpp"

namespace blindspot {
namespace {

constexpr std::size_t kInferenceChunk = 256;

std::string digest_of(const nn::ParamRefs& params) { return nn::weight_digest(params); }

}  // namespace

nn::Tensor to_nchw(std::span<const Image> images) {
  require(!images.empty(), "empty image batch");
  const int h = images.front().height, w = images.front().width;
  nn::Tensor out({static_cast<int>(images.size()), Image::kChannels, h, w});
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (std::size_t n = 0; n < images.size(); ++n) {
    const Image& img = images[n];
    require(img.height == h && img.width == w, "images in a batch must share one size");
    double* dst = out.data() + n * plane * Image::kChannels;
    for (std::size_t i = 0; i < plane; ++i) {
      for (int c = 0; c < Image::kChannels; ++c) dst[c * plane + i] = img.pixels[i * Image::kChannels + c];
    }
  }
  return out;
}

Image from_nchw(const nn::Tensor& batch, int index) {
  const int h = batch.dim(2), w = batch.dim(3);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  Image img(h, w);
  const double* src = batch.data() + index * plane * Image::kChannels;
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < Image::kChannels; ++c) img.pixels[i * Image::kChannels + c] = static_cast<float>(src[c * plane + i]);
  }
  return img;
}

void Mentee::check_images(std::span<const Image> images) const {
  for (const auto& img : images) {
    if (img.height != image_size() || img.width != image_size()) {
      fail(ErrorCode::kValidation, fmt::format("mentee '{}' expects {}x{} images, got {}x{}", id(), image_size(),
                                               image_size(), img.height, img.width));
    }
  }
}

nn::Tensor Mentee::predict_logits(std::span<const Image> images) const {
  check_images(images);
  nn::Tensor out({static_cast<int>(images.size()), num_classes()});
  for (std::size_t start = 0; start < images.size(); start += kInferenceChunk) {
    const auto chunk = images.subspan(start, std::min(kInferenceChunk, images.size() - start));
    const nn::Var logits = logits_graph(nn::Var(to_nchw(chunk)));
    std::copy(logits.value().values().begin(), logits.value().values().end(), out.data() + start * num_classes());
  }
  return out;
}

nn::Tensor Mentee::features(std::span<const Image> images) const {
  check_images(images);
  nn::Tensor out({static_cast<int>(images.size()), feature_dim()});
  for (std::size_t start = 0; start < images.size(); start += kInferenceChunk) {
    const auto chunk = images.subspan(start, std::min(kInferenceChunk, images.size() - start));
    const nn::Tensor f = features_nchw(to_nchw(chunk));
    std::copy(f.values().begin(), f.values().end(), out.data() + start * feature_dim());
  }
  return out;
}

int correctness(std::span<const double> logits, int label) {
  require(!logits.empty(), "empty logits");
  require(label >= 0 && label < static_cast<int>(logits.size()),
          fmt::format("label {} outside 0..{}", label, logits.size() - 1));
  return argmax(logits) == label ? 1 : 0;
}

LinearMentee::LinearMentee(std::string id, int image_size, nn::Tensor weight, nn::Tensor bias)
    : id_(std::move(id)), image_size_(image_size), weight_(std::move(weight)), bias_(std::move(bias)) {
  require(weight_.value().rank() == 2 && weight_.value().dim(0) == 3 * image_size * image_size,
          "linear mentee weight must be [3*S*S, K]");
  require(bias_.value().rank() == 1 && bias_.value().dim(0) == weight_.value().dim(1),
          "linear mentee bias must be [K]");
}

nn::Var LinearMentee::logits_graph(const nn::Var& images) const {
  return nn::add_bias(nn::matmul(nn::flatten(images), weight_), bias_);
}

nn::Tensor LinearMentee::features_nchw(const nn::Tensor& images) const {
  return images.reshaped({images.dim(0), static_cast<int>(images.size()) / images.dim(0)});
}

std::string LinearMentee::weight_digest() const {
  nn::Var w = weight_, b = bias_;
  return digest_of({{"weight", &w}, {"bias", &b}});
}

ToyMentee::ToyMentee(std::string id, const nn::BackboneSpec& spec, int num_classes, Rng& rng)
    : id_(std::move(id)), num_classes_(num_classes), backbone_(spec, rng),
      classifier_(spec.output_dim(), num_classes, rng) {
  require(num_classes >= 2, "a mentee needs at least two classes");
}

nn::Var ToyMentee::logits_graph(const nn::Var& images) const {
  return classifier_.forward(backbone_.forward(images));
}

nn::Tensor ToyMentee::features_nchw(const nn::Tensor& images) const {
  return backbone_.forward(nn::Var(images)).value();
}

nn::ParamRefs ToyMentee::params() {
  nn::ParamRefs out;
  backbone_.collect("backbone", out);
  classifier_.collect("classifier", out);
  return out;
}

std::string ToyMentee::weight_digest() const { return digest_of(const_cast<ToyMentee*>(this)->params()); }

void ToyMentee::set_frozen(bool frozen) { nn::set_trainable(params(), !frozen); }

double clean_accuracy(const Mentee& mentee, const ImagePool& pool) {
  if (pool.size() == 0) return 0.0;
  std::vector<Image> images;
  for (const auto& it : pool.items()) images.push_back(it.image);
  const nn::Tensor logits = mentee.predict_logits(images);
  int hits = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) hits += correctness(logits.row(i), pool.items()[i].label);
  return static_cast<double>(hits) / pool.size();
}

TrainedMentee train_reference_mentee(const std::string& id, const ImagePool& train, const ImagePool& held_out,
                                     const nn::BackboneSpec& spec, const MenteeTrainOptions& options,
                                     std::uint64_t seed) {
  require(train.size() >= 2, "mentee training needs images");
  require(options.epochs >= 1 && options.batch_size >= 1, "mentee epochs and batch size must be positive");
  Rng init_rng(mix_seed(seed, "mentee-init"));
  TrainedMentee out;
  out.model = std::make_unique<ToyMentee>(id, spec, train.num_classes(), init_rng);
  ToyMentee& model = *out.model;
  nn::AdamW opt(model.params(), {.lr = options.lr, .weight_decay = options.weight_decay});
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    opt.set_lr(nn::cosine_lr(options.lr, epoch, options.epochs));
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      std::vector<Image> images;
      std::vector<int> labels;
      for (std::size_t i = start; i < end; ++i) {
        images.push_back(train.items()[order[i]].image);
        labels.push_back(train.items()[order[i]].label);
      }
      opt.zero_grad();
      nn::Var loss = nn::cross_entropy(model.logits_graph(nn::Var(to_nchw(images))), labels);
      loss.backward();
      opt.step();
    }
  }
  model.set_frozen(true);
  out.train_accuracy = clean_accuracy(model, train);
  out.clean_accuracy = clean_accuracy(model, held_out);
  return out;
}

MenteeRegistry MenteeRegistry::read(const std::filesystem::path& path) {
  MenteeRegistry reg;
  if (!std::filesystem::exists(path)) return reg;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
    for (const auto& [key, v] : doc.at("mentees").items()) {
      MenteeEntry e;
      e.id = key;
      e.weights = v.value("weights", "");
      e.digest = v.value("digest", "");
      e.arch = v.value("arch", "");
      e.dataset = v.value("dataset", "");
      e.num_classes = v.value("num_classes", 0);
      e.image_size = v.value("image_size", 0);
      e.seed = v.value("seed", std::uint64_t{0});
      e.clean_accuracy = v.value("clean_accuracy", 0.0);
      reg.entries_.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorCode::kSchema, fmt::format("malformed mentee registry '{}': {}", path.string(), ex.what()));
  }
  return reg;
}

void MenteeRegistry::write(const std::filesystem::path& path) const {
  nlohmann::json doc;
  doc["mentees"] = nlohmann::json::object();
  for (const auto& e : entries_) {
    doc["mentees"][e.id] = {{"weights", e.weights},         {"digest", e.digest},   {"arch", e.arch},
                            {"dataset", e.dataset},         {"num_classes", e.num_classes},
                            {"image_size", e.image_size},   {"seed", e.seed},
                            {"clean_accuracy", e.clean_accuracy}};
  }
  write_text_file(path, doc.dump(2) + "\n");
}

std::optional<MenteeEntry> MenteeRegistry::find(const std::string& id) const {
  for (const auto& e : entries_) {
    if (e.id == id) return e;
  }
  return std::nullopt;
}

void MenteeRegistry::put(const MenteeEntry& entry) {
  for (auto& e : entries_) {
    if (e.id == entry.id) {
      e = entry;
      return;
    }
  }
  entries_.push_back(entry);
}

std::vector<MenteeEntry> published_mentees() {
  std::vector<MenteeEntry> out;
  const struct {
    const char* arch;
    const char* dataset;
    double acc;
  } rows[] = {{"resnet50", "cifar10", 96.98}, {"resnet50", "cifar100", 84.54}, {"resnet50", "imagenet", 76.13},
              {"vit", "cifar10", 97.45},      {"vit", "cifar100", 86.51},      {"vit", "imagenet", 81.07}};
  for (const auto& r : rows) {
    MenteeEntry e;
    e.id = fmt::format("{}-{}", r.arch, r.dataset);
    e.arch = r.arch;
    e.dataset = r.dataset;
    e.num_classes = std::string_view(r.dataset) == "cifar10" ? 10 : std::string_view(r.dataset) == "cifar100" ? 100 : 1000;
    e.image_size = 224;
    e.clean_accuracy = r.acc;
    out.push_back(std::move(e));
  }
  return out;
}

MenteeEntry register_mentee(ToyMentee& mentee, const std::filesystem::path& registry_path,
                            const std::string& dataset, std::uint64_t seed, double accuracy) {
  const auto dir = registry_path.parent_path();
  const std::string rel = fmt::format("mentees/{}.weights", mentee.id());
  const auto& spec = mentee.spec();
  nn::save_weights(dir / rel,
                   {{"model_id", mentee.id()},
                    {"arch", std::string(nn::backbone_name(spec.kind))},
                    {"num_classes", std::to_string(mentee.num_classes())},
                    {"image_size", std::to_string(spec.image_size)},
                    {"conv1_channels", std::to_string(spec.conv1_channels)},
                    {"conv2_channels", std::to_string(spec.conv2_channels)},
                    {"feature_dim", std::to_string(spec.feature_dim)},
                    {"patch", std::to_string(spec.patch)},
                    {"embed_dim", std::to_string(spec.embed_dim)}},
                   mentee.params());
  MenteeEntry e;
  e.id = mentee.id();
  e.weights = rel;
  e.digest = mentee.weight_digest();
  e.arch = std::string(nn::backbone_name(spec.kind));
  e.dataset = dataset;
  e.num_classes = mentee.num_classes();
  e.image_size = spec.image_size;
  e.seed = seed;
  e.clean_accuracy = accuracy;
  auto reg = MenteeRegistry::read(registry_path);
  reg.put(e);
  reg.write(registry_path);
  return e;
}

std::unique_ptr<ToyMentee> load_mentee(const std::filesystem::path& registry_path, const std::string& id) {
  const auto reg = MenteeRegistry::read(registry_path);
  const auto entry = reg.find(id);
  if (!entry) fail(ErrorCode::kNotFound, fmt::format("mentee '{}' not in registry '{}'", id, registry_path.string()));
  if (entry->weights.empty()) {
    fail(ErrorCode::kNotFound, fmt::format("mentee '{}' is metadata-only, it has no weights file", id));
  }
  const nn::WeightFile wf = nn::load_weights(registry_path.parent_path() / entry->weights);
  nn::BackboneSpec spec;
  try {
    spec.kind = nn::parse_backbone(wf.get("arch"));
    spec.image_size = std::stoi(wf.get("image_size"));
    spec.conv1_channels = std::stoi(wf.get("conv1_channels"));
    spec.conv2_channels = std::stoi(wf.get("conv2_channels"));
    spec.feature_dim = std::stoi(wf.get("feature_dim"));
    spec.patch = std::stoi(wf.get("patch"));
    spec.embed_dim = std::stoi(wf.get("embed_dim"));
  } catch (const std::logic_error&) {
    fail(ErrorCode::kIntegrity, fmt::format("mentee '{}' weights have a malformed header", id));
  }
  Rng rng(0);
  auto model = std::make_unique<ToyMentee>(id, spec, std::stoi(wf.get("num_classes")), rng);
  nn::assign_params(model->params(), wf);
  model->set_frozen(true);
  if (model->weight_digest() != entry->digest) {
    fail(ErrorCode::kIntegrity, fmt::format("mentee '{}' digest {} does not match registry digest {}", id,
                                            model->weight_digest(), entry->digest));
  }
  return model;
}

}  // namespace blindspot

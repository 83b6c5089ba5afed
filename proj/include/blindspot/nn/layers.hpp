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

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "blindspot/nn/autograd.hpp"
#include "blindspot/rng.hpp"

namespace blindspot::nn {

struct ParamRef {
  std::string name;
  Var* var;
};
using ParamRefs = std::vector<ParamRef>;

/// SHA-256 over parameter names, shapes and raw values.
std::string weight_digest(const ParamRefs& params);
/// Replaces every parameter with a fresh node holding a copy of its value,
/// detaching it from any model it was shared with.
void detach_params(const ParamRefs& params);
void set_trainable(const ParamRefs& params, bool trainable);
void zero_grads(const ParamRefs& params);
std::size_t param_count(const ParamRefs& params);

class Linear {
 public:
  Linear() = default;
  Linear(int in, int out, Rng& rng);
  Var forward(const Var& x) const { return add_bias(matmul(x, weight_), bias_); }
  void collect(const std::string& prefix, ParamRefs& out);
  int in_features() const { return weight_.value().dim(0); }
  int out_features() const { return weight_.value().dim(1); }

 private:
  Var weight_;  // [in, out]
  Var bias_;    // [out]
};

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int in_channels, int out_channels, int kernel, Rng& rng);
  Var forward(const Var& x) const { return conv2d_same(x, weight_, bias_); }
  void collect(const std::string& prefix, ParamRefs& out);

 private:
  Var weight_;  // [out, in, k, k]
  Var bias_;
};

/// Two-layer perceptron with a ReLU between the layers.
class MlpHead {
 public:
  MlpHead() = default;
  MlpHead(int in, int hidden, int out, Rng& rng);
  Var forward(const Var& x) const { return output_.forward(hidden(x)); }
  /// Activation after the first layer (the head's penultimate embedding).
  Var hidden(const Var& x) const { return relu(hidden_.forward(x)); }
  Var output_from_hidden(const Var& h) const { return output_.forward(h); }
  void collect(const std::string& prefix, ParamRefs& out);
  int hidden_width() const { return hidden_.out_features(); }

 private:
  Linear hidden_;
  Linear output_;
};

enum class BackboneKind { kToyCnn, kToyAttention };

std::string_view backbone_name(BackboneKind kind);
BackboneKind parse_backbone(std::string_view name);

struct BackboneSpec {
  BackboneKind kind = BackboneKind::kToyCnn;
  int image_size = 16;
  // toy-cnn
  int conv1_channels = 8;
  int conv2_channels = 16;
  int feature_dim = 32;
  // toy-attention
  int patch = 4;
  int embed_dim = 24;

  int output_dim() const { return kind == BackboneKind::kToyCnn ? feature_dim : embed_dim; }
  bool operator==(const BackboneSpec&) const = default;
};

/// conv-relu-pool x2, flatten, linear-relu.
class ConvBackbone {
 public:
  ConvBackbone(const BackboneSpec& spec, Rng& rng);
  Var forward(const Var& x) const;
  void collect(const std::string& prefix, ParamRefs& out);

 private:
  Conv2d conv1_;
  Conv2d conv2_;
  Linear fc_;
};

/// Patch embedding plus one pre-norm transformer block, mean-pooled tokens.
class AttentionBackbone {
 public:
  AttentionBackbone(const BackboneSpec& spec, Rng& rng);
  Var forward(const Var& x) const;
  void collect(const std::string& prefix, ParamRefs& out);

 private:
  int patch_;
  int tokens_;
  Linear embed_;
  Var pos_;  // [T, D]
  Linear wq_, wk_, wv_, wo_;
  Linear mlp1_, mlp2_;
};

/// Feature extractor over NCHW images in [0, 1]. Pixel normalisation happens
/// inside, so callers always work in raw pixel space.
class Backbone {
 public:
  Backbone(const BackboneSpec& spec, Rng& rng);
  Var forward(const Var& images) const;
  void collect(const std::string& prefix, ParamRefs& out);
  const BackboneSpec& spec() const { return spec_; }
  int feature_dim() const { return spec_.output_dim(); }

 private:
  BackboneSpec spec_;
  std::variant<ConvBackbone, AttentionBackbone> impl_;
};

}  // namespace blindspot::nn

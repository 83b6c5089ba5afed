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

#include "blindspot/nn/layers.hpp"

#include <array>
#include <cmath>

#include <fmt/format.h>

#include "blindspot/digest.hpp"
#include "blindspot/error.hpp"

namespace blindspot::nn {
namespace {

Tensor he_normal(Shape shape, int fan_in, Rng& rng) {
  Tensor t(std::move(shape), 0.0);
  const double sd = std::sqrt(2.0 / fan_in);
  for (auto& v : t.values()) v = sd * rng.normal();
  return t;
}

constexpr std::array<double, 3> kPixelScale{4.0, 4.0, 4.0};
constexpr std::array<double, 3> kPixelShift{-2.0, -2.0, -2.0};

}  // namespace

std::string weight_digest(const ParamRefs& params) {
  Sha256 h;
  for (const auto& p : params) {
    h.update(p.name);
    h.update(shape_string(p.var->shape()));
    h.update_values(std::span<const double>(p.var->value().values()));
  }
  return h.hex();
}

void detach_params(const ParamRefs& params) {
  for (const auto& p : params) *p.var = Var(p.var->value(), p.var->requires_grad());
}

void set_trainable(const ParamRefs& params, bool trainable) {
  for (const auto& p : params) *p.var = Var(p.var->value(), trainable);
}

void zero_grads(const ParamRefs& params) {
  for (const auto& p : params) p.var->zero_grad();
}

std::size_t param_count(const ParamRefs& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.var->value().size();
  return n;
}

Linear::Linear(int in, int out, Rng& rng)
    : weight_(he_normal({in, out}, in, rng), true), bias_(Tensor({out}, 0.0), true) {}

void Linear::collect(const std::string& prefix, ParamRefs& out) {
  out.push_back({prefix + ".weight", &weight_});
  out.push_back({prefix + ".bias", &bias_});
}

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, Rng& rng)
    : weight_(he_normal({out_channels, in_channels, kernel, kernel}, in_channels * kernel * kernel, rng), true),
      bias_(Tensor({out_channels}, 0.0), true) {}

void Conv2d::collect(const std::string& prefix, ParamRefs& out) {
  out.push_back({prefix + ".weight", &weight_});
  out.push_back({prefix + ".bias", &bias_});
}

MlpHead::MlpHead(int in, int hidden, int out, Rng& rng) : hidden_(in, hidden, rng), output_(hidden, out, rng) {}

void MlpHead::collect(const std::string& prefix, ParamRefs& out) {
  hidden_.collect(prefix + ".0", out);
  output_.collect(prefix + ".1", out);
}

std::string_view backbone_name(BackboneKind kind) {
  return kind == BackboneKind::kToyCnn ? "toy-cnn" : "toy-attention";
}

BackboneKind parse_backbone(std::string_view name) {
  if (name == "toy-cnn") return BackboneKind::kToyCnn;
  if (name == "toy-attention") return BackboneKind::kToyAttention;
  fail(ErrorCode::kUnsupported, fmt::format("unsupported backbone '{}'", name));
}

ConvBackbone::ConvBackbone(const BackboneSpec& spec, Rng& rng)
    : conv1_(3, spec.conv1_channels, 3, rng),
      conv2_(spec.conv1_channels, spec.conv2_channels, 3, rng),
      fc_(spec.conv2_channels * (spec.image_size / 4) * (spec.image_size / 4), spec.feature_dim, rng) {
  require(spec.image_size % 4 == 0, "toy-cnn needs an image size divisible by 4");
}

Var ConvBackbone::forward(const Var& x) const {
  Var h = maxpool2(relu(conv1_.forward(x)));
  h = maxpool2(relu(conv2_.forward(h)));
  return relu(fc_.forward(flatten(h)));
}

void ConvBackbone::collect(const std::string& prefix, ParamRefs& out) {
  conv1_.collect(prefix + ".conv1", out);
  conv2_.collect(prefix + ".conv2", out);
  fc_.collect(prefix + ".fc", out);
}

AttentionBackbone::AttentionBackbone(const BackboneSpec& spec, Rng& rng)
    : patch_(spec.patch),
      tokens_((spec.image_size / spec.patch) * (spec.image_size / spec.patch)),
      embed_(3 * spec.patch * spec.patch, spec.embed_dim, rng),
      wq_(spec.embed_dim, spec.embed_dim, rng),
      wk_(spec.embed_dim, spec.embed_dim, rng),
      wv_(spec.embed_dim, spec.embed_dim, rng),
      wo_(spec.embed_dim, spec.embed_dim, rng),
      mlp1_(spec.embed_dim, 2 * spec.embed_dim, rng),
      mlp2_(2 * spec.embed_dim, spec.embed_dim, rng) {
  require(spec.image_size % spec.patch == 0, "toy-attention needs image size divisible by patch");
  Tensor pos({tokens_, spec.embed_dim}, 0.0);
  for (auto& v : pos.values()) v = 0.02 * rng.normal();
  pos_ = Var(std::move(pos), true);
}

Var AttentionBackbone::forward(const Var& x) const {
  Var h = add_positional(embed_.forward(patchify(x, patch_)), pos_);
  Var a = layer_norm(h);
  Var att = self_attention(wq_.forward(a), wk_.forward(a), wv_.forward(a), tokens_);
  h = add(h, wo_.forward(att));
  Var m = layer_norm(h);
  h = add(h, mlp2_.forward(relu(mlp1_.forward(m))));
  return token_mean(layer_norm(h), tokens_);
}

void AttentionBackbone::collect(const std::string& prefix, ParamRefs& out) {
  embed_.collect(prefix + ".embed", out);
  out.push_back({prefix + ".pos", &pos_});
  wq_.collect(prefix + ".wq", out);
  wk_.collect(prefix + ".wk", out);
  wv_.collect(prefix + ".wv", out);
  wo_.collect(prefix + ".wo", out);
  mlp1_.collect(prefix + ".mlp1", out);
  mlp2_.collect(prefix + ".mlp2", out);
}

namespace {

std::variant<ConvBackbone, AttentionBackbone> make_impl(const BackboneSpec& spec, Rng& rng) {
  if (spec.kind == BackboneKind::kToyCnn) return ConvBackbone(spec, rng);
  return AttentionBackbone(spec, rng);
}

}  // namespace

Backbone::Backbone(const BackboneSpec& spec, Rng& rng) : spec_(spec), impl_(make_impl(spec, rng)) {}

Var Backbone::forward(const Var& images) const {
  const auto& s = images.shape();
  if (s.size() != 4 || s[1] != 3 || s[2] != spec_.image_size || s[3] != spec_.image_size) {
    fail(ErrorCode::kValidation,
         fmt::format("backbone expects [N,3,{0},{0}] input, got {1}", spec_.image_size, shape_string(s)));
  }
  Var x = channel_affine(images, kPixelScale, kPixelShift);
  return std::visit([&](const auto& impl) { return impl.forward(x); }, impl_);
}

void Backbone::collect(const std::string& prefix, ParamRefs& out) {
  std::visit([&](auto& impl) { impl.collect(prefix, out); }, impl_);
}

}  // namespace blindspot::nn

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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>

#include <gtest/gtest.h>

#include "blindspot/error.hpp"
#include "blindspot/nn/autograd.hpp"
#include "blindspot/nn/layers.hpp"
#include "blindspot/nn/optim.hpp"
#include "blindspot/nn/weights_io.hpp"
#include "blindspot/rng.hpp"

namespace blindspot::nn {
namespace {

Tensor random_tensor(Shape shape, Rng& rng, double sd = 1.0) {
  Tensor t(std::move(shape), 0.0);
  for (auto& v : t.values()) v = sd * rng.normal();
  return t;
}

// Relative error of the whole gradient vector against central differences.
double gradient_error(Var& input, const std::function<Var()>& loss_fn, double h = 1e-5) {
  input.zero_grad();
  Var loss = loss_fn();
  loss.backward();
  const Tensor analytic = input.grad();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < input.value().size(); ++i) {
    const double orig = input.value()[i];
    input.mutable_value()[i] = orig + h;
    const double up = loss_fn().value()[0];
    input.mutable_value()[i] = orig - h;
    const double down = loss_fn().value()[0];
    input.mutable_value()[i] = orig;
    const double fd = (up - down) / (2 * h);
    num += (fd - analytic[i]) * (fd - analytic[i]);
    den += std::max(fd * fd, analytic[i] * analytic[i]);
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

TEST(Autograd, MatmulBiasTanhGradient) {
  Rng rng(1);
  Var x(random_tensor({3, 4}, rng), true);
  Var w(random_tensor({4, 2}, rng), true);
  Var b(random_tensor({2}, rng), true);
  auto f = [&] { return sum(tanh(add_bias(matmul(x, w), b))); };
  EXPECT_LT(gradient_error(x, f), 1e-6);
  EXPECT_LT(gradient_error(w, f), 1e-6);
  EXPECT_LT(gradient_error(b, f), 1e-6);
}

TEST(Autograd, ConvPoolGradient) {
  Rng rng(2);
  Var x(random_tensor({2, 3, 4, 4}, rng), true);
  Var w(random_tensor({2, 3, 3, 3}, rng), true);
  Var b(random_tensor({2}, rng), true);
  Var proj(random_tensor({8, 1}, rng), false);
  auto f = [&] { return sum(matmul(flatten(maxpool2(conv2d_same(x, w, b))), proj)); };
  EXPECT_LT(gradient_error(x, f), 1e-6);
  EXPECT_LT(gradient_error(w, f), 1e-6);
  EXPECT_LT(gradient_error(b, f), 1e-6);
}

TEST(Autograd, AttentionBlockGradient) {
  Rng rng(3);
  Var img(random_tensor({2, 3, 4, 4}, rng, 0.5), true);
  Var we(random_tensor({12, 5}, rng, 0.3), true);
  Var pos(random_tensor({4, 5}, rng, 0.1), true);
  Var wq(random_tensor({5, 5}, rng, 0.5), true);
  Var wk(random_tensor({5, 5}, rng, 0.5), true);
  Var wv(random_tensor({5, 5}, rng, 0.5), true);
  Var proj(random_tensor({5, 1}, rng), false);
  auto f = [&] {
    Var t = add_positional(matmul(patchify(img, 2), we), pos);
    Var a = layer_norm(t);
    Var o = self_attention(matmul(a, wq), matmul(a, wk), matmul(a, wv), 4);
    return sum(matmul(token_mean(add(t, o), 4), proj));
  };
  for (Var* v : {&img, &we, &pos, &wq, &wk, &wv}) EXPECT_LT(gradient_error(*v, f), 1e-6);
}

TEST(Autograd, LossGradients) {
  Rng rng(4);
  Var z(random_tensor({4, 3}, rng), true);
  const std::vector<int> labels{0, 2, 1, 2};
  const Tensor target = random_tensor({4, 3}, rng);
  EXPECT_LT(gradient_error(z, [&] { return cross_entropy(z, labels); }), 1e-6);
  EXPECT_LT(gradient_error(z, [&] { return distillation_kl(z, target, 2.0); }), 1e-6);
  EXPECT_LT(gradient_error(z, [&] { return cw_margin(z, labels, 0.0); }), 1e-6);
  const Tensor noise = random_tensor({4, 3}, rng, 0.1);
  const std::vector<double> weights{1.0, 0.5, 2.0, 1.0};
  EXPECT_LT(gradient_error(z, [&] { return jitter_objective(z, labels, noise, weights, 10.0); }), 1e-5);

  Var s(random_tensor({4}, rng), true);
  const std::vector<int> bits{1, 0, 0, 1};
  EXPECT_LT(gradient_error(s, [&] { return binary_cross_entropy(sigmoid(s), bits); }), 1e-6);
}

TEST(Autograd, ConstantsDoNotBuildGraph) {
  Var a(Tensor({2, 2}, 1.0), false);
  Var b = relu(scale(a, 2.0));
  EXPECT_FALSE(b.requires_grad());
  EXPECT_TRUE(b.node()->parents.empty());
}

TEST(Autograd, BackwardNeedsScalar) {
  Var a(Tensor({2}, 1.0), true);
  EXPECT_THROW(a.backward(), Error);
}

TEST(Optim, AdamWMinimisesQuadratic) {
  Var w(Tensor({3}, 5.0), true);
  AdamW opt({{"w", &w}}, {.lr = 0.1, .weight_decay = 0.0});
  for (int i = 0; i < 500; ++i) {
    opt.zero_grad();
    Var loss = sum(relu(add(w, w)));  // pushes toward zero from above
    loss.backward();
    opt.step();
  }
  for (double v : w.value().values()) EXPECT_LT(v, 0.5);
}

TEST(Optim, CosineEndpoints) {
  EXPECT_DOUBLE_EQ(cosine_lr(1e-3, 0, 10), 1e-3);
  EXPECT_NEAR(cosine_lr(1e-3, 10, 10), 0.0, 1e-18);
  EXPECT_NEAR(cosine_lr(1e-3, 5, 10), 5e-4, 1e-15);
}

TEST(WeightsIo, RoundTripAndIntegrity) {
  Rng rng(5);
  BackboneSpec spec;
  Backbone bb(spec, rng);
  ParamRefs params;
  bb.collect("backbone", params);
  const auto dir = std::filesystem::temp_directory_path() / "blindspot_weights_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "bb.weights";
  save_weights(path, {{"arch", "toy-cnn"}}, params);
  const WeightFile wf = load_weights(path);
  EXPECT_EQ(wf.get("arch"), "toy-cnn");
  EXPECT_EQ(wf.digest(), weight_digest(params));

  Rng other(6);
  Backbone bb2(spec, other);
  ParamRefs params2;
  bb2.collect("backbone", params2);
  EXPECT_NE(weight_digest(params2), weight_digest(params));
  assign_params(params2, wf);
  EXPECT_EQ(weight_digest(params2), weight_digest(params));

  // Flip one payload byte.
  std::string blob;
  {
    std::ifstream in(path, std::ios::binary);
    blob.assign(std::istreambuf_iterator<char>(in), {});
  }
  blob[blob.size() - 3] ^= 0x5a;
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << blob;
  }
  try {
    load_weights(path);
    FAIL() << "corrupted weights accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIntegrity);
  }
  // Truncation.
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << blob.substr(0, blob.size() / 2);
  }
  EXPECT_THROW(load_weights(path), Error);
  try {
    load_weights(dir / "missing.weights");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotFound);
  }
}

TEST(Layers, BackboneOutputShapes) {
  Rng rng(7);
  for (auto kind : {BackboneKind::kToyCnn, BackboneKind::kToyAttention}) {
    BackboneSpec spec;
    spec.kind = kind;
    Backbone bb(spec, rng);
    Var x(Tensor({3, 3, 16, 16}, 0.5));
    const Var f = bb.forward(x);
    EXPECT_EQ(f.shape(), (Shape{3, spec.output_dim()}));
    EXPECT_THROW(bb.forward(Var(Tensor({1, 3, 8, 8}, 0.5))), Error);
  }
}

}  // namespace
}  // namespace blindspot::nn

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

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "blindspot/nn/tensor.hpp"

namespace blindspot::nn {

struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into parents that require grad.
  std::function<void(Node&)> backward_fn;

  Tensor& grad_buffer() {
    if (grad.size() != value.size()) grad = Tensor(value.shape(), 0.0);
    return grad;
  }
};

/// Handle to a node in a dynamically built computation graph. Copies share
/// the node; leaves that require grad act as trainable parameters.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  /// Gradient accumulated by backward(); zeros if none reached this node.
  Tensor grad() const;
  void zero_grad() { node_->grad = Tensor(); }
  bool defined() const { return static_cast<bool>(node_); }

  /// Reverse-mode sweep from this scalar.
  void backward();

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Builds an op node; the backward closure is dropped when no input requires
/// grad so constant subgraphs cost nothing extra.
Var make_op(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward_fn);

// Elementwise and linear algebra.
Var matmul(const Var& a, const Var& b);          // [m,k] x [k,n]
Var add_bias(const Var& x, const Var& bias);     // [m,n] + [n]
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var relu(const Var& x);
Var tanh(const Var& x);
Var sigmoid(const Var& x);
Var sum(const Var& x);
Var mean(const Var& x);
/// Per-channel affine x*scale[c] + shift[c] on NCHW input, constants only.
Var channel_affine(const Var& x, std::span<const double> scale, std::span<const double> shift);

// Convolutional pieces, NCHW.
Var conv2d_same(const Var& x, const Var& weight, const Var& bias);  // odd square kernel, stride 1
Var maxpool2(const Var& x);
Var flatten(const Var& x);  // [N, ...] -> [N, prod]
Var reshape(const Var& x, Shape shape);

// Attention pieces. Token matrices are [N*T, D].
Var patchify(const Var& x, int patch);  // [N,C,H,W] -> [N*T, C*p*p]
Var add_positional(const Var& tokens, const Var& pos);  // pos: [T,D]
Var self_attention(const Var& q, const Var& k, const Var& v, int tokens_per_item);
Var layer_norm(const Var& x, double eps = 1e-5);  // per row, no affine
Var token_mean(const Var& x, int tokens_per_item);  // [N*T,D] -> [N,D]

// Losses, all scalar outputs.
/// Mean cross entropy over rows.
Var cross_entropy(const Var& logits, std::span<const int> labels);
/// T^2 * mean_rows KL(softmax(target/T) || softmax(logits/T)); target is constant.
Var distillation_kl(const Var& logits, const Tensor& target_logits, double temperature);
/// Mean binary cross entropy of probabilities clamped to [1e-7, 1-1e-7].
Var binary_cross_entropy(const Var& probs, std::span<const int> targets);
/// Sum over rows of max(z_y - max_{i != y} z_i, -kappa).
Var cw_margin(const Var& logits, std::span<const int> labels, double kappa);
/// Jitter objective: rows of softmax(scale * z / ||z||_inf) + noise compared
/// to one-hot labels by mean squared error, each row multiplied by its weight,
/// averaged over rows.
Var jitter_objective(const Var& logits, std::span<const int> labels, const Tensor& noise,
                     std::span<const double> row_weights, double scale);

/// Numerically stable softmax of one row.
std::vector<double> softmax(std::span<const double> z);

}  // namespace blindspot::nn

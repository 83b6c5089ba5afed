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

#include "blindspot/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <fmt/format.h>

#include "blindspot/error.hpp"
#include "blindspot/nn/optim.hpp"
#include "blindspot/rng.hpp"

namespace blindspot {
namespace {

using nn::Tensor;
using nn::Var;

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void check_inputs(const Mentee& mentee, std::span<const Image> images, std::span<const int> labels) {
  if (!mentee.differentiable()) {
    fail(ErrorCode::kUnsupported, fmt::format("mentee '{}' does not expose input gradients", mentee.id()));
  }
  require(images.size() == labels.size(), "attack needs one label per image");
  for (int y : labels) {
    require(y >= 0 && y < mentee.num_classes(), fmt::format("label {} outside 0..{}", y, mentee.num_classes() - 1));
  }
}

std::vector<Image> unpack(const Tensor& x) {
  std::vector<Image> out;
  out.reserve(x.dim(0));
  for (int i = 0; i < x.dim(0); ++i) out.push_back(from_nchw(x, i));
  return out;
}

// Gradient of `objective(logits)` w.r.t. the input batch; also returns the
// logits seen at this point.
Tensor input_gradient(const Mentee& mentee, const Tensor& x, const std::function<Var(const Var&)>& objective,
                      Tensor* logits_out = nullptr) {
  Var input(x, true);
  Var logits = mentee.logits_graph(input);
  if (logits_out) *logits_out = logits.value();
  Var loss = objective(logits);
  loss.backward();
  return input.grad();
}

// Per-element box [max(x0 - eps, 0), min(x0 + eps, 1)].
void ball_bounds(const Tensor& x0, double eps, Tensor& lo, Tensor& hi) {
  lo = x0;
  hi = x0;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    lo[i] = std::max(x0[i] - eps, 0.0);
    hi[i] = std::min(x0[i] + eps, 1.0);
  }
}

// Depthwise k x k sum with zero centre, divided by k*k - 1, zero padding.
Tensor project_noise(const Tensor& x, int kernel) {
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int r = kernel / 2;
  const double weight = 1.0 / (kernel * kernel - 1);
  Tensor out(x.shape(), 0.0);
  for (int b = 0; b < n * c; ++b) {
    const double* src = x.data() + static_cast<std::size_t>(b) * h * w;
    double* dst = out.data() + static_cast<std::size_t>(b) * h * w;
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        double acc = 0.0;
        for (int dy = -r; dy <= r; ++dy) {
          for (int dx = -r; dx <= r; ++dx) {
            if (dy == 0 && dx == 0) continue;
            const int yy = y + dy, xs = xx + dx;
            if (yy < 0 || yy >= h || xs < 0 || xs >= w) continue;
            acc += src[yy * w + xs];
          }
        }
        dst[y * w + xx] = acc * weight;
      }
    }
  }
  return out;
}

// L-inf sign-gradient ascent shared by PGD and Jitter.
std::vector<Image> sign_ascent(const Mentee& mentee, std::span<const Image> images, const AttackParams& p,
                               const std::function<Var(const Var&, const Tensor&, int)>& objective) {
  const Tensor x0 = to_nchw(images);
  if (p.steps == 0 || p.epsilon == 0.0) return {images.begin(), images.end()};
  Tensor lo, hi;
  ball_bounds(x0, p.epsilon, lo, hi);
  const double step = p.resolved_step();
  Tensor x = x0;
  for (int t = 0; t < p.steps; ++t) {
    const Tensor g = input_gradient(mentee, x, [&](const Var& z) { return objective(z, x, t); });
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i] + step * sign(g[i]), lo[i], hi[i]);
  }
  return unpack(x);
}

}  // namespace

void AttackParams::validate() const {
  require(epsilon >= 0.0 && epsilon <= 1.0, fmt::format("attack epsilon {} outside [0, 1]", epsilon));
  require(steps >= 0, "attack steps must be >= 0");
  require(cw_c > 0.0, "cw c must be > 0");
  require(cw_lr > 0.0, "cw learning rate must be > 0");
  require(cw_iters >= 0, "cw iterations must be >= 0");
  require(pifgsm_kernel >= 3 && pifgsm_kernel % 2 == 1, "pifgsm kernel must be odd and >= 3");
  require(jitter_std >= 0.0 && jitter_scale > 0.0, "jitter noise std must be >= 0 and scale > 0");
}

AttackParams attack_params_for(const ErrorSource& source) {
  if (source.family() != ErrorFamily::kAa) {
    fail(ErrorCode::kValidation, fmt::format("source '{}' is not an adversarial attack", source.id()));
  }
  AttackParams p;
  p.kind = source.kind();
  if (source.kind() == ErrorKind::kCw) {
    p.cw_lr = source.cw_lr();
  } else {
    p.epsilon = source.epsilon();
  }
  return p;
}

std::vector<Image> pgd_batch(const Mentee& mentee, std::span<const Image> images, std::span<const int> labels,
                             const AttackParams& params) {
  check_inputs(mentee, images, labels);
  params.validate();
  if (images.empty()) return {};
  return sign_ascent(mentee, images, params,
                     [&](const Var& z, const Tensor&, int) { return nn::cross_entropy(z, labels); });
}

std::vector<Image> jitter_batch(const Mentee& mentee, std::span<const Image> images, std::span<const int> labels,
                                const AttackParams& params, std::span<const std::uint64_t> seeds) {
  check_inputs(mentee, images, labels);
  params.validate();
  require(seeds.size() == images.size(), "jitter needs one seed per image");
  if (images.empty()) return {};
  const Tensor x0 = to_nchw(images);
  const int k = mentee.num_classes();
  std::vector<Rng> rngs;
  for (auto s : seeds) rngs.emplace_back(s);
  auto objective = [&](const Var& z, const Tensor& x, int) {
    const int n = z.shape()[0];
    const std::size_t per = x.size() / n;
    Tensor noise({n, k}, 0.0);
    std::vector<double> weights(n, 1.0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < k; ++j) noise[static_cast<std::size_t>(i) * k + j] = params.jitter_std * rngs[i].normal();
      // Rows already misclassified are scaled by 1 / ||delta||_inf.
      if (argmax(z.value().row(i)) != labels[i]) {
        double dn = 0.0;
        for (std::size_t e = 0; e < per; ++e) dn = std::max(dn, std::abs(x[i * per + e] - x0[i * per + e]));
        if (dn > 0.0) weights[i] = 1.0 / dn;
      }
    }
    return nn::jitter_objective(z, labels, noise, weights, params.jitter_scale);
  };
  return sign_ascent(mentee, images, params, objective);
}

std::vector<Image> cw_l2_batch(const Mentee& mentee, std::span<const Image> images, std::span<const int> labels,
                               const AttackParams& params) {
  check_inputs(mentee, images, labels);
  params.validate();
  if (images.empty() || params.cw_iters == 0) return {images.begin(), images.end()};
  const Tensor x0 = to_nchw(images);
  const int n = x0.dim(0);
  const std::size_t per = x0.size() / n;
  constexpr double kShrink = 1.0 - 1e-6;
  Var w(Tensor(x0.shape(), 0.0), true);
  for (std::size_t i = 0; i < x0.size(); ++i) w.mutable_value()[i] = std::atanh((2.0 * x0[i] - 1.0) * kShrink);
  nn::AdamW opt({{"w", &w}}, {.lr = params.cw_lr, .weight_decay = 0.0});

  std::vector<double> best_l2(n, std::numeric_limits<double>::infinity());
  Tensor best = x0;
  Tensor x(x0.shape(), 0.0);
  auto update_best = [&](const Tensor& logits) {
    for (int i = 0; i < n; ++i) {
      if (argmax(logits.row(i)) == labels[i]) continue;
      double l2 = 0.0;
      for (std::size_t e = 0; e < per; ++e) l2 += (x[i * per + e] - x0[i * per + e]) * (x[i * per + e] - x0[i * per + e]);
      if (l2 < best_l2[i]) {
        best_l2[i] = l2;
        std::copy(x.data() + i * per, x.data() + (i + 1) * per, best.data() + i * per);
      }
    }
  };
  for (int it = 0; it <= params.cw_iters; ++it) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.5 * (std::tanh(w.value()[i]) + 1.0);
    Tensor logits;
    const Tensor gm = input_gradient(
        mentee, x, [&](const Var& z) { return nn::cw_margin(z, labels, params.cw_kappa); }, &logits);
    update_best(logits);
    if (it == params.cw_iters) break;
    // d/dw of ||x - x0||^2 + c * f(x), with dx/dw = (1 - tanh^2) / 2.
    Tensor& g = w.node()->grad_buffer();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double th = 2.0 * x[i] - 1.0;
      g[i] = (2.0 * (x[i] - x0[i]) + params.cw_c * gm[i]) * 0.5 * (1.0 - th * th);
    }
    opt.step();
    w.zero_grad();
  }
  for (int i = 0; i < n; ++i) {
    if (std::isinf(best_l2[i])) std::copy(x.data() + i * per, x.data() + (i + 1) * per, best.data() + i * per);
  }
  for (auto& v : best.values()) v = std::clamp(v, 0.0, 1.0);
  return unpack(best);
}

std::vector<Image> pifgsm_batch(const Mentee& mentee, std::span<const Image> images, std::span<const int> labels,
                                const AttackParams& params) {
  check_inputs(mentee, images, labels);
  params.validate();
  if (images.empty() || params.steps == 0 || params.epsilon == 0.0) return {images.begin(), images.end()};
  const Tensor x0 = to_nchw(images);
  Tensor lo, hi;
  ball_bounds(x0, params.epsilon, lo, hi);
  const double eps = params.epsilon;
  const double alpha = eps / params.steps;
  const double alpha_beta = alpha * params.pifgsm_amplification;
  const double gamma = alpha_beta;
  Tensor amplification(x0.shape(), 0.0);
  Tensor cut(x0.shape(), 0.0);
  Tensor x = x0;
  for (int t = 0; t < params.steps; ++t) {
    const Tensor g = input_gradient(mentee, x, [&](const Var& z) { return nn::cross_entropy(z, labels); });
    for (std::size_t i = 0; i < x.size(); ++i) {
      amplification[i] += alpha_beta * sign(g[i]);
      cut[i] = std::max(std::abs(amplification[i]) - eps, 0.0) * sign(amplification[i]);
    }
    const Tensor spread = project_noise(cut, params.pifgsm_kernel);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double projection = gamma * sign(spread[i]);
      amplification[i] += projection;
      x[i] = std::clamp(x[i] + alpha_beta * sign(g[i]) + projection, lo[i], hi[i]);
    }
  }
  return unpack(x);
}

std::vector<Image> attack_batch(const Mentee& mentee, std::span<const Image> images, std::span<const int> labels,
                                const AttackParams& params, std::span<const std::uint64_t> seeds) {
  switch (params.kind) {
    case ErrorKind::kPgd: return pgd_batch(mentee, images, labels, params);
    case ErrorKind::kCw: return cw_l2_batch(mentee, images, labels, params);
    case ErrorKind::kJitter: return jitter_batch(mentee, images, labels, params, seeds);
    case ErrorKind::kPifgsm: return pifgsm_batch(mentee, images, labels, params);
    default: fail(ErrorCode::kValidation, fmt::format("'{}' is not an attack kind", kind_name(params.kind)));
  }
}

std::vector<Image> attack_batch(const Mentee& mentee, std::span<const Image> images, std::span<const int> labels,
                                const ErrorSource& source, std::span<const std::uint64_t> seeds) {
  return attack_batch(mentee, images, labels, attack_params_for(source), seeds);
}

Image pgd(const Mentee& mentee, const Image& img, int label, const AttackParams& params) {
  return pgd_batch(mentee, std::span(&img, 1), std::span(&label, 1), params).front();
}

Image cw_l2(const Mentee& mentee, const Image& img, int label, const AttackParams& params) {
  return cw_l2_batch(mentee, std::span(&img, 1), std::span(&label, 1), params).front();
}

Image jitter(const Mentee& mentee, const Image& img, int label, const AttackParams& params, std::uint64_t seed) {
  return jitter_batch(mentee, std::span(&img, 1), std::span(&label, 1), params, std::span(&seed, 1)).front();
}

Image pifgsm(const Mentee& mentee, const Image& img, int label, const AttackParams& params) {
  return pifgsm_batch(mentee, std::span(&img, 1), std::span(&label, 1), params).front();
}

Image attack(const Mentee& mentee, const Image& img, int label, const ErrorSource& source, std::uint64_t seed) {
  return attack_batch(mentee, std::span(&img, 1), std::span(&label, 1), source, std::span(&seed, 1)).front();
}

}  // namespace blindspot

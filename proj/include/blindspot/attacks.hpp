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
#include <span>
#include <vector>

#include "blindspot/error_source.hpp"
#include "blindspot/mentee.hpp"

namespace blindspot {

/// Untargeted white-box attack settings. Unused fields are ignored by the
/// other kinds.
struct AttackParams {
  ErrorKind kind = ErrorKind::kPgd;
  double epsilon = 1.0 / 255.0;  // L-inf bound (PGD, Jitter, PIFGSM)
  int steps = 10;
  /// PGD/Jitter step; a negative value means 2.5 * epsilon / steps.
  double step_size = -1.0;
  double cw_c = 1.0;
  double cw_lr = kDefaultCwLr;
  int cw_iters = 50;
  double cw_kappa = 0.0;
  double jitter_scale = 10.0;
  double jitter_std = 0.1;
  double pifgsm_amplification = 10.0;
  int pifgsm_kernel = 3;

  double resolved_step() const { return step_size >= 0.0 ? step_size : (steps > 0 ? 2.5 * epsilon / steps : 0.0); }
  /// Throws kValidation on out-of-domain fields.
  void validate() const;
};

/// Module defaults with the strength taken from an AA source.
AttackParams attack_params_for(const ErrorSource& source);

// Batched attacks. seeds[i] drives any randomness for image i, so a result
// never depends on which other images share the batch. Mentee parameters
// are read only; a non-differentiable mentee raises kUnsupported.
std::vector<Image> pgd_batch(const Mentee& mentee, std::span<const Image> images, std::span<const int> labels,
                             const AttackParams& params);
std::vector<Image> cw_l2_batch(const Mentee& mentee, std::span<const Image> images, std::span<const int> labels,
                               const AttackParams& params);
std::vector<Image> jitter_batch(const Mentee& mentee, std::span<const Image> images, std::span<const int> labels,
                                const AttackParams& params, std::span<const std::uint64_t> seeds);
std::vector<Image> pifgsm_batch(const Mentee& mentee, std::span<const Image> images, std::span<const int> labels,
                                const AttackParams& params);

std::vector<Image> attack_batch(const Mentee& mentee, std::span<const Image> images, std::span<const int> labels,
                                const AttackParams& params, std::span<const std::uint64_t> seeds);
/// Dispatch on an AA source; kValidation for any other family.
std::vector<Image> attack_batch(const Mentee& mentee, std::span<const Image> images, std::span<const int> labels,
                                const ErrorSource& source, std::span<const std::uint64_t> seeds);

// Single-image forms.
Image pgd(const Mentee& mentee, const Image& img, int label, const AttackParams& params);
Image cw_l2(const Mentee& mentee, const Image& img, int label, const AttackParams& params);
Image jitter(const Mentee& mentee, const Image& img, int label, const AttackParams& params, std::uint64_t seed);
Image pifgsm(const Mentee& mentee, const Image& img, int label, const AttackParams& params);
Image attack(const Mentee& mentee, const Image& img, int label, const ErrorSource& source, std::uint64_t seed);

}  // namespace blindspot

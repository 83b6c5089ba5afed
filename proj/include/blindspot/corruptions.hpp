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

#include <array>
#include <cstdint>
#include <vector>

#include "blindspot/error_source.hpp"
#include "blindspot/types.hpp"

namespace blindspot {

/// Per-kind parameters for severity levels 1..5.
///
/// Speckle and blur sigmas follow the published corruption benchmark tables.
/// Spatter thresholds apply to a unit-variance smooth random field; lower
/// thresholds give larger, nested splash masks. Saturate factors multiply
/// the HSV saturation channel.
struct SeverityTable {
  static constexpr int kLevels = 5;

  std::array<double, kLevels> speckle_sigma;
  std::array<double, kLevels> blur_sigma;
  std::array<double, kLevels> spatter_threshold;
  std::array<double, kLevels> saturate_factor;

  /// Small-image (32 px class) table; the default.
  static const SeverityTable& small_images();
  /// Large-image (224 px class) table.
  static const SeverityTable& large_images();
};

/// Speckle sigma sweep used for severity curves; independent of the five
/// benchmark levels.
inline constexpr std::array<double, 4> kSpeckleSweep{0.01, 0.06, 0.15, 0.6};

/// out = clip(img + img * n), n ~ N(0, sigma^2) per element.
Image speckle_noise(const Image& img, double sigma, std::uint64_t seed);

/// Normalised 1-D Gaussian taps, radius ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);

/// Separable isotropic blur with reflect padding (edge sample repeated).
Image gaussian_blur(const Image& img, double sigma);

/// Boolean splash mask (row-major, H*W) at a field threshold.
std::vector<std::uint8_t> spatter_mask(int height, int width, double threshold, std::uint64_t seed);

Image spatter(const Image& img, int severity, std::uint64_t seed,
              const SeverityTable& table = SeverityTable::small_images());

/// Scales HSV saturation by `factor`, clipping saturation to [0, 1].
Image scale_saturation(const Image& img, double factor);

Image saturate(const Image& img, int severity, const SeverityTable& table = SeverityTable::small_images());

/// Dispatch by kind and severity. On the speckle sweep scale, severity is
/// 1-based into kSpeckleSweep.
Image corrupt(const Image& img, ErrorKind kind, int severity, std::uint64_t seed,
              SeverityScale scale = SeverityScale::kBenchmark,
              const SeverityTable& table = SeverityTable::small_images());

Image corrupt(const Image& img, const ErrorSource& source, std::uint64_t seed,
              const SeverityTable& table = SeverityTable::small_images());

double mean_squared_error(const Image& a, const Image& b);

}  // namespace blindspot

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

#include "blindspot/corruptions.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "blindspot/error.hpp"
#include "blindspot/rng.hpp"

namespace blindspot {
namespace {

float clip01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

void check_level(int severity) {
  require(severity >= 1 && severity <= SeverityTable::kLevels,
          fmt::format("severity {} outside 1..{}", severity, SeverityTable::kLevels));
}

// Maps an out-of-range index onto [0, n) by mirroring with the edge sample
// repeated; the period-2n fold handles radii larger than the image.
int reflect_index(int i, int n) {
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

// Blurs a single-channel plane in place.
void blur_plane(std::vector<double>& plane, int h, int w, const std::vector<double>& taps) {
  const int r = static_cast<int>(taps.size() / 2);
  std::vector<double> tmp(plane.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k) acc += taps[k + r] * plane[y * w + reflect_index(x + k, w)];
      tmp[y * w + x] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k) acc += taps[k + r] * tmp[reflect_index(y + k, h) * w + x];
      plane[y * w + x] = acc;
    }
  }
}

struct Hsv {
  double h, s, v;
};

Hsv rgb_to_hsv(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  Hsv out{0.0, mx > 0.0 ? d / mx : 0.0, mx};
  if (d > 0.0) {
    if (mx == r) {
      out.h = std::fmod((g - b) / d, 6.0);
    } else if (mx == g) {
      out.h = (b - r) / d + 2.0;
    } else {
      out.h = (r - g) / d + 4.0;
    }
    if (out.h < 0.0) out.h += 6.0;
  }
  return out;
}

std::array<double, 3> hsv_to_rgb(const Hsv& c) {
  const double chroma = c.v * c.s;
  const double x = chroma * (1.0 - std::abs(std::fmod(c.h, 2.0) - 1.0));
  const double m = c.v - chroma;
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(c.h) % 6) {
    case 0: r = chroma, g = x; break;
    case 1: r = x, g = chroma; break;
    case 2: g = chroma, b = x; break;
    case 3: g = x, b = chroma; break;
    case 4: r = x, b = chroma; break;
    default: r = chroma, b = x; break;
  }
  return {r + m, g + m, b + m};
}

}  // namespace

const SeverityTable& SeverityTable::small_images() {
  static const SeverityTable table{
      .speckle_sigma = {0.06, 0.1, 0.12, 0.16, 0.2},
      .blur_sigma = {0.4, 0.6, 0.7, 0.8, 1.0},
      .spatter_threshold = {1.5, 1.1, 0.8, 0.5, 0.2},
      .saturate_factor = {1.5, 2.0, 3.0, 5.0, 20.0},
  };
  return table;
}

const SeverityTable& SeverityTable::large_images() {
  static const SeverityTable table{
      .speckle_sigma = {0.15, 0.2, 0.35, 0.45, 0.6},
      .blur_sigma = {1.0, 2.0, 3.0, 4.0, 6.0},
      .spatter_threshold = {1.5, 1.1, 0.8, 0.5, 0.2},
      .saturate_factor = {1.5, 2.0, 3.0, 5.0, 20.0},
  };
  return table;
}

Image speckle_noise(const Image& img, double sigma, std::uint64_t seed) {
  require(sigma >= 0.0, fmt::format("speckle sigma must be >= 0, got {}", sigma));
  if (sigma == 0.0) return img;
  Rng rng(seed);
  Image out = img;
  for (auto& p : out.pixels) p = clip01(p + p * sigma * rng.normal());
  return out;
}

std::vector<double> gaussian_kernel(double sigma) {
  require(sigma >= 0.0, fmt::format("blur sigma must be >= 0, got {}", sigma));
  if (sigma == 0.0) return {1.0};
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * r + 1);
  double total = 0.0;
  for (int k = -r; k <= r; ++k) {
    taps[k + r] = std::exp(-0.5 * k * k / (sigma * sigma));
    total += taps[k + r];
  }
  for (auto& t : taps) t /= total;
  return taps;
}

Image gaussian_blur(const Image& img, double sigma) {
  const auto taps = gaussian_kernel(sigma);
  if (taps.size() == 1) return img;
  const int h = img.height, w = img.width;
  Image out = img;
  std::vector<double> plane(static_cast<std::size_t>(h) * w);
  for (int c = 0; c < Image::kChannels; ++c) {
    for (int i = 0; i < h * w; ++i) plane[i] = img.pixels[i * Image::kChannels + c];
    blur_plane(plane, h, w, taps);
    for (int i = 0; i < h * w; ++i) out.pixels[i * Image::kChannels + c] = clip01(plane[i]);
  }
  return out;
}

std::vector<std::uint8_t> spatter_mask(int height, int width, double threshold, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> field(static_cast<std::size_t>(height) * width);
  for (auto& v : field) v = rng.normal();
  // Splash blobs scale with the image.
  blur_plane(field, height, width, gaussian_kernel(std::max(1.0, std::min(height, width) / 10.0)));
  double mean = 0.0;
  for (double v : field) mean += v;
  mean /= field.size();
  double var = 0.0;
  for (double v : field) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / field.size());
  std::vector<std::uint8_t> mask(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) mask[i] = sd > 0.0 && (field[i] - mean) / sd > threshold;
  return mask;
}

Image spatter(const Image& img, int severity, std::uint64_t seed, const SeverityTable& table) {
  check_level(severity);
  const auto mask = spatter_mask(img.height, img.width, table.spatter_threshold[severity - 1], seed);
  // Muddy liquid tint, jittered per seed but not per severity so that
  // higher levels only add covered pixels.
  Rng tint_rng(mix_seed(seed, "spatter-tint"));
  const std::array<double, 3> tint{0.40 + 0.1 * tint_rng.uniform(), 0.30 + 0.1 * tint_rng.uniform(),
                                   0.20 + 0.1 * tint_rng.uniform()};
  constexpr double kOpacity = 0.7;
  Image out = img;
  for (int i = 0; i < img.height * img.width; ++i) {
    if (!mask[i]) continue;
    for (int c = 0; c < Image::kChannels; ++c) {
      float& p = out.pixels[i * Image::kChannels + c];
      p = clip01((1.0 - kOpacity) * p + kOpacity * tint[c]);
    }
  }
  return out;
}

Image scale_saturation(const Image& img, double factor) {
  require(factor >= 0.0, fmt::format("saturation factor must be >= 0, got {}", factor));
  Image out = img;
  for (std::size_t i = 0; i < img.pixels.size(); i += Image::kChannels) {
    Hsv c = rgb_to_hsv(img.pixels[i], img.pixels[i + 1], img.pixels[i + 2]);
    if (c.s == 0.0) continue;
    c.s = std::clamp(c.s * factor, 0.0, 1.0);
    const auto rgb = hsv_to_rgb(c);
    for (int k = 0; k < 3; ++k) out.pixels[i + k] = clip01(rgb[k]);
  }
  return out;
}

Image saturate(const Image& img, int severity, const SeverityTable& table) {
  check_level(severity);
  return scale_saturation(img, table.saturate_factor[severity - 1]);
}

Image corrupt(const Image& img, ErrorKind kind, int severity, std::uint64_t seed, SeverityScale scale,
              const SeverityTable& table) {
  if (scale == SeverityScale::kSpnSweep) {
    require(kind == ErrorKind::kSpN, "the sigma sweep scale applies to speckle noise only");
    require(severity >= 1 && severity <= static_cast<int>(kSpeckleSweep.size()),
            fmt::format("sweep level {} outside 1..{}", severity, kSpeckleSweep.size()));
    return speckle_noise(img, kSpeckleSweep[severity - 1], seed);
  }
  check_level(severity);
  switch (kind) {
    case ErrorKind::kSpN: return speckle_noise(img, table.speckle_sigma[severity - 1], seed);
    case ErrorKind::kGaB: return gaussian_blur(img, table.blur_sigma[severity - 1]);
    case ErrorKind::kSpat: return spatter(img, severity, seed, table);
    case ErrorKind::kSat: return saturate(img, severity, table);
    default: fail(ErrorCode::kValidation, fmt::format("'{}' is not a corruption kind", kind_name(kind)));
  }
}

Image corrupt(const Image& img, const ErrorSource& source, std::uint64_t seed, const SeverityTable& table) {
  require(source.family() == ErrorFamily::kOod,
          fmt::format("source '{}' is not an out-of-domain corruption", source.id()));
  return corrupt(img, source.kind(), source.severity(), seed, source.scale(), table);
}

double mean_squared_error(const Image& a, const Image& b) {
  require(a.same_shape(b), "mse needs images of equal shape");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = static_cast<double>(a.pixels[i]) - b.pixels[i];
    acc += d * d;
  }
  return a.pixels.empty() ? 0.0 : acc / a.pixels.size();
}

}  // namespace blindspot

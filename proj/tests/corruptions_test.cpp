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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "blindspot/corruptions.hpp"
#include "blindspot/rng.hpp"
#include "test_util.hpp"

namespace blindspot {
namespace {

constexpr ErrorKind kKinds[] = {ErrorKind::kSpN, ErrorKind::kGaB, ErrorKind::kSpat, ErrorKind::kSat};

Image random_image(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  Image img(h, w);
  for (auto& p : img.pixels) p = static_cast<float>(rng.uniform());
  return img;
}

Image gray_image(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  Image img(h, w);
  for (std::size_t i = 0; i < img.size(); i += 3) {
    const auto v = static_cast<float>(rng.uniform());
    img.pixels[i] = img.pixels[i + 1] = img.pixels[i + 2] = v;
  }
  return img;
}

void expect_near_image(const Image& a, const Image& b, double tol) {
  ASSERT_TRUE(a.same_shape(b));
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a.pixels[i], b.pixels[i], tol) << "at " << i;
}

// Direct 2-D convolution with mirrored borders, written out longhand.
Image blur_oracle(const Image& img, double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<std::vector<double>> k(2 * r + 1, std::vector<double>(2 * r + 1));
  double total = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      k[dy + r][dx + r] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      total += k[dy + r][dx + r];
    }
  }
  auto mirror = [](int i, int n) {
    while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
    return i;
  };
  Image out(img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int dy = -r; dy <= r; ++dy) {
          for (int dx = -r; dx <= r; ++dx) {
            acc += k[dy + r][dx + r] / total * img.at(mirror(y + dy, img.height), mirror(x + dx, img.width), c);
          }
        }
        out.at(y, x, c) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
      }
    }
  }
  return out;
}

TEST(Speckle, ZeroSigmaIsIdentity) {
  const auto img = random_image(8, 8, 1);
  EXPECT_EQ(speckle_noise(img, 0.0, 5), img);
}

TEST(Speckle, MatchesMultiplicativeFormula) {
  const auto img = random_image(6, 5, 2);
  const double sigma = 0.3;
  const auto out = speckle_noise(img, sigma, 77);
  Rng rng(77);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double p = img.pixels[i];
    const double want = std::clamp(p + p * sigma * rng.normal(), 0.0, 1.0);
    ASSERT_NEAR(out.pixels[i], want, 1e-6);
  }
}

TEST(Speckle, WhitePixelWithPositiveDrawClips) {
  Image img(4, 4, 1.0f);
  const auto out = speckle_noise(img, 0.5, 3);
  Rng rng(3);
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (rng.normal() > 0) EXPECT_EQ(out.pixels[i], 1.0f);
  }
}

TEST(Speckle, NegativeSigmaRejected) {
  EXPECT_BS_ERROR(speckle_noise(Image(2, 2), -0.1, 0), ErrorCode::kValidation);
}

TEST(Speckle, SweepMseStrictlyIncreases) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto img = random_image(16, 16, seed);
    double prev = -1.0;
    for (double sigma : kSpeckleSweep) {
      const double mse = mean_squared_error(speckle_noise(img, sigma, 99), img);
      EXPECT_GT(mse, prev) << "sigma " << sigma;
      prev = mse;
    }
  }
}

TEST(Blur, KernelSumsToOne) {
  for (double s : {0.4, 1.0, 1.5, 3.0}) {
    const auto k = gaussian_kernel(s);
    EXPECT_EQ(k.size(), 2 * static_cast<std::size_t>(std::ceil(3 * s)) + 1);
    EXPECT_NEAR(std::accumulate(k.begin(), k.end(), 0.0), 1.0, 1e-9);
  }
}

TEST(Blur, ZeroSigmaAndConstantImage) {
  const auto img = random_image(7, 9, 4);
  EXPECT_EQ(gaussian_blur(img, 0.0), img);
  Image flat(9, 7, 0.37f);
  expect_near_image(gaussian_blur(flat, 1.5), flat, 1e-6);
}

TEST(Blur, MatchesDirectConvolution) {
  for (double s : {0.6, 1.0, 2.5}) {
    const auto img = random_image(9, 11, 5);
    expect_near_image(gaussian_blur(img, s), blur_oracle(img, s), 1e-5);
  }
}

TEST(Blur, RadiusLargerThanImage) {
  const auto img = random_image(3, 2, 6);
  expect_near_image(gaussian_blur(img, 2.0), blur_oracle(img, 2.0), 1e-5);
}

TEST(Spatter, CoverageGrowsWithSeverity) {
  for (std::uint64_t seed : {0u, 1u, 2u, 3u}) {
    std::vector<std::size_t> covered;
    for (double t : SeverityTable::small_images().spatter_threshold) {
      const auto m = spatter_mask(32, 32, t, seed);
      covered.push_back(std::accumulate(m.begin(), m.end(), std::size_t{0}));
    }
    for (std::size_t i = 1; i < covered.size(); ++i) EXPECT_GE(covered[i], covered[i - 1]);
    EXPECT_GT(covered.back(), covered.front());
  }
}

TEST(Spatter, OnlyMaskedPixelsChange) {
  const auto img = random_image(16, 16, 8);
  const auto out = spatter(img, 3, 21);
  const auto mask = spatter_mask(16, 16, SeverityTable::small_images().spatter_threshold[2], 21);
  for (int i = 0; i < 16 * 16; ++i) {
    if (mask[i]) continue;
    for (int c = 0; c < 3; ++c) EXPECT_EQ(out.pixels[i * 3 + c], img.pixels[i * 3 + c]);
  }
}

TEST(Saturate, UnitFactorIsIdentity) {
  const auto img = random_image(8, 8, 9);
  expect_near_image(scale_saturation(img, 1.0), img, 1e-6);
}

TEST(Saturate, GrayscaleIsFixedPoint) {
  const auto img = gray_image(8, 8, 10);
  for (int s = 1; s <= 5; ++s) expect_near_image(saturate(img, s), img, 1e-6);
}

TEST(Saturate, ZeroFactorGivesGray) {
  const auto out = scale_saturation(random_image(5, 5, 11), 0.0);
  for (std::size_t i = 0; i < out.size(); i += 3) {
    EXPECT_NEAR(out.pixels[i], out.pixels[i + 1], 1e-6);
    EXPECT_NEAR(out.pixels[i], out.pixels[i + 2], 1e-6);
  }
}

TEST(Saturate, PreservesValueChannel) {
  // HSV value is max(r,g,b); scaling saturation leaves it alone.
  const auto img = random_image(6, 6, 12);
  const auto out = scale_saturation(img, 2.0);
  for (std::size_t i = 0; i < img.size(); i += 3) {
    const float a = std::max({img.pixels[i], img.pixels[i + 1], img.pixels[i + 2]});
    const float b = std::max({out.pixels[i], out.pixels[i + 1], out.pixels[i + 2]});
    EXPECT_NEAR(a, b, 1e-5);
  }
}

TEST(Corrupt, DispatchMatchesDirectCall) {
  const auto img = random_image(8, 8, 13);
  const auto& t = SeverityTable::small_images();
  EXPECT_EQ(corrupt(img, ErrorKind::kSpN, 1, 4), speckle_noise(img, t.speckle_sigma[0], 4));
  EXPECT_EQ(corrupt(img, ErrorKind::kGaB, 2, 4), gaussian_blur(img, t.blur_sigma[1]));
  EXPECT_EQ(corrupt(img, ErrorKind::kSat, 3, 4), saturate(img, 3));
  EXPECT_EQ(corrupt(img, ErrorKind::kSpat, 4, 4), spatter(img, 4, 4));
  EXPECT_EQ(corrupt(img, ErrorKind::kSpN, 2, 4, SeverityScale::kSpnSweep), speckle_noise(img, 0.06, 4));
  EXPECT_EQ(corrupt(img, ErrorSource::corruption(ErrorKind::kGaB, 5), 4), gaussian_blur(img, t.blur_sigma[4]));
}

TEST(Corrupt, SeverityDomain) {
  const auto img = random_image(4, 4, 14);
  for (auto k : kKinds) {
    EXPECT_NO_THROW(corrupt(img, k, 5, 0));
    EXPECT_BS_ERROR(corrupt(img, k, 0, 0), ErrorCode::kValidation);
    EXPECT_BS_ERROR(corrupt(img, k, 6, 0), ErrorCode::kValidation);
  }
  EXPECT_BS_ERROR(corrupt(img, ErrorKind::kPgd, 1, 0), ErrorCode::kValidation);
  EXPECT_BS_ERROR(corrupt(img, ErrorKind::kGaB, 1, 0, SeverityScale::kSpnSweep), ErrorCode::kValidation);
  EXPECT_BS_ERROR(corrupt(img, ErrorKind::kSpN, 5, 0, SeverityScale::kSpnSweep), ErrorCode::kValidation);
  EXPECT_BS_ERROR(corrupt(img, ErrorSource::in_domain(), 0), ErrorCode::kValidation);
}

// Range, shape and determinism over every kind, severity and table.
TEST(CorruptProperty, RangeShapeDeterminism) {
  for (const auto* table : {&SeverityTable::small_images(), &SeverityTable::large_images()}) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const auto img = random_image(5 + static_cast<int>(seed), 12, seed);
      for (auto k : kKinds) {
        for (int s = 1; s <= 5; ++s) {
          const auto out = corrupt(img, k, s, seed, SeverityScale::kBenchmark, *table);
          ASSERT_TRUE(out.same_shape(img));
          ASSERT_EQ(out.size(), img.size());
          for (float p : out.pixels) ASSERT_TRUE(p >= 0.0f && p <= 1.0f);
          ASSERT_EQ(out, corrupt(img, k, s, seed, SeverityScale::kBenchmark, *table));
        }
      }
    }
  }
}

TEST(CorruptProperty, MseMonotoneInSeverity) {
  for (const auto* table : {&SeverityTable::small_images(), &SeverityTable::large_images()}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto img = random_image(16, 16, 100 + seed);
      for (auto k : kKinds) {
        double prev = -1.0;
        for (int s = 1; s <= 5; ++s) {
          const double mse = mean_squared_error(corrupt(img, k, s, seed, SeverityScale::kBenchmark, *table), img);
          if (k == ErrorKind::kSpN || k == ErrorKind::kGaB) {
            EXPECT_GT(mse, prev) << kind_name(k) << " severity " << s;
          } else {
            EXPECT_GE(mse, prev) << kind_name(k) << " severity " << s;
          }
          prev = mse;
        }
      }
    }
  }
}

}  // namespace
}  // namespace blindspot

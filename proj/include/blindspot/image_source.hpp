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
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "blindspot/types.hpp"

namespace blindspot {

struct LabeledImage {
  std::string id;
  int label = 0;
  Image image;
};

/// A labeled set of clean images addressed by stable id.
class ImagePool {
 public:
  ImagePool() = default;
  ImagePool(std::string name, int num_classes, std::vector<LabeledImage> items);

  const std::string& name() const { return name_; }
  int num_classes() const { return num_classes_; }
  std::size_t size() const { return items_.size(); }
  const std::vector<LabeledImage>& items() const { return items_; }
  std::vector<std::string> ids() const;

  /// Throws kNotFound for an unknown id.
  const LabeledImage& get(const std::string& id) const;
  bool contains(const std::string& id) const { return index_.contains(id); }

 private:
  std::string name_;
  int num_classes_ = 0;
  std::vector<LabeledImage> items_;
  std::map<std::string, std::size_t> index_;
};

struct GratingOptions {
  int count = 2000;
  int num_classes = 6;
  int image_size = 16;
  /// Orientation jitter as a fraction of the gap between class angles.
  double angle_jitter = 0.6;
  double pixel_noise = 0.15;
};

/// Oriented sinusoidal gratings; the class is the orientation bin. Frequency,
/// phase, contrast and colour tint vary per image. Ids hash the virtual path
/// "synthetic/<name>/<seed>/<index>".
ImagePool synthetic_gratings(const std::string& name, const GratingOptions& options, std::uint64_t seed);

/// Loads <root>/<class_name>/*.ppm (binary P6, 8-bit), classes in sorted
/// directory order. Ids hash the path relative to root. Images must share one
/// size.
ImagePool load_ppm_folder(const std::filesystem::path& root);

Image read_ppm(const std::filesystem::path& path);
void write_ppm(const Image& img, const std::filesystem::path& path);

}  // namespace blindspot

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

#include "blindspot/image_source.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <fmt/format.h>

#include "blindspot/digest.hpp"
#include "blindspot/error.hpp"
#include "blindspot/rng.hpp"

namespace blindspot {

ImagePool::ImagePool(std::string name, int num_classes, std::vector<LabeledImage> items)
    : name_(std::move(name)), num_classes_(num_classes), items_(std::move(items)) {
  require(num_classes_ >= 2, "an image pool needs at least two classes");
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const auto& it = items_[i];
    require(it.label >= 0 && it.label < num_classes_,
            fmt::format("image '{}' has label {} outside 0..{}", it.id, it.label, num_classes_ - 1));
    if (!index_.emplace(it.id, i).second) {
      fail(ErrorCode::kValidation, fmt::format("duplicate image id '{}'", it.id));
    }
  }
}

std::vector<std::string> ImagePool::ids() const {
  std::vector<std::string> out;
  out.reserve(items_.size());
  for (const auto& it : items_) out.push_back(it.id);
  return out;
}

const LabeledImage& ImagePool::get(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) fail(ErrorCode::kNotFound, fmt::format("image id '{}' not in pool '{}'", id, name_));
  return items_[it->second];
}

ImagePool synthetic_gratings(const std::string& name, const GratingOptions& o, std::uint64_t seed) {
  require(o.count >= 1 && o.num_classes >= 2 && o.image_size >= 4, "bad grating options");
  std::vector<LabeledImage> items;
  items.reserve(o.count);
  const double gap = std::numbers::pi / o.num_classes;
  const int s = o.image_size;
  for (int i = 0; i < o.count; ++i) {
    const std::string path = fmt::format("synthetic/{}/{}/{}", name, seed, i);
    Rng rng(mix_seed(seed, path));
    LabeledImage item;
    item.id = image_id_from_path(path);
    item.label = static_cast<int>(rng.below(o.num_classes));
    const double theta = (item.label + o.angle_jitter * rng.uniform(-1.0, 1.0)) * gap;
    const double freq = rng.uniform(1.5, 3.0);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double contrast = rng.uniform(0.15, 0.45);
    const double base = rng.uniform(0.3, 0.7);
    const std::array<double, 3> tint{rng.uniform(0.6, 1.0), rng.uniform(0.6, 1.0), rng.uniform(0.6, 1.0)};
    const double cx = std::cos(theta), cy = std::sin(theta);
    item.image = Image(s, s);
    for (int y = 0; y < s; ++y) {
      for (int x = 0; x < s; ++x) {
        const double t = 2.0 * std::numbers::pi * freq * (x * cx + y * cy) / s + phase;
        const double v = base + contrast * std::sin(t);
        for (int c = 0; c < 3; ++c) {
          item.image.at(y, x, c) = static_cast<float>(std::clamp(v * tint[c] + o.pixel_noise * rng.normal(), 0.0, 1.0));
        }
      }
    }
    items.push_back(std::move(item));
  }
  return ImagePool(name, o.num_classes, std::move(items));
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kNotFound, fmt::format("cannot open image '{}'", path.string()));
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  auto skip_comments = [&] {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string line;
      std::getline(in, line);
      in >> std::ws;
    }
  };
  in >> magic;
  skip_comments();
  in >> w;
  skip_comments();
  in >> h;
  skip_comments();
  in >> maxval;
  in.get();
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255) {
    fail(ErrorCode::kIo, fmt::format("'{}' is not an 8-bit binary PPM", path.string()));
  }
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    fail(ErrorCode::kIo, fmt::format("truncated image '{}'", path.string()));
  }
  Image img(h, w);
  for (std::size_t i = 0; i < raw.size(); ++i) img.pixels[i] = raw[i] / 255.0f;
  return img;
}

void write_ppm(const Image& img, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, fmt::format("cannot write '{}'", path.string()));
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  for (float p : img.pixels) out.put(static_cast<char>(std::lround(std::clamp(p, 0.0f, 1.0f) * 255.0f)));
}

ImagePool load_ppm_folder(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) fail(ErrorCode::kNotFound, fmt::format("image folder '{}' not found", root.string()));
  std::vector<fs::path> class_dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) class_dirs.push_back(e.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());
  std::vector<LabeledImage> items;
  for (std::size_t label = 0; label < class_dirs.size(); ++label) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(class_dirs[label])) {
      if (e.is_regular_file() && e.path().extension() == ".ppm") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      LabeledImage item;
      item.id = image_id_from_path(fs::relative(f, root).generic_string());
      item.label = static_cast<int>(label);
      item.image = read_ppm(f);
      if (!items.empty() && !item.image.same_shape(items.front().image)) {
        fail(ErrorCode::kValidation, fmt::format("image '{}' differs in size from the rest of the folder", f.string()));
      }
      items.push_back(std::move(item));
    }
  }
  if (items.empty()) fail(ErrorCode::kValidation, fmt::format("no .ppm images under '{}'", root.string()));
  return ImagePool(root.filename().string(), static_cast<int>(class_dirs.size()), std::move(items));
}

}  // namespace blindspot

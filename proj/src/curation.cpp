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

#include "blindspot/curation.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "blindspot/attacks.hpp"
#include "blindspot/digest.hpp"
#include "blindspot/error.hpp"
#include "blindspot/persistence.hpp"
#include "blindspot/rng.hpp"

namespace blindspot {
namespace {

constexpr std::string_view kDatasetSchema = "blindspot-dataset v1";

std::string records_csv(const CuratedDataset& ds) {
  std::string out = "original_id,label,c_E,logits\n";
  for (const auto& r : ds.records) {
    out += fmt::format("{},{},{},", r.original_id, r.label, r.correctness);
    for (std::size_t j = 0; j < r.mentee_logits.size(); ++j) {
      if (j) out += ";";
      out += fmt::format("{:.17g}", r.mentee_logits[j]);
    }
    out += "\n";
  }
  return out;
}

std::string packed_pixels(const CuratedDataset& ds) {
  std::string out;
  for (const auto& r : ds.records) {
    out.append(reinterpret_cast<const char*>(r.image.pixels.data()), r.image.pixels.size() * sizeof(float));
  }
  return out;
}

std::string digest_of(const std::string& csv, const std::string& pixels) {
  Sha256 h;
  h.update(csv);
  h.update(pixels);
  return h.hex();
}

std::map<std::string, std::string> parse_meta(const std::string& text, const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (line != kDatasetSchema) {
    fail(ErrorCode::kSchema, fmt::format("'{}' has schema '{}', expected '{}'", path.string(), line, kDatasetSchema));
  }
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

}  // namespace

int CuratedDataset::n_correct() const {
  int n = 0;
  for (const auto& r : records) n += r.correctness;
  return n;
}

std::vector<int> CuratedDataset::correctness_bits() const {
  std::vector<int> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.correctness);
  return out;
}

std::vector<Image> CuratedDataset::images() const {
  std::vector<Image> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.image);
  return out;
}

nn::Tensor CuratedDataset::logits() const {
  require(!records.empty(), "dataset has no records");
  const int k = static_cast<int>(records.front().mentee_logits.size());
  nn::Tensor out({static_cast<int>(records.size()), k});
  for (std::size_t i = 0; i < records.size(); ++i) {
    std::copy(records[i].mentee_logits.begin(), records[i].mentee_logits.end(), out.data() + i * k);
  }
  return out;
}

std::string CuratedDataset::content_digest() const { return digest_of(records_csv(*this), packed_pixels(*this)); }

void CuratedDataset::validate() const {
  for (const auto& r : records) {
    require(r.source == source && r.split == split,
            fmt::format("record '{}' does not belong to {}/{}", r.original_id, source.id(), split_name(split)));
    require(static_cast<int>(r.mentee_logits.size()) == num_classes,
            fmt::format("record '{}' has {} logits, expected {}", r.original_id, r.mentee_logits.size(), num_classes));
    require(r.correctness == correctness(r.mentee_logits, r.label),
            fmt::format("record '{}' has c_E={} inconsistent with its logits", r.original_id, r.correctness));
  }
}

std::size_t train_count(std::size_t n) { return (n * SplitManifest::kTrainPercent + 50) / 100; }

SplitManifest split_dataset(std::span<const std::string> original_ids, std::uint64_t seed,
                            const std::string& dataset_name) {
  std::vector<std::string> ids(original_ids.begin(), original_ids.end());
  std::sort(ids.begin(), ids.end());
  const auto dup = std::adjacent_find(ids.begin(), ids.end());
  if (dup != ids.end()) fail(ErrorCode::kValidation, fmt::format("duplicate original id '{}'", *dup));
  require(ids.size() >= 10, fmt::format("split needs at least 10 ids, got {}", ids.size()));
  Rng rng(mix_seed(seed, "split"));
  rng.shuffle(ids);
  SplitManifest m;
  m.dataset_name = dataset_name;
  m.seed = seed;
  const auto cut = static_cast<std::ptrdiff_t>(train_count(ids.size()));
  m.train_ids.assign(ids.begin(), ids.begin() + cut);
  m.test_ids.assign(ids.begin() + cut, ids.end());
  return m;
}

std::uint64_t sample_seed(std::uint64_t seed, const std::string& original_id, const ErrorSource& source) {
  return mix_seed(mix_seed(seed, original_id), source.id());
}

CuratedDataset build_error_dataset(const SplitManifest& manifest, Split split, const ErrorSource& source,
                                   const ImagePool& pool, const Mentee& mentee, std::uint64_t seed,
                                   const CurationOptions& options) {
  const auto& ids = manifest.ids(split);
  if (ids.empty()) {
    fail(ErrorCode::kValidation, fmt::format("{} split of '{}' is empty", split_name(split), manifest.dataset_name));
  }
  require(pool.num_classes() == mentee.num_classes(),
          fmt::format("pool has {} classes but mentee '{}' has {}", pool.num_classes(), mentee.id(), mentee.num_classes()));
  const SeverityTable& table = options.severities ? *options.severities : SeverityTable::small_images();

  CuratedDataset ds;
  ds.dataset_name = manifest.dataset_name;
  ds.mentee_id = mentee.id();
  ds.source = source;
  ds.split = split;
  ds.num_classes = mentee.num_classes();
  std::vector<Image> images;
  std::vector<int> labels;
  std::vector<std::uint64_t> seeds;
  for (const auto& id : ids) {
    const auto& item = pool.get(id);
    images.push_back(item.image);
    labels.push_back(item.label);
    seeds.push_back(sample_seed(seed, id, source));
  }
  switch (source.family()) {
    case ErrorFamily::kId:
      break;
    case ErrorFamily::kOod:
      for (std::size_t i = 0; i < images.size(); ++i) images[i] = corrupt(images[i], source, seeds[i], table);
      break;
    case ErrorFamily::kAa: {
      const std::size_t chunk = static_cast<std::size_t>(std::max(1, options.attack_batch));
      for (std::size_t start = 0; start < images.size(); start += chunk) {
        const std::size_t n = std::min(chunk, images.size() - start);
        auto adv = attack_batch(mentee, std::span(images).subspan(start, n), std::span(labels).subspan(start, n),
                                source, std::span(seeds).subspan(start, n));
        std::move(adv.begin(), adv.end(), images.begin() + static_cast<std::ptrdiff_t>(start));
      }
      break;
    }
  }
  const nn::Tensor logits = mentee.predict_logits(images);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    SampleRecord r;
    r.original_id = ids[i];
    r.image = std::move(images[i]);
    r.label = labels[i];
    const auto row = logits.row(i);
    r.mentee_logits.assign(row.begin(), row.end());
    r.correctness = correctness(row, r.label);
    r.source = source;
    r.split = split;
    ds.records.push_back(std::move(r));
  }
  if (ds.n_wrong() == 0) ds.warnings.push_back("no mentee-wrong samples; balanced batching impossible");
  if (ds.n_correct() == 0) ds.warnings.push_back("no mentee-correct samples; balanced batching impossible");
  return ds;
}

CuratedDataset relabel_dataset(const CuratedDataset& dataset, const Mentee& mentee) {
  require(!dataset.records.empty(), "cannot relabel an empty dataset");
  require(dataset.num_classes == mentee.num_classes(), "relabel mentee has a different class count");
  CuratedDataset out = dataset;
  out.mentee_id = mentee.id();
  out.warnings.clear();
  const nn::Tensor logits = mentee.predict_logits(dataset.images());
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    auto& r = out.records[i];
    const auto row = logits.row(i);
    r.mentee_logits.assign(row.begin(), row.end());
    r.correctness = correctness(row, r.label);
  }
  if (out.n_wrong() == 0) out.warnings.push_back("no mentee-wrong samples; balanced batching impossible");
  if (out.n_correct() == 0) out.warnings.push_back("no mentee-correct samples; balanced batching impossible");
  return out;
}

CuratedDataset concat_datasets(std::span<const CuratedDataset> parts) {
  require(!parts.empty(), "nothing to concatenate");
  CuratedDataset out;
  out.dataset_name = parts.front().dataset_name;
  out.mentee_id = parts.front().mentee_id;
  out.source = parts.front().source;
  out.split = parts.front().split;
  out.num_classes = parts.front().num_classes;
  for (const auto& p : parts) {
    require(p.mentee_id == out.mentee_id && p.split == out.split && p.num_classes == out.num_classes,
            "joint datasets must share mentee, split and class count");
    out.records.insert(out.records.end(), p.records.begin(), p.records.end());
  }
  return out;
}

std::vector<std::vector<int>> balanced_batches(const CuratedDataset& dataset, int batch_size, std::uint64_t seed) {
  require(batch_size >= 2 && batch_size % 2 == 0, fmt::format("batch size must be even and >= 2, got {}", batch_size));
  std::vector<int> correct, wrong;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    (dataset.records[i].correctness ? correct : wrong).push_back(static_cast<int>(i));
  }
  if (correct.empty()) fail(ErrorCode::kEmptyClass, fmt::format("class 'correct' is empty in {}", dataset.source.id()));
  if (wrong.empty()) fail(ErrorCode::kEmptyClass, fmt::format("class 'wrong' is empty in {}", dataset.source.id()));
  const int half = batch_size / 2;
  const std::size_t n_batches = std::max<std::size_t>(1, dataset.records.size() / batch_size);
  const std::size_t need = n_batches * half;
  Rng rng(seed);
  auto draw = [&](std::vector<int> pool) {
    rng.shuffle(pool);
    std::vector<int> out;
    if (pool.size() >= need) {
      out.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(need));
    } else {
      out = pool;
      while (out.size() < need) out.push_back(pool[rng.below(pool.size())]);
      rng.shuffle(out);
    }
    return out;
  };
  const auto c = draw(std::move(correct));
  const auto w = draw(std::move(wrong));
  std::vector<std::vector<int>> batches(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) {
    auto& batch = batches[b];
    batch.insert(batch.end(), c.begin() + b * half, c.begin() + (b + 1) * half);
    batch.insert(batch.end(), w.begin() + b * half, w.begin() + (b + 1) * half);
    rng.shuffle(batch);
  }
  return batches;
}

std::filesystem::path dataset_dir(const std::filesystem::path& root, const std::string& dataset,
                                  const std::string& mentee_id, const ErrorSource& source, Split split) {
  return root / dataset / mentee_id / source.id() / std::string(split_name(split));
}

void write_dataset(const CuratedDataset& ds, const std::filesystem::path& dir, const std::string& input_digest) {
  require(!ds.records.empty(), "refusing to write an empty dataset");
  const std::string csv = records_csv(ds);
  const std::string pixels = packed_pixels(ds);
  const auto& first = ds.records.front().image;
  std::string meta = fmt::format("{}\ndataset={}\nmentee_id={}\nsource={}\nsplit={}\nnum_classes={}\n", kDatasetSchema,
                                 ds.dataset_name, ds.mentee_id, ds.source.id(), split_name(ds.split), ds.num_classes);
  meta += fmt::format("height={}\nwidth={}\nn_records={}\nn_correct={}\nn_wrong={}\ninput_digest={}\n", first.height,
                      first.width, ds.records.size(), ds.n_correct(), ds.n_wrong(), input_digest);
  for (const auto& w : ds.warnings) meta += fmt::format("warning={}\n", w);
  write_text_file(dir / "records.csv", csv);
  write_text_file(dir / "images.f32", pixels);
  write_text_file(dir / "meta.txt", meta);
  // Digest last: its presence marks a complete dataset.
  write_text_file(dir / "digest.txt", digest_of(csv, pixels) + "\n");
}

std::string stored_input_digest(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "digest.txt") || !std::filesystem::exists(dir / "meta.txt")) return "";
  const auto meta = parse_meta(read_text_file(dir / "meta.txt"), dir / "meta.txt");
  auto it = meta.find("input_digest");
  return it == meta.end() ? "" : it->second;
}

CuratedDataset read_dataset(const std::filesystem::path& dir) {
  for (const char* f : {"records.csv", "images.f32", "meta.txt", "digest.txt"}) {
    if (!std::filesystem::exists(dir / f)) {
      fail(ErrorCode::kNotFound, fmt::format("curated dataset '{}' lacks {}; run curate first", dir.string(), f));
    }
  }
  const auto meta = parse_meta(read_text_file(dir / "meta.txt"), dir / "meta.txt");
  auto get = [&](const std::string& k) -> const std::string& {
    auto it = meta.find(k);
    if (it == meta.end()) fail(ErrorCode::kIntegrity, fmt::format("'{}' meta lacks '{}'", dir.string(), k));
    return it->second;
  };
  const std::string csv = read_text_file(dir / "records.csv");
  const std::string pixels = read_text_file(dir / "images.f32");
  std::string recorded = read_text_file(dir / "digest.txt");
  while (!recorded.empty() && std::isspace(static_cast<unsigned char>(recorded.back()))) recorded.pop_back();
  const std::string actual = digest_of(csv, pixels);
  if (recorded != actual) {
    fail(ErrorCode::kIntegrity,
         fmt::format("dataset '{}' digest mismatch: recorded {}, computed {}", dir.string(), recorded, actual));
  }
  CuratedDataset ds;
  int h = 0, w = 0;
  try {
    ds.dataset_name = get("dataset");
    ds.mentee_id = get("mentee_id");
    ds.source = ErrorSource::parse(get("source"));
    ds.split = parse_split(get("split"));
    ds.num_classes = std::stoi(get("num_classes"));
    h = std::stoi(get("height"));
    w = std::stoi(get("width"));
  } catch (const std::logic_error&) {
    fail(ErrorCode::kIntegrity, fmt::format("'{}' meta is malformed", dir.string()));
  }
  for (const auto& [k, v] : meta) {
    if (k == "warning") ds.warnings.push_back(v);
  }
  const std::size_t per = static_cast<std::size_t>(h) * w * Image::kChannels;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    SampleRecord r;
    std::istringstream row(line);
    std::string label, bit, logits;
    std::getline(row, r.original_id, ',');
    std::getline(row, label, ',');
    std::getline(row, bit, ',');
    std::getline(row, logits);
    try {
      r.label = std::stoi(label);
      r.correctness = std::stoi(bit);
      std::istringstream ls(logits);
      std::string v;
      while (std::getline(ls, v, ';')) r.mentee_logits.push_back(std::stod(v));
    } catch (const std::logic_error&) {
      fail(ErrorCode::kIntegrity, fmt::format("malformed record line '{}' in '{}'", line, dir.string()));
    }
    if (offset + per * sizeof(float) > pixels.size()) {
      fail(ErrorCode::kIntegrity, fmt::format("'{}' has fewer pixels than records", dir.string()));
    }
    r.image = Image(h, w);
    std::memcpy(r.image.pixels.data(), pixels.data() + offset, per * sizeof(float));
    offset += per * sizeof(float);
    r.source = ds.source;
    r.split = ds.split;
    ds.records.push_back(std::move(r));
  }
  if (offset != pixels.size()) fail(ErrorCode::kIntegrity, fmt::format("'{}' has trailing pixel data", dir.string()));
  return ds;
}

}  // namespace blindspot

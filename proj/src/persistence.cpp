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

#include "blindspot/persistence.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "blindspot/error.hpp"

namespace blindspot {
namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = end + 1;
  }
  return lines;
}

std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (true) {
    auto end = s.find(sep, pos);
    parts.push_back(s.substr(pos, end == std::string_view::npos ? s.size() - pos : end - pos));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return parts;
}

bool valid_name(std::string_view name) {
  if (name.empty()) return false;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-' || c == '.' || c == '@';
    if (!ok) return false;
  }
  return true;
}

std::uint64_t parse_u64(std::string_view s, std::string_view what) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorCode::kSchema, fmt::format("cannot parse {} from '{}'", what, s));
  }
  return v;
}

double parse_double(std::string_view s, std::string_view what) {
  if (s == "nan") return std::nan("");
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorCode::kSchema, fmt::format("cannot parse {} from '{}'", what, s));
  }
  return v;
}

int parse_version(std::string_view token, std::string_view magic, std::string_view header) {
  if (!header.starts_with(magic)) {
    fail(ErrorCode::kSchema, fmt::format("expected '{}' header, got '{}'", magic, header));
  }
  if (!token.starts_with("v")) {
    fail(ErrorCode::kSchema, fmt::format("missing schema version in '{}'", header));
  }
  return static_cast<int>(parse_u64(token.substr(1), "schema version"));
}

}  // namespace

std::string_view split_name(Split split) { return split == Split::kTrain ? "train" : "test"; }

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "test") return Split::kTest;
  fail(ErrorCode::kValidation, fmt::format("unknown split '{}'", name));
}

double EvaluationReport::recompute_average() const {
  if (per_source.empty()) return std::nan("");
  double sum = 0.0;
  for (const auto& e : per_source) sum += e.balanced_accuracy;
  return sum / static_cast<double>(per_source.size());
}

std::string read_text_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::kNotFound, fmt::format("'{}' does not exist", path.string()));
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, fmt::format("cannot open '{}' for reading", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, fmt::format("cannot open '{}' for writing", path.string()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) fail(ErrorCode::kIo, fmt::format("short write to '{}'", path.string()));
  }
  std::filesystem::rename(tmp, path);
}

void validate_manifest(const SplitManifest& m) {
  if (m.train_ids.empty() && m.test_ids.empty()) fail(ErrorCode::kValidation, "empty manifest");
  require(valid_name(m.dataset_name), fmt::format("invalid dataset name '{}'", m.dataset_name));
  std::set<std::string_view> seen;
  for (const auto* ids : {&m.train_ids, &m.test_ids}) {
    for (const auto& id : *ids) {
      require(valid_name(id), fmt::format("invalid image id '{}'", id));
      if (!seen.insert(id).second) {
        fail(ErrorCode::kValidation, fmt::format("duplicate id '{}' in manifest", id));
      }
    }
  }
}

std::string manifest_to_text(const SplitManifest& m) {
  validate_manifest(m);
  std::string out = fmt::format("blindspot-manifest v{} dataset={} seed={}\n",
                                kManifestSchemaVersion, m.dataset_name, m.seed);
  for (const auto& id : m.train_ids) out += fmt::format("{},train\n", id);
  for (const auto& id : m.test_ids) out += fmt::format("{},test\n", id);
  return out;
}

SplitManifest manifest_from_text(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty()) fail(ErrorCode::kSchema, "manifest has no header");
  const auto header = split_on(lines[0], ' ');
  if (header.size() != 4) fail(ErrorCode::kSchema, "malformed manifest header");
  const int version = parse_version(header[1], "blindspot-manifest", lines[0]);
  if (version != kManifestSchemaVersion) {
    fail(ErrorCode::kSchema, fmt::format("manifest schema version {} != supported {}", version,
                                         kManifestSchemaVersion));
  }
  if (!header[2].starts_with("dataset=") || !header[3].starts_with("seed=")) {
    fail(ErrorCode::kSchema, "malformed manifest header");
  }
  SplitManifest m;
  m.dataset_name = std::string(header[2].substr(8));
  m.seed = parse_u64(header[3].substr(5), "seed");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto parts = split_on(lines[i], ',');
    if (parts.size() != 2) fail(ErrorCode::kSchema, fmt::format("bad manifest row '{}'", lines[i]));
    const Split split = parse_split(parts[1]);
    (split == Split::kTrain ? m.train_ids : m.test_ids).emplace_back(parts[0]);
  }
  validate_manifest(m);
  return m;
}

void write_manifest(const SplitManifest& manifest, const std::filesystem::path& path) {
  write_text_file(path, manifest_to_text(manifest));
}

SplitManifest read_manifest(const std::filesystem::path& path) {
  return manifest_from_text(read_text_file(path));
}

std::string report_to_text(const EvaluationReport& r) {
  std::string out = fmt::format("blindspot-report v{}\n", kReportSchemaVersion);
  out += fmt::format("mentor_id={}\n", r.mentor_id);
  out += fmt::format("mentee_id={}\n", r.mentee_id);
  out += fmt::format("tag={}\n", r.tag);
  out += fmt::format("seed={}\n", r.seed);
  out += fmt::format("timestamp={}\n", r.timestamp);
  out += fmt::format("config_digest={}\n", r.config_digest);
  out += fmt::format("average={:.17g}\n", r.average);
  for (const auto& ex : r.excluded) {
    out += fmt::format("excluded={}:{}\n", ex.source.id(), ex.reason);
  }
  out += "source\tbalanced_accuracy\tn_correct\tn_wrong\n";
  for (const auto& e : r.per_source) {
    out += fmt::format("{}\t{:.17g}\t{}\t{}\n", e.source.id(), e.balanced_accuracy, e.n_correct,
                       e.n_wrong);
  }
  return out;
}

EvaluationReport report_from_text(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty()) fail(ErrorCode::kSchema, "report is empty");
  const auto header = split_on(lines[0], ' ');
  if (header.size() != 2) fail(ErrorCode::kSchema, "malformed report header");
  const int version = parse_version(header[1], "blindspot-report", lines[0]);
  if (version != kReportSchemaVersion) {
    fail(ErrorCode::kSchema, fmt::format("report schema version {} != supported {}", version,
                                         kReportSchemaVersion));
  }
  EvaluationReport r;
  std::size_t i = 1;
  for (; i < lines.size(); ++i) {
    const auto line = lines[i];
    if (line.starts_with("source\t")) break;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(ErrorCode::kSchema, fmt::format("bad report line '{}'", line));
    const auto key = line.substr(0, eq);
    const auto value = line.substr(eq + 1);
    if (key == "mentor_id") r.mentor_id = value;
    else if (key == "mentee_id") r.mentee_id = value;
    else if (key == "tag") r.tag = value;
    else if (key == "seed") r.seed = parse_u64(value, "seed");
    else if (key == "timestamp") r.timestamp = value;
    else if (key == "config_digest") r.config_digest = value;
    else if (key == "average") r.average = parse_double(value, "average");
    else if (key == "excluded") {
      const auto colon = value.find(':');
      r.excluded.push_back({ErrorSource::parse(value.substr(0, colon)),
                            colon == std::string_view::npos ? "" : std::string(value.substr(colon + 1))});
    } else {
      fail(ErrorCode::kSchema, fmt::format("unknown report key '{}'", key));
    }
  }
  if (i == lines.size()) fail(ErrorCode::kSchema, "report has no per-source table");
  for (++i; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cols = split_on(lines[i], '\t');
    if (cols.size() != 4) fail(ErrorCode::kSchema, fmt::format("bad report row '{}'", lines[i]));
    SourceAccuracy e;
    e.source = ErrorSource::parse(cols[0]);
    e.balanced_accuracy = parse_double(cols[1], "balanced accuracy");
    e.n_correct = static_cast<int>(parse_u64(cols[2], "n_correct"));
    e.n_wrong = static_cast<int>(parse_u64(cols[3], "n_wrong"));
    r.per_source.push_back(e);
  }
  return r;
}

void write_report(const EvaluationReport& report, const std::filesystem::path& path) {
  write_text_file(path, report_to_text(report));
}

EvaluationReport read_report(const std::filesystem::path& path) {
  return report_from_text(read_text_file(path));
}

}  // namespace blindspot

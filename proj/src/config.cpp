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

#include "blindspot/config.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "blindspot/corruptions.hpp"
#include "blindspot/digest.hpp"
#include "blindspot/error.hpp"
#include "blindspot/persistence.hpp"

namespace blindspot {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& domain, const json& got) {
  fail(ErrorCode::kConfig, fmt::format("config field {}: expected {}, got {}", field, domain, got.dump()));
}

json nine_sources() {
  json a = json::array();
  for (const auto& s : default_sources()) a.push_back(s.id());
  return a;
}

json mentee_defaults() {
  return {{"id", ""}, {"arch", "toy-cnn"}, {"train_count", 3000}, {"train_path", ""},
          {"epochs", 12},  {"batch_size", 32},     {"lr", 3e-3}};
}

json defaults() {
  json m1 = mentee_defaults();
  m1["id"] = "toy-cnn";
  json m2 = mentee_defaults();
  m2["id"] = "toy-attention";
  m2["arch"] = "toy-attention";
  return {
      {"run_id", "toy"},
      {"preset", ""},
      {"seed", 7},
      {"dataset",
       {{"name", "gratings"},
        {"kind", "synthetic"},
        {"path", ""},
        {"count", 2000},
        {"num_classes", 6},
        {"image_size", 16},
        {"angle_jitter", 0.6},
        {"pixel_noise", 0.15}}},
      {"mentees", json::array({m1, m2})},
      {"curation",
       {{"sources", nine_sources()},
        {"severity_sweep", true},
        {"relabel", true},
        {"attack_batch", 64},
        {"severity_table", "small"}}},
      {"mentor",
       {{"backbone", "toy-cnn"},
        {"train_sources", json::array({"ID", "OOD-SpN-1", "AA-PGD-eps1"})},
        {"joint", false},
        {"init_from_mentee", false},
        {"epochs", 30},
        {"batch_size", 32},
        {"lr", 3e-3},
        {"weight_decay", 0.01},
        {"q", 1.0},
        {"temperature", 1.0},
        {"loss_mode", "standard"},
        {"seeds", json::array({0})},
        {"threshold", 0.5}}},
      {"eval",
       {{"baselines", true},
        {"landscape_magnitudes", json::array({0.0, 0.1, 0.25, 0.5, 1.0})},
        {"landscape_seed", 1},
        {"embeddings_per_class", 50}}},
  };
}

json preset_patch(const std::string& name) {
  if (name.empty()) return json::object();
  if (name == "supermentor-toy") {
    return {{"mentor", {{"backbone", "toy-attention"}, {"train_sources", json::array({"AA-PIFGSM-eps1"})},
                        {"lr", 1e-3}}}};
  }
  if (name == "ablate-no-Ld") return {{"mentor", {{"loss_mode", "no-Ld"}}}};
  if (name == "joint-all-sources") return {{"mentor", {{"joint", true}, {"train_sources", nine_sources()}}}};
  fail(ErrorCode::kConfig, fmt::format("config field preset: expected one of supermentor-toy, ablate-no-Ld, "
                                       "joint-all-sources, got \"{}\"",
                                       name));
}

// Objects merge key by key against the template; anything else replaces.
void merge(json& base, const json& patch, const std::string& path) {
  if (!patch.is_object()) fail(ErrorCode::kConfig, fmt::format("config {} must be an object", path.empty() ? "document" : path));
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string field = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) fail(ErrorCode::kConfig, fmt::format("unknown config field {}", field));
    json& slot = base[it.key()];
    if (slot.is_object()) {
      merge(slot, it.value(), field);
    } else if (it.key() == "mentees" && it.value().is_array()) {
      json list = json::array();
      int i = 0;
      for (const auto& entry : it.value()) {
        json m = mentee_defaults();
        merge(m, entry, fmt::format("{}.{}", field, i++));
        list.push_back(m);
      }
      slot = list;
    } else {
      slot = it.value();
    }
  }
}

void apply_override(json& doc, const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    fail(ErrorCode::kConfig, fmt::format("override '{}' is not of the form dot.path=value", text));
  }
  const std::string path = text.substr(0, eq);
  const std::string raw = text.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(key);
      } catch (const std::logic_error&) {
        fail(ErrorCode::kConfig, fmt::format("unknown config field {}", path));
      }
      if (idx >= node->size()) fail(ErrorCode::kConfig, fmt::format("unknown config field {}", path));
      node = &(*node)[idx];
    } else if (node->is_object() && node->contains(key)) {
      node = &(*node)[key];
    } else {
      fail(ErrorCode::kConfig, fmt::format("unknown config field {}", path));
    }
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = value;
}

std::string str(const json& j, const std::string& field) {
  if (!j.is_string()) bad(field, "a string", j);
  return j.get<std::string>();
}

bool boolean(const json& j, const std::string& field) {
  if (!j.is_boolean()) bad(field, "true or false", j);
  return j.get<bool>();
}

long long integer(const json& j, const std::string& field, long long lo, long long hi = 1LL << 40) {
  if (!j.is_number_integer() || j.get<long long>() < lo || j.get<long long>() > hi) {
    bad(field, fmt::format("an integer in [{}, {}]", lo, hi), j);
  }
  return j.get<long long>();
}

double real(const json& j, const std::string& field) {
  if (!j.is_number() || !std::isfinite(j.get<double>())) bad(field, "a finite number", j);
  return j.get<double>();
}

std::vector<ErrorSource> source_list(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) bad(field, "a non-empty list of error source ids", j);
  std::vector<ErrorSource> out;
  for (const auto& e : j) {
    const std::string id = str(e, field);
    try {
      out.push_back(ErrorSource::parse(id));
    } catch (const Error&) {
      bad(field, "error source ids like ID, OOD-SpN-1, AA-PGD-eps1, AA-CW-lr0.01", e);
    }
    const ErrorSource& s = out.back();
    if (s.family() == ErrorFamily::kOod) {
      const int levels = s.scale() == SeverityScale::kSpnSweep ? static_cast<int>(kSpeckleSweep.size())
                                                                : SeverityTable::kLevels;
      if (s.severity() > levels) bad(field, fmt::format("severities 1..{} for {}", levels, s.id()), e);
    }
    if (std::count(out.begin(), out.end(), out.back()) > 1) bad(field, "distinct sources", j);
  }
  return out;
}

ExperimentConfig from_json(const json& d) {
  ExperimentConfig c;
  c.run_id = str(d["run_id"], "run_id");
  if (!std::regex_match(c.run_id, std::regex("[A-Za-z0-9._-]+")) || c.run_id == "." || c.run_id == "..") {
    bad("run_id", "a name of letters, digits, '.', '_' or '-'", d["run_id"]);
  }
  c.preset = str(d["preset"], "preset");
  c.seed = static_cast<std::uint64_t>(integer(d["seed"], "seed", 0));

  const json& ds = d["dataset"];
  c.dataset.name = str(ds["name"], "dataset.name");
  if (!std::regex_match(c.dataset.name, std::regex("[A-Za-z0-9._-]+"))) {
    bad("dataset.name", "a name of letters, digits, '.', '_' or '-'", ds["name"]);
  }
  c.dataset.kind = str(ds["kind"], "dataset.kind");
  if (c.dataset.kind != "synthetic" && c.dataset.kind != "ppm") bad("dataset.kind", "synthetic or ppm", ds["kind"]);
  c.dataset.path = str(ds["path"], "dataset.path");
  if (c.dataset.kind == "ppm" && c.dataset.path.empty()) bad("dataset.path", "a folder for ppm datasets", ds["path"]);
  c.dataset.count = static_cast<int>(integer(ds["count"], "dataset.count", 10));
  c.dataset.num_classes = static_cast<int>(integer(ds["num_classes"], "dataset.num_classes", 2, 1000));
  c.dataset.image_size = static_cast<int>(integer(ds["image_size"], "dataset.image_size", 8, 512));
  if (c.dataset.image_size % 4 != 0) bad("dataset.image_size", "a multiple of 4", ds["image_size"]);
  c.dataset.angle_jitter = real(ds["angle_jitter"], "dataset.angle_jitter");
  c.dataset.pixel_noise = real(ds["pixel_noise"], "dataset.pixel_noise");
  if (c.dataset.angle_jitter < 0) bad("dataset.angle_jitter", "a number >= 0", ds["angle_jitter"]);
  if (c.dataset.pixel_noise < 0) bad("dataset.pixel_noise", "a number >= 0", ds["pixel_noise"]);

  if (!d["mentees"].is_array() || d["mentees"].empty()) bad("mentees", "a non-empty list of mentees", d["mentees"]);
  std::set<std::string> mentee_ids;
  for (std::size_t i = 0; i < d["mentees"].size(); ++i) {
    const json& m = d["mentees"][i];
    const std::string p = fmt::format("mentees.{}", i);
    MenteeConfig mc;
    mc.id = str(m["id"], p + ".id");
    if (!std::regex_match(mc.id, std::regex("[A-Za-z0-9._-]+"))) bad(p + ".id", "a non-empty name", m["id"]);
    if (!mentee_ids.insert(mc.id).second) bad(p + ".id", "a unique mentee id", m["id"]);
    mc.arch = str(m["arch"], p + ".arch");
    if (mc.arch != "toy-cnn" && mc.arch != "toy-attention") bad(p + ".arch", "toy-cnn or toy-attention", m["arch"]);
    mc.train_count = static_cast<int>(integer(m["train_count"], p + ".train_count", 10));
    mc.train_path = str(m["train_path"], p + ".train_path");
    if (c.dataset.kind == "ppm" && mc.train_path.empty()) {
      bad(p + ".train_path", "a training folder for ppm datasets", m["train_path"]);
    }
    mc.epochs = static_cast<int>(integer(m["epochs"], p + ".epochs", 1));
    mc.batch_size = static_cast<int>(integer(m["batch_size"], p + ".batch_size", 1));
    mc.lr = real(m["lr"], p + ".lr");
    if (mc.lr <= 0) bad(p + ".lr", "a number > 0", m["lr"]);
    c.mentees.push_back(mc);
  }

  const json& cu = d["curation"];
  c.curation.sources = source_list(cu["sources"], "curation.sources");
  c.curation.severity_sweep = boolean(cu["severity_sweep"], "curation.severity_sweep");
  c.curation.relabel = boolean(cu["relabel"], "curation.relabel");
  c.curation.attack_batch = static_cast<int>(integer(cu["attack_batch"], "curation.attack_batch", 1));
  c.curation.severity_table = str(cu["severity_table"], "curation.severity_table");
  if (c.curation.severity_table != "small" && c.curation.severity_table != "large") {
    bad("curation.severity_table", "small or large", cu["severity_table"]);
  }

  const json& mo = d["mentor"];
  c.mentor.backbone = str(mo["backbone"], "mentor.backbone");
  if (c.mentor.backbone != "toy-cnn" && c.mentor.backbone != "toy-attention") {
    bad("mentor.backbone", "toy-cnn or toy-attention", mo["backbone"]);
  }
  c.mentor.train_sources = source_list(mo["train_sources"], "mentor.train_sources");
  for (const auto& s : c.mentor.train_sources) {
    if (std::find(c.curation.sources.begin(), c.curation.sources.end(), s) == c.curation.sources.end()) {
      bad("mentor.train_sources", "sources listed in curation.sources", json(s.id()));
    }
  }
  c.mentor.joint = boolean(mo["joint"], "mentor.joint");
  c.mentor.init_from_mentee = boolean(mo["init_from_mentee"], "mentor.init_from_mentee");
  if (c.mentor.init_from_mentee && c.mentor.backbone != c.mentees.front().arch) {
    bad("mentor.init_from_mentee", "false unless mentor.backbone matches the first mentee's arch", mo["init_from_mentee"]);
  }
  c.mentor.epochs = static_cast<int>(integer(mo["epochs"], "mentor.epochs", 1));
  c.mentor.batch_size = static_cast<int>(integer(mo["batch_size"], "mentor.batch_size", 2));
  if (c.mentor.batch_size % 2 != 0) bad("mentor.batch_size", "an even integer >= 2", mo["batch_size"]);
  c.mentor.lr = real(mo["lr"], "mentor.lr");
  if (c.mentor.lr <= 0) bad("mentor.lr", "a number > 0", mo["lr"]);
  c.mentor.weight_decay = real(mo["weight_decay"], "mentor.weight_decay");
  if (c.mentor.weight_decay < 0) bad("mentor.weight_decay", "a number >= 0", mo["weight_decay"]);
  c.mentor.q = real(mo["q"], "mentor.q");
  if (c.mentor.q <= 0) bad("mentor.q", "a number > 0", mo["q"]);
  c.mentor.temperature = real(mo["temperature"], "mentor.temperature");
  if (c.mentor.temperature <= 0) bad("mentor.temperature", "a number > 0", mo["temperature"]);
  const std::string mode = str(mo["loss_mode"], "mentor.loss_mode");
  try {
    c.mentor.loss_mode = parse_loss_mode(mode);
  } catch (const Error&) {
    bad("mentor.loss_mode", "standard, no-Ld or La-replace", mo["loss_mode"]);
  }
  if (!mo["seeds"].is_array() || mo["seeds"].empty()) bad("mentor.seeds", "a non-empty list of integers", mo["seeds"]);
  for (const auto& s : mo["seeds"]) {
    c.mentor.seeds.push_back(static_cast<std::uint64_t>(integer(s, "mentor.seeds", 0)));
  }
  if (std::set<std::uint64_t>(c.mentor.seeds.begin(), c.mentor.seeds.end()).size() != c.mentor.seeds.size()) {
    bad("mentor.seeds", "distinct seeds", mo["seeds"]);
  }
  c.mentor.threshold = real(mo["threshold"], "mentor.threshold");
  if (c.mentor.threshold <= 0 || c.mentor.threshold >= 1) bad("mentor.threshold", "a number in (0, 1)", mo["threshold"]);

  const json& ev = d["eval"];
  c.eval.baselines = boolean(ev["baselines"], "eval.baselines");
  if (!ev["landscape_magnitudes"].is_array()) bad("eval.landscape_magnitudes", "a list of numbers", ev["landscape_magnitudes"]);
  for (const auto& m : ev["landscape_magnitudes"]) {
    c.eval.landscape_magnitudes.push_back(real(m, "eval.landscape_magnitudes"));
  }
  if (!c.eval.landscape_magnitudes.empty() &&
      std::find(c.eval.landscape_magnitudes.begin(), c.eval.landscape_magnitudes.end(), 0.0) ==
          c.eval.landscape_magnitudes.end()) {
    bad("eval.landscape_magnitudes", "an empty list or a list containing 0", ev["landscape_magnitudes"]);
  }
  c.eval.landscape_seed = static_cast<std::uint64_t>(integer(ev["landscape_seed"], "eval.landscape_seed", 0));
  c.eval.embeddings_per_class =
      static_cast<int>(integer(ev["embeddings_per_class"], "eval.embeddings_per_class", 1));
  return c;
}

}  // namespace

std::vector<std::string> ExperimentConfig::mentor_ids() const {
  std::vector<std::string> out;
  for (auto s : mentor.seeds) {
    if (mentor.joint) {
      out.push_back(fmt::format("joint-s{}", s));
    } else {
      for (const auto& src : mentor.train_sources) out.push_back(fmt::format("{}-s{}", src.id(), s));
    }
  }
  return out;
}

std::vector<ErrorSource> ExperimentConfig::mentor_train_sources(const std::string& mentor_id) const {
  for (auto s : mentor.seeds) {
    if (mentor.joint) {
      if (mentor_id == fmt::format("joint-s{}", s)) return mentor.train_sources;
    } else {
      for (const auto& src : mentor.train_sources) {
        if (mentor_id == fmt::format("{}-s{}", src.id(), s)) return {src};
      }
    }
  }
  fail(ErrorCode::kNotFound, fmt::format("mentor '{}' is not part of this config", mentor_id));
}

std::uint64_t ExperimentConfig::mentor_seed(const std::string& mentor_id) const {
  const auto pos = mentor_id.rfind("-s");
  if (pos == std::string::npos) fail(ErrorCode::kNotFound, fmt::format("mentor '{}' has no seed suffix", mentor_id));
  return std::stoull(mentor_id.substr(pos + 2));
}

std::vector<std::string> preset_names() { return {"supermentor-toy", "ablate-no-Ld", "joint-all-sources"}; }

ExperimentConfig parse_config(std::string_view json_text, const std::vector<std::string>& overrides) {
  const json file = json::parse(json_text, nullptr, false);
  if (file.is_discarded() || !file.is_object()) fail(ErrorCode::kConfig, "config is not a JSON object");

  // The preset is resolved first so the document and overrides win over it.
  json probe = defaults();
  merge(probe, file, "");
  for (const auto& o : overrides) apply_override(probe, o);
  const std::string preset = probe["preset"].is_string() ? probe["preset"].get<std::string>() : "";

  json doc = defaults();
  merge(doc, preset_patch(preset), "");
  merge(doc, file, "");
  for (const auto& o : overrides) apply_override(doc, o);

  ExperimentConfig c = from_json(doc);
  c.json = doc.dump(2);
  c.digest = sha256_hex(c.json);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error& e) {
    fail(ErrorCode::kNotFound, fmt::format("config '{}' not found", path.string()));
  }
  return parse_config(text, overrides);
}

std::string default_config_json() { return defaults().dump(2); }

}  // namespace blindspot

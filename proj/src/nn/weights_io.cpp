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

#include "blindspot/nn/weights_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "blindspot/digest.hpp"
#include "blindspot/error.hpp"
#include "blindspot/persistence.hpp"

namespace blindspot::nn {
namespace {

constexpr std::string_view kMagic = "blindspot-weights v1";

std::string shape_token(const Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out;
}

Shape parse_shape_token(const std::string& token) {
  Shape s;
  std::stringstream ss(token);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    try {
      s.push_back(std::stoi(part));
    } catch (const std::exception&) {
      fail(ErrorCode::kIntegrity, fmt::format("malformed tensor shape '{}'", token));
    }
    if (s.back() <= 0) fail(ErrorCode::kIntegrity, fmt::format("malformed tensor shape '{}'", token));
  }
  return s;
}

}  // namespace

const std::string& WeightFile::get(const std::string& key) const {
  auto it = header.find(key);
  if (it == header.end()) fail(ErrorCode::kIntegrity, fmt::format("weights missing header '{}'", key));
  return it->second;
}

std::string WeightFile::digest() const {
  Sha256 h;
  for (const auto& [name, t] : params) {
    h.update(name);
    h.update(shape_string(t.shape()));
    h.update_values(std::span<const double>(t.values()));
  }
  return h.hex();
}

std::filesystem::path digest_sidecar(const std::filesystem::path& weights) {
  auto p = weights;
  p += ".sha256";
  return p;
}

void save_weights(const std::filesystem::path& path, const std::map<std::string, std::string>& header,
                  const ParamRefs& params) {
  std::string text(kMagic);
  text += "\n";
  for (const auto& [k, v] : header) {
    require(k.find('=') == std::string::npos && v.find('\n') == std::string::npos,
            "weight header entries must be single-line key=value");
    text += fmt::format("{}={}\n", k, v);
  }
  for (const auto& p : params) text += fmt::format("param {} {}\n", p.name, shape_token(p.var->shape()));
  text += "data\n";
  for (const auto& p : params) {
    const auto& vals = p.var->value().values();
    text.append(reinterpret_cast<const char*>(vals.data()), vals.size() * sizeof(double));
  }
  write_text_file(path, text);
  write_text_file(digest_sidecar(path), weight_digest(params) + "\n");
}

WeightFile load_weights(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    fail(ErrorCode::kNotFound, fmt::format("weights file '{}' not found", path.string()));
  }
  const std::string blob = read_text_file(path);
  WeightFile wf;
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string {
    const auto end = blob.find('\n', pos);
    if (end == std::string::npos) fail(ErrorCode::kIntegrity, fmt::format("truncated weights file '{}'", path.string()));
    std::string line = blob.substr(pos, end - pos);
    pos = end + 1;
    return line;
  };
  if (next_line() != kMagic) {
    fail(ErrorCode::kIntegrity, fmt::format("'{}' is not a blindspot weights file", path.string()));
  }
  std::vector<std::pair<std::string, Shape>> layout;
  while (true) {
    const std::string line = next_line();
    if (line == "data") break;
    if (line.starts_with("param ")) {
      std::istringstream ss(line.substr(6));
      std::string name, shape;
      ss >> name >> shape;
      if (name.empty() || shape.empty()) fail(ErrorCode::kIntegrity, fmt::format("bad param line '{}'", line));
      layout.emplace_back(name, parse_shape_token(shape));
    } else {
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail(ErrorCode::kIntegrity, fmt::format("bad header line '{}'", line));
      wf.header[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }
  std::size_t expected = 0;
  for (const auto& [name, shape] : layout) expected += shape_size(shape) * sizeof(double);
  if (blob.size() - pos != expected) {
    fail(ErrorCode::kIntegrity, fmt::format("weights payload of '{}' has {} bytes, expected {}",
                                            path.string(), blob.size() - pos, expected));
  }
  for (const auto& [name, shape] : layout) {
    std::vector<double> vals(shape_size(shape));
    std::memcpy(vals.data(), blob.data() + pos, vals.size() * sizeof(double));
    pos += vals.size() * sizeof(double);
    wf.params.emplace_back(name, Tensor(shape, std::move(vals)));
  }
  const auto sidecar = digest_sidecar(path);
  if (!std::filesystem::exists(sidecar)) {
    fail(ErrorCode::kIntegrity, fmt::format("digest sidecar '{}' missing", sidecar.string()));
  }
  std::string recorded = read_text_file(sidecar);
  while (!recorded.empty() && (recorded.back() == '\n' || recorded.back() == ' ')) recorded.pop_back();
  const std::string actual = wf.digest();
  if (recorded != actual) {
    fail(ErrorCode::kIntegrity, fmt::format("weight digest mismatch for '{}': recorded {}, computed {}",
                                            path.string(), recorded, actual));
  }
  return wf;
}

void assign_params(const ParamRefs& dest, const WeightFile& file, const std::string& prefix) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : file.params) by_name[name] = &t;
  for (const auto& p : dest) {
    auto it = by_name.find(prefix + p.name);
    if (it == by_name.end()) {
      fail(ErrorCode::kIntegrity, fmt::format("weights lack parameter '{}'", prefix + p.name));
    }
    if (it->second->shape() != p.var->shape()) {
      fail(ErrorCode::kIntegrity, fmt::format("parameter '{}' has shape {}, model expects {}", p.name,
                                              shape_string(it->second->shape()), shape_string(p.var->shape())));
    }
    *p.var = Var(*it->second, p.var->requires_grad());
  }
}

}  // namespace blindspot::nn

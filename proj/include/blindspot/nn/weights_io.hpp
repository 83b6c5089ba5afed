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

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "blindspot/nn/layers.hpp"

namespace blindspot::nn {

// Weight file layout:
//   blindspot-weights v1
//   key=value            (model metadata, any number)
//   param <name> <shape> (one per tensor, e.g. "param head.0.weight 32x32")
//   data
//   <little-endian float64 payload, tensors in the order listed>
// A sidecar "<file>.sha256" holds the weight digest of the payload.

struct WeightFile {
  std::map<std::string, std::string> header;
  std::vector<std::pair<std::string, Tensor>> params;

  const std::string& get(const std::string& key) const;
  std::string digest() const;
};

std::filesystem::path digest_sidecar(const std::filesystem::path& weights);

void save_weights(const std::filesystem::path& path, const std::map<std::string, std::string>& header,
                  const ParamRefs& params);

/// Throws kNotFound when the file is missing and kIntegrity when the payload
/// is truncated, malformed, or disagrees with the sidecar digest.
WeightFile load_weights(const std::filesystem::path& path);

/// Copies tensors named `prefix + suffix` into the matching parameters.
/// Every destination must be found with an identical shape.
void assign_params(const ParamRefs& dest, const WeightFile& file, const std::string& prefix = "");

}  // namespace blindspot::nn

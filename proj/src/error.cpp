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

#include "blindspot/error.hpp"

namespace blindspot {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation: return "E_VALIDATION";
    case ErrorCode::kSchema: return "E_SCHEMA";
    case ErrorCode::kIntegrity: return "E_INTEGRITY";
    case ErrorCode::kIo: return "E_IO";
    case ErrorCode::kNotFound: return "E_NOT_FOUND";
    case ErrorCode::kUnsupported: return "E_UNSUPPORTED";
    case ErrorCode::kEmptyClass: return "E_EMPTY_CLASS";
    case ErrorCode::kUndefined: return "E_UNDEFINED";
    case ErrorCode::kNonFinite: return "E_NON_FINITE";
    case ErrorCode::kConfig: return "E_CONFIG";
  }
  return "E_UNKNOWN";
}

}  // namespace blindspot

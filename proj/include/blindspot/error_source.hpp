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

#include <compare>
#include <string>
#include <string_view>
#include <vector>

namespace blindspot {

enum class ErrorFamily { kId, kOod, kAa };

enum class ErrorKind { kNone, kSpN, kGaB, kSpat, kSat, kPgd, kCw, kJitter, kPifgsm };

/// Two OOD severity scales coexist: the five-level corruption benchmark table
/// and the four-value speckle sigma sweep {0.01, 0.06, 0.15, 0.6}.
enum class SeverityScale { kBenchmark, kSpnSweep };

std::string_view family_name(ErrorFamily family);
std::string_view kind_name(ErrorKind kind);
ErrorKind parse_kind(std::string_view name);

/// One named generator of evaluation data.
///
/// Canonical ids:
///   ID
///   OOD-<kind>-<severity>        benchmark scale, e.g. OOD-SpN-1
///   OOD-SpN-sweep<level>         speckle sigma sweep, e.g. OOD-SpN-sweep2
///   AA-<kind>-eps<n>             epsilon = n/255 for PGD, Jitter, PIFGSM
///   AA-CW-lr<value>              CW optimizer step size, e.g. AA-CW-lr0.01
///
/// Fields that do not apply to a family are held at zero, so equality and
/// ordering are structural.
class ErrorSource {
 public:
  ErrorSource() = default;

  static ErrorSource in_domain();
  static ErrorSource corruption(ErrorKind kind, int severity,
                                SeverityScale scale = SeverityScale::kBenchmark);
  static ErrorSource attack(ErrorKind kind, int eps_num);
  static ErrorSource cw(double lr);

  /// General validating constructor. Throws kValidation on an invalid
  /// family/kind/strength combination.
  static ErrorSource make(ErrorFamily family, ErrorKind kind, int severity = 0,
                          SeverityScale scale = SeverityScale::kBenchmark,
                          int eps_num = 0, double cw_lr = 0.0);

  static ErrorSource parse(std::string_view id);

  std::string id() const;

  ErrorFamily family() const { return family_; }
  ErrorKind kind() const { return kind_; }
  int severity() const { return severity_; }
  SeverityScale scale() const { return scale_; }
  int eps_num() const { return eps_num_; }
  double epsilon() const { return eps_num_ / 255.0; }
  double cw_lr() const { return cw_lr_; }

  auto operator<=>(const ErrorSource&) const = default;

 private:
  ErrorFamily family_ = ErrorFamily::kId;
  ErrorKind kind_ = ErrorKind::kNone;
  int severity_ = 0;
  SeverityScale scale_ = SeverityScale::kBenchmark;
  int eps_num_ = 0;
  double cw_lr_ = 0.0;
};

inline std::string canonical_source_id(const ErrorSource& source) { return source.id(); }

/// Default CW step size when a config names "AA-CW" without one.
inline constexpr double kDefaultCwLr = 0.01;

/// The nine default sources: ID, four corruptions at level 1, four attacks at
/// epsilon 1/255 (CW at the default step size).
std::vector<ErrorSource> default_sources();

}  // namespace blindspot

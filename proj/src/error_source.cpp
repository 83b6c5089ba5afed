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

#include "blindspot/error_source.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <system_error>

#include "blindspot/error.hpp"

namespace blindspot {
namespace {

constexpr std::array<std::pair<ErrorKind, std::string_view>, 9> kKindNames{{
    {ErrorKind::kNone, "None"},
    {ErrorKind::kSpN, "SpN"},
    {ErrorKind::kGaB, "GaB"},
    {ErrorKind::kSpat, "Spat"},
    {ErrorKind::kSat, "Sat"},
    {ErrorKind::kPgd, "PGD"},
    {ErrorKind::kCw, "CW"},
    {ErrorKind::kJitter, "Jitter"},
    {ErrorKind::kPifgsm, "PIFGSM"},
}};

bool is_corruption(ErrorKind k) {
  return k == ErrorKind::kSpN || k == ErrorKind::kGaB || k == ErrorKind::kSpat ||
         k == ErrorKind::kSat;
}

bool is_attack(ErrorKind k) {
  return k == ErrorKind::kPgd || k == ErrorKind::kCw || k == ErrorKind::kJitter ||
         k == ErrorKind::kPifgsm;
}

int parse_positive_int(std::string_view text, std::string_view whole) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    fail(ErrorCode::kValidation, "malformed source id '" + std::string(whole) + "'");
  }
  return value;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

}  // namespace

std::string_view family_name(ErrorFamily family) {
  switch (family) {
    case ErrorFamily::kId: return "ID";
    case ErrorFamily::kOod: return "OOD";
    case ErrorFamily::kAa: return "AA";
  }
  return "?";
}

std::string_view kind_name(ErrorKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "?";
}

ErrorKind parse_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  fail(ErrorCode::kValidation, "unknown error kind '" + std::string(name) + "'");
}

ErrorSource ErrorSource::in_domain() { return ErrorSource{}; }

ErrorSource ErrorSource::corruption(ErrorKind kind, int severity, SeverityScale scale) {
  return make(ErrorFamily::kOod, kind, severity, scale);
}

ErrorSource ErrorSource::attack(ErrorKind kind, int eps_num) {
  return make(ErrorFamily::kAa, kind, 0, SeverityScale::kBenchmark, eps_num);
}

ErrorSource ErrorSource::cw(double lr) {
  return make(ErrorFamily::kAa, ErrorKind::kCw, 0, SeverityScale::kBenchmark, 0, lr);
}

ErrorSource ErrorSource::make(ErrorFamily family, ErrorKind kind, int severity,
                              SeverityScale scale, int eps_num, double cw_lr) {
  ErrorSource s;
  s.family_ = family;
  s.kind_ = kind;
  switch (family) {
    case ErrorFamily::kId:
      require(kind == ErrorKind::kNone, "ID source must have kind None");
      require(severity == 0 && eps_num == 0 && cw_lr == 0.0,
              "ID source carries no strength");
      break;
    case ErrorFamily::kOod:
      require(is_corruption(kind), "OOD source kind must be one of SpN, GaB, Spat, Sat");
      require(severity >= 1, "OOD severity must be >= 1");
      require(eps_num == 0 && cw_lr == 0.0, "OOD source carries no attack strength");
      require(scale == SeverityScale::kBenchmark || kind == ErrorKind::kSpN,
              "the sigma sweep scale exists only for SpN");
      s.severity_ = severity;
      s.scale_ = scale;
      break;
    case ErrorFamily::kAa:
      require(is_attack(kind), "AA source kind must be one of PGD, CW, Jitter, PIFGSM");
      require(severity == 0, "AA source carries no corruption severity");
      if (kind == ErrorKind::kCw) {
        require(eps_num == 0, "CW strength is a step size, not epsilon");
        require(std::isfinite(cw_lr) && cw_lr > 0.0, "CW step size must be > 0");
        s.cw_lr_ = cw_lr;
      } else {
        require(cw_lr == 0.0, "only CW carries a step size");
        require(eps_num >= 0, "epsilon numerator must be >= 0");
        s.eps_num_ = eps_num;
      }
      break;
  }
  return s;
}

std::string ErrorSource::id() const {
  switch (family_) {
    case ErrorFamily::kId:
      return "ID";
    case ErrorFamily::kOod: {
      std::string out = "OOD-" + std::string(kind_name(kind_)) + "-";
      if (scale_ == SeverityScale::kSpnSweep) out += "sweep";
      return out + std::to_string(severity_);
    }
    case ErrorFamily::kAa:
      if (kind_ == ErrorKind::kCw) return "AA-CW-lr" + format_double(cw_lr_);
      return "AA-" + std::string(kind_name(kind_)) + "-eps" + std::to_string(eps_num_);
  }
  return "?";
}

ErrorSource ErrorSource::parse(std::string_view id) {
  if (id == "ID") return in_domain();
  const auto first = id.find('-');
  if (first == std::string_view::npos) {
    fail(ErrorCode::kValidation, "malformed source id '" + std::string(id) + "'");
  }
  const std::string_view family = id.substr(0, first);
  const std::string_view rest = id.substr(first + 1);
  const auto second = rest.find('-');
  const std::string_view kind_text = rest.substr(0, second);
  const ErrorKind kind = parse_kind(kind_text);
  const std::string_view strength =
      second == std::string_view::npos ? std::string_view{} : rest.substr(second + 1);

  if (family == "OOD") {
    if (strength.starts_with("sweep")) {
      return corruption(kind, parse_positive_int(strength.substr(5), id),
                        SeverityScale::kSpnSweep);
    }
    return corruption(kind, parse_positive_int(strength, id));
  }
  if (family == "AA") {
    if (kind == ErrorKind::kCw) {
      if (strength.empty()) return cw(kDefaultCwLr);
      if (!strength.starts_with("lr")) {
        fail(ErrorCode::kValidation, "malformed source id '" + std::string(id) + "'");
      }
      const std::string_view num = strength.substr(2);
      double lr = 0.0;
      auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), lr);
      if (ec != std::errc() || ptr != num.data() + num.size() || num.empty()) {
        fail(ErrorCode::kValidation, "malformed source id '" + std::string(id) + "'");
      }
      return cw(lr);
    }
    if (strength.empty()) return attack(kind, 1);
    if (!strength.starts_with("eps")) {
      fail(ErrorCode::kValidation, "malformed source id '" + std::string(id) + "'");
    }
    return attack(kind, parse_positive_int(strength.substr(3), id));
  }
  fail(ErrorCode::kValidation, "unknown error family in '" + std::string(id) + "'");
}

std::vector<ErrorSource> default_sources() {
  return {
      ErrorSource::in_domain(),
      ErrorSource::corruption(ErrorKind::kSpN, 1),
      ErrorSource::corruption(ErrorKind::kGaB, 1),
      ErrorSource::corruption(ErrorKind::kSpat, 1),
      ErrorSource::corruption(ErrorKind::kSat, 1),
      ErrorSource::attack(ErrorKind::kPgd, 1),
      ErrorSource::cw(kDefaultCwLr),
      ErrorSource::attack(ErrorKind::kJitter, 1),
      ErrorSource::attack(ErrorKind::kPifgsm, 1),
  };
}

}  // namespace blindspot

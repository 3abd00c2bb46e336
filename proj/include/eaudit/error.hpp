// Copyright 2026 The eaudit Authors
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

#include <stdexcept>
#include <string>
#include <string_view>

namespace eaudit {

enum class ErrorKind {
  hermiticity,
  positivity,
  trace,
  shape,
  size,
  domain,
  format,
  purity,
  mode,
  numerical,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::hermiticity: return "hermiticity";
    case ErrorKind::positivity: return "positivity";
    case ErrorKind::trace: return "trace";
    case ErrorKind::shape: return "shape";
    case ErrorKind::size: return "size";
    case ErrorKind::domain: return "domain";
    case ErrorKind::format: return "format";
    case ErrorKind::purity: return "purity";
    case ErrorKind::mode: return "mode";
    case ErrorKind::numerical: return "numerical";
  }
  return "unknown";
}

/// Single exception type for the library; `kind()` tells callers (and the
/// CLI exit-code mapping) which family of failure occurred.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Validation failures are user-input problems; numerical ones are ours.
  bool is_validation() const noexcept { return kind_ != ErrorKind::numerical; }

 private:
  ErrorKind kind_;
};

/// Raised when an iterative kernel gives up; carries the residual it reached.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double residual)
      : Error(ErrorKind::numerical,
              what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace eaudit

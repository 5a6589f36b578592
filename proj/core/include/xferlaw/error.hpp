// Copyright 2026 The xferlaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace xferlaw {

/// Base class for every error raised by the toolkit. `kind()` is a stable,
/// machine-readable tag used by the CLI error payload.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// Malformed input record (JSON-lines or CSV).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& message) : Error("parse_error", message) {}
};

/// Inputs violate an operation's precondition.
class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& message)
      : Error("invalid_argument", message) {}
};

/// Target loss lies below everything the from-scratch baseline reached.
class NotAttainable : public Error {
 public:
  explicit NotAttainable(const std::string& message) : Error("not_attainable", message) {}
};

/// Target loss lies above the baseline and extrapolation is disabled.
class OutOfRange : public Error {
 public:
  explicit OutOfRange(const std::string& message) : Error("out_of_range", message) {}
};

/// A fit cannot be formed from the supplied points (too few, degenerate,
/// rank deficient).
class FitError : public Error {
 public:
  explicit FitError(const std::string& message) : Error("fit_error", message) {}
};

}  // namespace xferlaw

// Copyright 2026 The washsim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace wash {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Populations or tensors whose layouts disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Inputs that violate an operation's preconditions.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent configuration files.
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A training run stopped on a non-finite loss or gradient.
class NumericAbort : public NumericError {
 public:
  NumericAbort(const std::string& what, std::uint64_t step)
      : NumericError(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::uint64_t step() const { return step_; }

 private:
  std::uint64_t step_;
};

}  // namespace wash

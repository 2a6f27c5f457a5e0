/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <stdexcept>
#include <string>

namespace islands {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (mapping files, annotation files, JSON documents).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Tensor or track dimensions that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// NaN or infinity where only finite values are allowed.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Experiment configuration problems; `key()` names the offending config key.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error("config key '" + key + "': " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace islands

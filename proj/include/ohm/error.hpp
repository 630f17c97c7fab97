// Copyright 2026 The OHM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>

namespace ohm {

/// Base of every error raised by the library. The CLI maps any of these to a
/// nonzero exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input files.
class FormatError : public Error {
 public:
  using Error::Error;
};
class ParseError : public Error {
 public:
  using Error::Error;
};
class ManifestError : public Error {
 public:
  using Error::Error;
};

// Caller contracts.
class ArgumentError : public Error {
 public:
  using Error::Error;
};
class EmptyInputError : public Error {
 public:
  using Error::Error;
};
class ConfigError : public Error {
 public:
  using Error::Error;
};
class ShapeError : public Error {
 public:
  using Error::Error;
};
class ValidationError : public Error {
 public:
  using Error::Error;
};
class CompatibilityError : public Error {
 public:
  using Error::Error;
};
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(int epoch, const std::string& what)
      : Error("training diverged at epoch " + std::to_string(epoch) + ": " +
              what),
        epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

using WarningHandler = std::function<void(const std::string&)>;

inline WarningHandler& warning_handler() {
  static WarningHandler handler = [](const std::string& msg) {
    std::cerr << "WARNING: " << msg << '\n';
  };
  return handler;
}

/// Replaces the process-wide warning sink; returns the previous one.
inline WarningHandler set_warning_handler(WarningHandler handler) {
  auto previous = std::move(warning_handler());
  warning_handler() = std::move(handler);
  return previous;
}

inline void warn(const std::string& msg) { warning_handler()(msg); }

}  // namespace ohm

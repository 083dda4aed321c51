// Copyright 2026 The smoothcomp Authors
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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace smoothcomp {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument (rank out of range, bad sparsity, unsupported tensor rank, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Iterative kernel failed to converge.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, int sweeps) : Error(what), sweeps_(sweeps) {}
  int sweeps() const noexcept { return sweeps_; }

 private:
  int sweeps_;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long last_good_epoch)
      : Error(what), last_good_epoch_(last_good_epoch) {}
  /// -1 when the very first epoch diverged.
  long last_good_epoch() const noexcept { return last_good_epoch_; }

 private:
  long last_good_epoch_;
};

/// Malformed input file; carries the byte offset where parsing failed.
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Invalid run configuration; `field` is a JSON-pointer-like path.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace smoothcomp

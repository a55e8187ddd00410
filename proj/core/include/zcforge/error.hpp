// Copyright 2026 The zcforge Authors.
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

#ifndef ZCFORGE_ERROR_HPP_
#define ZCFORGE_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace zcforge {

// Coarse error categories; the CLI maps them onto exit codes.
enum class ErrorCategory { kConfig, kData, kNumeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

// --- config -----------------------------------------------------------------

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorCategory::kConfig, what) {}
};

// --- data -------------------------------------------------------------------

class DataError : public Error {
 public:
  explicit DataError(const std::string& what)
      : Error(ErrorCategory::kData, what) {}
};

class FormatError : public DataError {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : DataError(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class ManifestMismatch : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t position)
      : DataError(what + " (at position " + std::to_string(position) + ")"),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class InsufficientSpaces : public DataError {
 public:
  using DataError::DataError;
};

class InsufficientRecords : public DataError {
 public:
  using DataError::DataError;
};

class OverlapError : public DataError {
 public:
  using DataError::DataError;
};

class SpaceTooSmall : public DataError {
 public:
  using DataError::DataError;
};

// --- numeric ----------------------------------------------------------------

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ErrorCategory::kNumeric, what) {}
};

class ShapeMismatch : public NumericError {
 public:
  using NumericError::NumericError;
};

class NumericalFailure : public NumericError {
 public:
  using NumericError::NumericError;
};

// Raised by primitive evaluation. Callers treat it like a non-finite output.
class ExecutionFailure : public NumericError {
 public:
  using NumericError::NumericError;
};

class InitExhausted : public NumericError {
 public:
  using NumericError::NumericError;
};

class VariationExhausted : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace zcforge

#endif  // ZCFORGE_ERROR_HPP_

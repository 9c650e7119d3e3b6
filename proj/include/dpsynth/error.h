//
// Copyright 2026 The dpsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dpsynth {

// Root of every error thrown by the library. The CLI maps the concrete
// subclasses onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument or violated precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// A stream or file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed input data or schema.
class IngestionError : public Error {
 public:
  using Error::Error;
};

// Query not defined for the column kind (e.g. a range over categories).
class UnsupportedQueryError : public Error {
 public:
  using Error::Error;
};

// A dense table would exceed the configured cell cap.
class CapacityError : public Error {
 public:
  CapacityError(std::string what, std::size_t cap)
      : Error(std::move(what)), cap_(cap) {}

  std::size_t cap() const { return cap_; }

 private:
  std::size_t cap_;
};

// The privacy accountant refused a charge. Nothing was recorded.
class BudgetExceededError : public Error {
 public:
  BudgetExceededError(std::string what, double requested, double remaining)
      : Error(std::move(what)), requested_(requested), remaining_(remaining) {}

  double requested() const { return requested_; }
  double remaining() const { return remaining_; }

 private:
  double requested_;
  double remaining_;
};

}  // namespace dpsynth

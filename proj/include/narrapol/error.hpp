// Copyright 2026 The Narrapol Authors.
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

namespace narrapol {

// Base of every error thrown by the library. The CLI maps each subclass to a
// distinct process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration, taxonomy, template or command-line input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data that violates a file schema or a precondition of an operation.
class DataContractError : public Error {
 public:
  using Error::Error;
};

// Failure of an external service (video platform or inference endpoint).
class UpstreamError : public Error {
 public:
  using Error::Error;
};

class AuthError : public UpstreamError {
 public:
  using UpstreamError::UpstreamError;
};

class QuotaError : public UpstreamError {
 public:
  QuotaError(const std::string& what, int retry_after_seconds)
      : UpstreamError(what), retry_after_seconds_(retry_after_seconds) {}

  // Suggested wait before retrying; quota windows reset daily so the hint is
  // coarse.
  int retry_after_seconds() const noexcept { return retry_after_seconds_; }

 private:
  int retry_after_seconds_;
};

class NotFoundError : public UpstreamError {
 public:
  using UpstreamError::UpstreamError;
};

// Raised when a statistic cannot be evaluated on the data it was handed,
// e.g. an empty slice.
class EmptySliceError : public DataContractError {
 public:
  using DataContractError::DataContractError;
};

}  // namespace narrapol

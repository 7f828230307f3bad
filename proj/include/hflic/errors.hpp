// Copyright 2026 The hflic Authors
// SPDX-License-Identifier: Apache-2.0
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

#pragma once

#include <stdexcept>
#include <string>

namespace hflic {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or mismatched shapes between components.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data that violates a documented invariant (non-finite pixels, bad boxes).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

// Any failure while reading back an entropy-coded stream.
class DecodeError : public Error {
 public:
  using Error::Error;
};

// Container header does not belong to this model (magic, version, model id).
class HeaderError : public DecodeError {
 public:
  using DecodeError::DecodeError;
};

// Header is well formed but was written by a different model.
class ModelMismatchError : public HeaderError {
 public:
  using HeaderError::HeaderError;
};

// A payload failed its integrity check or did not decode cleanly.
// `payload_index` is the index in coding order (0 = hyper-latent stream).
class PayloadError : public DecodeError {
 public:
  PayloadError(const std::string& what, int payload_index)
      : DecodeError(what), payload_index_(payload_index) {}
  int payload_index() const noexcept { return payload_index_; }

 private:
  int payload_index_;
};

}  // namespace hflic

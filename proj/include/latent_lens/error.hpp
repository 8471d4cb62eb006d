// Copyright 2026 The latent-lens Authors.
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

#ifndef LATENT_LENS_ERROR_HPP_
#define LATENT_LENS_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace latent_lens {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input violates a structural invariant (overlapping spans, leading Hold, ...).
class StructuralInputError : public Error {
 public:
  using Error::Error;
};

// Malformed Standard MIDI File; carries the byte offset where decoding failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Argument outside its mathematical domain (non-positive tempo, |rho| >= 1).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Tensor, sequence or matrix dimensions disagree with the configuration.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Statistic undefined for the given input (zero variance, constant series).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace latent_lens

#endif  // LATENT_LENS_ERROR_HPP_

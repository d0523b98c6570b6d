// Copyright 2026 The Authors.
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

namespace seqal {

// Base class for every error raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input text: CoNLL files, embedding files, checkpoints, configs.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A tag is invalid in the declared scheme or a span is structurally broken.
class SchemeError : public Error {
 public:
  using Error::Error;
};

// Tensor shapes do not line up for a kernel.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// An argument is outside its documented domain.
class ParamError : public Error {
 public:
  using Error::Error;
};

// An API precondition was violated (wrong decoder kind, non-scalar loss, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace seqal

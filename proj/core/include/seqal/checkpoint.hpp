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

#include <iosfwd>

#include "seqal/params.hpp"

namespace seqal {

// Binary tensor container. Layout, all little-endian:
//   magic "SEQALCK1"
//   u64 tensor count
//   per tensor, in name-sorted order:
//     u64 name length, name bytes
//     u64 ndim, i64 dims...
//     f64 values (row-major)
// Values round-trip exactly; truncation or a bad magic raises ParseError.
void write_checkpoint(std::ostream& out, const ParamStore& params);

// Loads tensors into an existing store; every stored tensor must match a
// parameter of the same name and shape, and vice versa.
void read_checkpoint(std::istream& in, ParamStore& params);

}  // namespace seqal

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

#include "seqal/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <istream>
#include <ostream>
#include <set>

namespace seqal {

namespace {

constexpr char kMagic[8] = {'S', 'E', 'Q', 'A', 'L', 'C', 'K', '1'};

void write_u64(std::ostream& out, uint64_t x) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((x >> (8 * i)) & 0xFF);
  out.write(buf, 8);
}

uint64_t read_u64(std::istream& in) {
  char buf[8];
  in.read(buf, 8);
  if (!in) throw ParseError("checkpoint: truncated input");
  uint64_t x = 0;
  for (int i = 0; i < 8; ++i) {
    x |= static_cast<uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  }
  return x;
}

void write_f64(std::ostream& out, double x) {
  uint64_t bits;
  std::memcpy(&bits, &x, 8);
  write_u64(out, bits);
}

double read_f64(std::istream& in) {
  const uint64_t bits = read_u64(in);
  double x;
  std::memcpy(&x, &bits, 8);
  return x;
}

}  // namespace

void write_checkpoint(std::ostream& out, const ParamStore& params) {
  std::vector<const Parameter*> sorted;
  for (size_t i = 0; i < params.size(); ++i) sorted.push_back(&params.param(i));
  std::sort(sorted.begin(), sorted.end(),
            [](const Parameter* a, const Parameter* b) { return a->name < b->name; });

  out.write(kMagic, 8);
  write_u64(out, sorted.size());
  for (const Parameter* p : sorted) {
    write_u64(out, p->name.size());
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    write_u64(out, p->value.shape.size());
    for (int64_t d : p->value.shape) write_u64(out, static_cast<uint64_t>(d));
    for (Real x : p->value.v) write_f64(out, static_cast<double>(x));
  }
  if (!out) throw ParseError("checkpoint: write failed");
}

void read_checkpoint(std::istream& in, ParamStore& params) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw ParseError("checkpoint: bad magic");
  }
  const uint64_t count = read_u64(in);
  if (count != params.size()) {
    throw ParseError("checkpoint: has " + std::to_string(count) + " tensors, store has " +
                     std::to_string(params.size()));
  }
  std::set<std::string> seen;
  for (uint64_t i = 0; i < count; ++i) {
    const uint64_t name_len = read_u64(in);
    if (name_len > (1u << 20)) throw ParseError("checkpoint: unreasonable name length");
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    if (!in) throw ParseError("checkpoint: truncated name");
    if (!seen.insert(name).second) throw ParseError("checkpoint: duplicate tensor " + name);
    Parameter* p = params.find(name);
    if (!p) throw ParseError("checkpoint: unknown tensor " + name);
    const uint64_t ndim = read_u64(in);
    if (ndim != p->value.shape.size()) {
      throw ParseError("checkpoint: rank mismatch for " + name);
    }
    for (uint64_t d = 0; d < ndim; ++d) {
      const int64_t dim = static_cast<int64_t>(read_u64(in));
      if (dim != p->value.shape[d]) {
        throw ParseError("checkpoint: shape mismatch for " + name);
      }
    }
    for (Real& x : p->value.v) x = static_cast<Real>(read_f64(in));
  }
}

}  // namespace seqal

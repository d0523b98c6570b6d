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

#include <cstdint>
#include <utility>
#include <vector>

#include "seqal/errors.hpp"

namespace seqal {

// Deterministic RNG (splitmix64) with fully specified derived distributions,
// so seeded runs reproduce byte-for-byte across platforms and toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n); rejection sampling keeps it unbiased.
  int64_t uniform_int(int64_t n) {
    if (n <= 0) throw ParamError("Rng::uniform_int: n must be positive");
    const uint64_t un = static_cast<uint64_t>(n);
    const uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return static_cast<int64_t>(x % un);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Fisher-Yates with our own index draws (std::shuffle is unspecified).
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
      std::swap(v[i], v[static_cast<size_t>(uniform_int(i + 1))]);
    }
  }

  // Independent stream derived from (seed, stream_id). Used wherever results
  // must not depend on evaluation order, e.g. per-sentence scoring.
  static Rng stream(uint64_t seed, uint64_t stream_id) {
    Rng mixer(seed);
    uint64_t a = mixer.next_u64();
    Rng salt(stream_id * 0xD1342543DE82EF95ull + 0x2545F4914F6CDD1Dull);
    return Rng(a ^ salt.next_u64());
  }

 private:
  uint64_t state_;
};

}  // namespace seqal

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
#include <initializer_list>
#include <string>
#include <vector>

#include "seqal/errors.hpp"

namespace seqal {

#ifdef SEQAL_REAL32
using Real = float;
#else
using Real = double;
#endif

// Dense row-major tensor of Real with an explicit shape.
struct Tensor {
  std::vector<int64_t> shape;
  std::vector<Real> v;

  Tensor() = default;

  static Tensor zeros(std::vector<int64_t> shape);
  static Tensor scalar(Real x);
  static Tensor row(std::vector<Real> vals);
  static Tensor from(std::vector<int64_t> shape, std::vector<Real> vals);

  int64_t numel() const { return static_cast<int64_t>(v.size()); }
  int64_t ndim() const { return static_cast<int64_t>(shape.size()); }
  int64_t dim(int i) const { return shape[static_cast<size_t>(i)]; }

  // Any tensor can be viewed as a matrix of rows() x cols() where cols() is
  // the trailing dimension.
  int64_t cols() const { return shape.empty() ? 1 : shape.back(); }
  int64_t rows() const {
    int64_t c = cols();
    return c == 0 ? 0 : numel() / c;
  }

  Real* data() { return v.data(); }
  const Real* data() const { return v.data(); }

  Real& at(int64_t i) { return v[static_cast<size_t>(i)]; }
  Real at(int64_t i) const { return v[static_cast<size_t>(i)]; }
  Real& at2(int64_t i, int64_t j) { return v[static_cast<size_t>(i * cols() + j)]; }
  Real at2(int64_t i, int64_t j) const { return v[static_cast<size_t>(i * cols() + j)]; }
  Real& at3(int64_t i, int64_t j, int64_t k) {
    return v[static_cast<size_t>((i * dim(1) + j) * dim(2) + k)];
  }
  Real at3(int64_t i, int64_t j, int64_t k) const {
    return v[static_cast<size_t>((i * dim(1) + j) * dim(2) + k)];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool all_finite() const;
  std::string shape_str() const;
  void fill(Real x);
};

// Throws ShapeError with the given message when ok is false.
void require_shape(bool ok, const std::string& msg);

}  // namespace seqal

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

#include "seqal/tensor.hpp"

#include <cmath>
#include <sstream>

namespace seqal {

Tensor Tensor::zeros(std::vector<int64_t> shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw ShapeError("Tensor::zeros: negative dimension");
    n *= d;
  }
  Tensor t;
  t.shape = std::move(shape);
  t.v.assign(static_cast<size_t>(n), Real(0));
  return t;
}

Tensor Tensor::scalar(Real x) {
  Tensor t;
  t.shape = {1};
  t.v = {x};
  return t;
}

Tensor Tensor::row(std::vector<Real> vals) {
  Tensor t;
  t.shape = {static_cast<int64_t>(vals.size())};
  t.v = std::move(vals);
  return t;
}

Tensor Tensor::from(std::vector<int64_t> shape, std::vector<Real> vals) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  if (n != static_cast<int64_t>(vals.size())) {
    throw ShapeError("Tensor::from: value count does not match shape");
  }
  Tensor t;
  t.shape = std::move(shape);
  t.v = std::move(vals);
  return t;
}

bool Tensor::all_finite() const {
  for (Real x : v) {
    if (!std::isfinite(static_cast<double>(x))) return false;
  }
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

void Tensor::fill(Real x) {
  for (Real& e : v) e = x;
}

void require_shape(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

}  // namespace seqal

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

#include "seqal/params.hpp"

#include <cmath>

namespace seqal {

Parameter& ParamStore::add(const std::string& name, std::vector<int64_t> shape,
                           bool trainable) {
  if (index_.count(name)) {
    throw ContractError("ParamStore::add: duplicate parameter name " + name);
  }
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Tensor::zeros(shape);
  p->grad = Tensor::zeros(shape);
  p->trainable = trainable;
  index_[name] = params_.size();
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter* ParamStore::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

const Parameter* ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

Parameter& ParamStore::at(const std::string& name) {
  Parameter* p = find(name);
  if (!p) throw ContractError("ParamStore::at: no parameter named " + name);
  return *p;
}

const Parameter& ParamStore::at(const std::string& name) const {
  const Parameter* p = find(name);
  if (!p) throw ContractError("ParamStore::at: no parameter named " + name);
  return *p;
}

void ParamStore::zero_grads() {
  for (auto& p : params_) p->grad.fill(Real(0));
}

void init_uniform_glorot(Tensor& t, int64_t fan_in, int64_t fan_out, Rng& rng) {
  if (fan_in + fan_out <= 0) {
    throw ParamError("init_uniform_glorot: fan sum must be positive");
  }
  const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (Real& x : t.v) x = static_cast<Real>(rng.uniform(-r, r));
}

void sgd_update(ParamStore& params, Real lr) {
  for (size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params.param(i);
    if (!p.trainable) continue;
    if (!p.grad.same_shape(p.value)) {
      throw ContractError("sgd_update: gradient missing or misshaped for " +
                          p.name);
    }
    for (size_t j = 0; j < p.value.v.size(); ++j) p.value.v[j] -= lr * p.grad.v[j];
  }
}

double clip_global_grad_norm(ParamStore& params, double max_norm) {
  if (max_norm <= 0) throw ParamError("clip_global_grad_norm: max_norm must be positive");
  double sq = 0;
  for (size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = params.param(i);
    if (!p.trainable) continue;
    for (Real g : p.grad.v) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const Real scale = static_cast<Real>(max_norm / norm);
    for (size_t i = 0; i < params.size(); ++i) {
      Parameter& p = params.param(i);
      if (!p.trainable) continue;
      for (Real& g : p.grad.v) g *= scale;
    }
  }
  return norm;
}

}  // namespace seqal

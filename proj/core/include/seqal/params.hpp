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

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "seqal/rng.hpp"
#include "seqal/tensor.hpp"

namespace seqal {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;  // same shape as value, zeroed between optimizer steps
  bool trainable = true;
};

// Owns named parameters; names are unique within a store.
class ParamStore {
 public:
  Parameter& add(const std::string& name, std::vector<int64_t> shape,
                 bool trainable = true);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;

  size_t size() const { return params_.size(); }
  Parameter& param(size_t i) { return *params_[i]; }
  const Parameter& param(size_t i) const { return *params_[i]; }

  void zero_grads();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, size_t> index_;
};

// Uniform init in +-sqrt(6 / (fan_in + fan_out)).
void init_uniform_glorot(Tensor& t, int64_t fan_in, int64_t fan_out, Rng& rng);

// value <- value - lr * grad for every trainable parameter. Throws
// ContractError when a trainable parameter's gradient shape is wrong.
void sgd_update(ParamStore& params, Real lr);

// Scales all gradients so the global L2 norm is at most max_norm.
// Returns the pre-clip norm.
double clip_global_grad_norm(ParamStore& params, double max_norm);

}  // namespace seqal

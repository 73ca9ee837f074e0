// Copyright 2026 The Tritower Authors.
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

#ifndef TRITOWER_PIPELINE_OPTIMIZER_HPP_
#define TRITOWER_PIPELINE_OPTIMIZER_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tritower/numcore/params.hpp"

namespace tritower {

class Adam {
 public:
  Adam(Real beta1 = 0.9, Real beta2 = 0.98, Real eps = 1e-8);

  // One update from the accumulated gradients; a parameter without a
  // gradient is treated as having a zero gradient.
  void step(ParameterStore& params, Real lr);

  std::size_t updates() const { return t_; }

  void save(const std::filesystem::path& prefix) const;
  // Restores moments for exactly the parameters in params.
  void load(const std::filesystem::path& prefix, const ParameterStore& params,
            std::size_t updates);

 private:
  Real beta1_;
  Real beta2_;
  Real eps_;
  std::size_t t_ = 0;
  std::map<std::string, std::vector<Real>> m_;
  std::map<std::string, std::vector<Real>> v_;
};

// Global L2 norm of all gradients.
Real gradient_norm(const ParameterStore& params);
// Rescales all gradients so their global norm is at most max_norm; returns
// the norm before clipping. max_norm = 0 leaves gradients untouched.
Real clip_gradients(ParameterStore& params, Real max_norm);

}  // namespace tritower

#endif  // TRITOWER_PIPELINE_OPTIMIZER_HPP_

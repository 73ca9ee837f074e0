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

#include "tritower/pipeline/optimizer.hpp"

#include <cmath>

#include "tritower/numcore/errors.hpp"

namespace tritower {

Adam::Adam(Real beta1, Real beta2, Real eps) : beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(ParameterStore& params, Real lr) {
  ++t_;
  const Real c1 = 1 - std::pow(beta1_, static_cast<Real>(t_));
  const Real c2 = 1 - std::pow(beta2_, static_cast<Real>(t_));
  for (const auto& [name, tensor] : params.tensors()) {
    Tensor p = tensor;
    auto& m = m_[name];
    auto& v = v_[name];
    m.resize(p.numel(), 0);
    v.resize(p.numel(), 0);
    auto values = p.mutable_values();
    const bool has = p.has_grad();
    std::span<const Real> g = has ? p.grad() : std::span<const Real>();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const Real gi = has ? g[i] : 0;
      m[i] = beta1_ * m[i] + (1 - beta1_) * gi;
      v[i] = beta2_ * v[i] + (1 - beta2_) * gi * gi;
      values[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

void Adam::save(const std::filesystem::path& prefix) const {
  std::map<std::string, Tensor> bundle;
  for (const auto& [name, m] : m_) bundle.emplace("m." + name, Tensor({m.size()}, m));
  for (const auto& [name, v] : v_) bundle.emplace("v." + name, Tensor({v.size()}, v));
  save_tensor_bundle(prefix, bundle);
}

void Adam::load(const std::filesystem::path& prefix, const ParameterStore& params,
                std::size_t updates) {
  auto bundle = load_tensor_bundle(prefix);
  m_.clear();
  v_.clear();
  for (const auto& [name, tensor] : params.tensors()) {
    auto m = bundle.find("m." + name);
    auto v = bundle.find("v." + name);
    if (m == bundle.end() || v == bundle.end()) {
      if (updates == 0) continue;
      throw FormatError("optimizer state lacks moments for " + name);
    }
    if (m->second.numel() != tensor.numel() || v->second.numel() != tensor.numel()) {
      throw DimensionError("optimizer moments for " + name + " have the wrong size");
    }
    m_[name] = m->second.to_vector();
    v_[name] = v->second.to_vector();
  }
  t_ = updates;
}

Real gradient_norm(const ParameterStore& params) {
  Real sq = 0;
  for (const auto& [name, tensor] : params.tensors()) {
    if (!tensor.has_grad()) continue;
    for (Real g : tensor.grad()) sq += g * g;
  }
  return std::sqrt(sq);
}

Real clip_gradients(ParameterStore& params, Real max_norm) {
  const Real norm = gradient_norm(params);
  if (max_norm <= 0 || norm <= max_norm) return norm;
  const Real scale = max_norm / norm;
  for (const auto& [name, tensor] : params.tensors()) {
    if (!tensor.has_grad()) continue;
    Tensor p = tensor;
    for (Real& g : p.mutable_grad()) g *= scale;
  }
  return norm;
}

}  // namespace tritower

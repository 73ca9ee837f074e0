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

#include "tritower/numcore/embedding.hpp"

#include <cmath>
#include <string>

#include "tritower/numcore/errors.hpp"

namespace tritower {

Real dot(std::span<const Real> a, std::span<const Real> b) {
  if (a.size() != b.size()) {
    throw DimensionError("dot of vectors with " + std::to_string(a.size()) +
                         " and " + std::to_string(b.size()) + " entries");
  }
  Real acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

EmbeddingVector EmbeddingVector::from_unit(std::vector<Real> values,
                                           Real tolerance) {
  const Real n = std::sqrt(tritower::dot(values, values));
  if (std::abs(n - Real{1}) > tolerance) {
    throw ContractError("embedding norm " + std::to_string(n) +
                        " is not 1 within " + std::to_string(tolerance));
  }
  return EmbeddingVector(std::move(values));
}

EmbeddingVector EmbeddingVector::normalize(std::span<const Real> values) {
  const Real n = std::sqrt(tritower::dot(values, values));
  if (!(n > 0)) throw DegenerateInputError("cannot normalize a zero vector");
  std::vector<Real> out(values.begin(), values.end());
  for (Real& v : out) v /= n;
  return EmbeddingVector(std::move(out));
}

Real EmbeddingVector::dot(const EmbeddingVector& other) const {
  return tritower::dot(values_, other.values_);
}

Real EmbeddingVector::norm() const { return std::sqrt(tritower::dot(values_, values_)); }

EmbeddingVector to_embedding(const Tensor& x) {
  if (x.rank() != 1) {
    throw DimensionError("embedding expects a vector, got " + shape_string(x.shape()));
  }
  return EmbeddingVector::normalize(x.values());
}

}  // namespace tritower

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

#ifndef TRITOWER_NUMCORE_EMBEDDING_HPP_
#define TRITOWER_NUMCORE_EMBEDDING_HPP_

#include <span>
#include <vector>

#include "tritower/numcore/tensor.hpp"

namespace tritower {

// Dense L2-normalized vector: u for queries, v for products.
class EmbeddingVector {
 public:
  static constexpr Real kNormTolerance = 1e-6;

  EmbeddingVector() = default;

  // Adopts values that are already unit-norm (within tolerance).
  static EmbeddingVector from_unit(std::vector<Real> values,
                                   Real tolerance = kNormTolerance);
  // Normalizes; a zero vector is a DegenerateInputError.
  static EmbeddingVector normalize(std::span<const Real> values);

  std::size_t dim() const { return values_.size(); }
  std::span<const Real> values() const { return values_; }
  Real dot(const EmbeddingVector& other) const;
  Real norm() const;

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  explicit EmbeddingVector(std::vector<Real> values) : values_(std::move(values)) {}
  std::vector<Real> values_;
};

Real dot(std::span<const Real> a, std::span<const Real> b);

// l2_normalize on a rank-1 tensor, returned as a value type.
EmbeddingVector to_embedding(const Tensor& x);

}  // namespace tritower

#endif  // TRITOWER_NUMCORE_EMBEDDING_HPP_

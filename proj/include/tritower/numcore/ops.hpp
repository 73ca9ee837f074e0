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

#ifndef TRITOWER_NUMCORE_OPS_HPP_
#define TRITOWER_NUMCORE_OPS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tritower/numcore/tensor.hpp"

// Differentiable tensor operations.
//
// Elementwise binary ops broadcast along trailing axes only: the smaller
// operand's shape must be a suffix of the larger one's, or hold a single
// value. Anything else is a DimensionError.
namespace tritower::ops {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, Real factor);
Tensor shift(const Tensor& x, Real offset);
Tensor neg(const Tensor& x);

// Matrix products on rank-2 tensors. matmul_nt computes a * b^T.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);

// Softmax over the last axis of x / temperature, with max subtraction.
Tensor softmax(const Tensor& x, Real temperature = 1.0);

// Normalizes over the last axis. eps must be >= 0; a zero-variance row with
// eps == 0 is a DegenerateInputError.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  Real eps);

// Exact (erf-based) GELU.
Tensor gelu(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor sigmoid(const Tensor& x);
// log(1 + e^x), evaluated without overflow.
Tensor softplus(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// log(sum(exp(x))) over every element; x must be non-empty.
Tensor logsumexp(const Tensor& x);

// Unit-normalizes each row (last axis). Zero rows are degenerate.
Tensor l2_normalize(const Tensor& x);

Tensor reshape(const Tensor& x, Shape shape);
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids);
Tensor gather_elements(const Tensor& x, std::span<const std::size_t> flat);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);

// Mean token-level cross entropy of logits[n x C] against targets; entries
// equal to kIgnoreLabel are skipped. No counted rows yields a constant 0.
inline constexpr std::int64_t kIgnoreLabel = -1;
Tensor cross_entropy(const Tensor& logits, std::span<const std::int64_t> targets);

}  // namespace tritower::ops

#endif  // TRITOWER_NUMCORE_OPS_HPP_

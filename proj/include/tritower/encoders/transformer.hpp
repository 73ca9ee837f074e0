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

#ifndef TRITOWER_ENCODERS_TRANSFORMER_HPP_
#define TRITOWER_ENCODERS_TRANSFORMER_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tritower/numcore/params.hpp"
#include "tritower/numcore/tensor.hpp"

// Transformer building blocks shared by the towers and the fusion module.
// Parameters live in a ParameterStore under a caller-chosen prefix.
namespace tritower::nn {

inline constexpr Real kLayerNormEps = 1e-5;
// Additive logit for keys that must receive no attention.
inline constexpr Real kMaskedLogit = -1e30;

void add_linear(ParameterStore& store, const std::string& prefix, std::size_t in,
                std::size_t out, std::mt19937_64& rng);
// x[n x in] * w + b
Tensor linear(const ParameterStore& store, const std::string& prefix,
              const Tensor& x);

void add_layer_norm(ParameterStore& store, const std::string& prefix, std::size_t d);
Tensor layer_norm(const ParameterStore& store, const std::string& prefix,
                  const Tensor& x);

void add_attention(ParameterStore& store, const std::string& prefix,
                   std::size_t d_model, std::mt19937_64& rng);

// Sum over heads of the attention probabilities, rows = attending positions,
// columns = keys. Filled only when a probe is passed.
struct AttentionProbe {
  std::size_t rows = 0;
  std::size_t keys = 0;
  std::size_t heads = 0;
  std::vector<Real> prob_sum;
};

// Multi-head scaled dot-product attention. Queries come from `queries`, keys
// and values from `memory`. key_keep (optional, one entry per memory row)
// zeroes the attention paid to rows marked 0.
Tensor attention(const ParameterStore& store, const std::string& prefix,
                 const Tensor& queries, const Tensor& memory, std::size_t n_heads,
                 const std::vector<std::uint8_t>* key_keep = nullptr,
                 AttentionProbe* probe = nullptr);

void add_feed_forward(ParameterStore& store, const std::string& prefix,
                      std::size_t d_model, std::size_t d_ff, std::mt19937_64& rng);
// w2 * gelu(w1 * x + b1) + b2
Tensor feed_forward(const ParameterStore& store, const std::string& prefix,
                    const Tensor& x);

void add_encoder_block(ParameterStore& store, const std::string& prefix,
                       std::size_t d_model, std::size_t d_ff, std::mt19937_64& rng);
// Pre-norm block: h = x + attn(ln1(x)); out = h + ffn(ln2(h)).
Tensor encoder_block(const ParameterStore& store, const std::string& prefix,
                     const Tensor& x, std::size_t n_heads);

}  // namespace tritower::nn

#endif  // TRITOWER_ENCODERS_TRANSFORMER_HPP_

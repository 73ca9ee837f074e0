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

#ifndef TRITOWER_ENCODERS_TOWERS_HPP_
#define TRITOWER_ENCODERS_TOWERS_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tritower/numcore/params.hpp"
#include "tritower/numcore/tensor.hpp"
#include "tritower/textproc/sequence.hpp"

namespace tritower {

// Shape of one tower. input_dim is the vocabulary size for text towers and
// the patch feature dimension for the image tower; max_len counts tokens
// (text) or patches (image, excluding the prepended CLS).
struct EncoderConfig {
  std::size_t n_layers = 2;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t d_ff = 128;
  std::size_t max_len = kDefaultQueryMaxLen;
  std::size_t input_dim = 0;

  void validate() const;
};

// Per-position hidden states. Trailing padding is dropped before the
// transformer runs, so hidden has one row per non-padding position and
// padding can never leak into any output.
struct EncoderOutput {
  Tensor hidden;  // [L x d_model]
  Tensor cls;     // [d_model], equal to hidden row 0
  std::vector<std::uint8_t> attention_mask;
};

enum class TextTower { kQuery, kTitle };
const char* tower_prefix(TextTower tower);
inline constexpr const char* kImagePrefix = "image";

void add_text_tower(ParameterStore& store, TextTower tower,
                    const EncoderConfig& cfg, std::mt19937_64& rng);
void add_image_tower(ParameterStore& store, const EncoderConfig& cfg,
                     std::mt19937_64& rng);

// Token + segment + learned position embeddings, then cfg.n_layers pre-norm
// blocks and a final layer norm.
EncoderOutput encode_text(const ParameterStore& store, TextTower tower,
                          const EncoderConfig& cfg, const TokenSequence& seq);

// Patch projection d_img -> d_model, a learned CLS row in front, segment mark
// I and positions, then the blocks.
EncoderOutput encode_image(const ParameterStore& store, const EncoderConfig& cfg,
                           const PatchSequence& patches);
// Same, over a [P x d_img] feature tensor (differentiable in the features).
EncoderOutput encode_image(const ParameterStore& store, const EncoderConfig& cfg,
                           const Tensor& features);

}  // namespace tritower

#endif  // TRITOWER_ENCODERS_TOWERS_HPP_

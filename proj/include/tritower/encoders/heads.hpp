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

#ifndef TRITOWER_ENCODERS_HEADS_HPP_
#define TRITOWER_ENCODERS_HEADS_HPP_

#include <random>

#include "tritower/encoders/towers.hpp"
#include "tritower/numcore/params.hpp"
#include "tritower/numcore/tensor.hpp"

namespace tritower {

void add_embedding_heads(ParameterStore& store, std::size_t d_model,
                         std::size_t embed_dim, std::mt19937_64& rng);

// u = l2_normalize(proj(cls_Q)), shape [embed_dim].
Tensor query_embedding(const ParameterStore& store, const EncoderOutput& query);

struct ProductEmbedding {
  Tensor v;     // [embed_dim], unit norm
  Tensor gate;  // [2] = {w_title, w_image}, sums to 1
};

// Modality gate: a two-way softmax over learned scalar scores of the two CLS
// vectors; v = l2_normalize(proj(w_title * cls_T + w_image * cls_I)).
// Uses no query input, so products can be embedded offline.
ProductEmbedding product_embedding(const ParameterStore& store,
                                   const EncoderOutput& title,
                                   const EncoderOutput& image);

void add_pretraining_heads(ParameterStore& store, std::size_t d_model,
                           std::size_t vocab_size, std::size_t d_img,
                           std::mt19937_64& rng);
// Vocabulary logits per position for the query or title tower.
Tensor mlm_logits(const ParameterStore& store, TextTower tower,
                  const EncoderOutput& out);
// Reconstructed patch features, one row per patch (the CLS row is skipped).
Tensor mpm_predictions(const ParameterStore& store, const EncoderOutput& image);

}  // namespace tritower

#endif  // TRITOWER_ENCODERS_HEADS_HPP_

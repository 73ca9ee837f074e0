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

#include "tritower/encoders/heads.hpp"

#include "tritower/encoders/transformer.hpp"
#include "tritower/numcore/errors.hpp"
#include "tritower/numcore/ops.hpp"

namespace tritower {

void add_embedding_heads(ParameterStore& store, std::size_t d_model,
                         std::size_t embed_dim, std::mt19937_64& rng) {
  nn::add_linear(store, "heads.query_proj", d_model, embed_dim, rng);
  nn::add_linear(store, "heads.product_proj", d_model, embed_dim, rng);
  nn::add_linear(store, "heads.gate_title", d_model, 1, rng);
  nn::add_linear(store, "heads.gate_image", d_model, 1, rng);
}

namespace {

Tensor as_row(const Tensor& v) { return ops::reshape(v, {1, v.numel()}); }

}  // namespace

Tensor query_embedding(const ParameterStore& store, const EncoderOutput& query) {
  Tensor projected = nn::linear(store, "heads.query_proj", as_row(query.cls));
  Tensor u = ops::l2_normalize(projected);
  return ops::reshape(u, {u.numel()});
}

ProductEmbedding product_embedding(const ParameterStore& store,
                                   const EncoderOutput& title,
                                   const EncoderOutput& image) {
  if (title.cls.numel() != image.cls.numel()) {
    throw DimensionError("title cls " + shape_string(title.cls.shape()) +
                         " and image cls " + shape_string(image.cls.shape()) +
                         " differ in width");
  }
  Tensor cls_t = as_row(title.cls);
  Tensor cls_i = as_row(image.cls);
  Tensor scores[] = {nn::linear(store, "heads.gate_title", cls_t),
                     nn::linear(store, "heads.gate_image", cls_i)};
  Tensor gate = ops::softmax(ops::concat_cols(scores));  // [1 x 2]
  Tensor mixed = ops::add(ops::mul(cls_t, ops::slice_cols(gate, 0, 1)),
                          ops::mul(cls_i, ops::slice_cols(gate, 1, 2)));
  Tensor v = ops::l2_normalize(nn::linear(store, "heads.product_proj", mixed));
  return {ops::reshape(v, {v.numel()}), ops::reshape(gate, {2})};
}

void add_pretraining_heads(ParameterStore& store, std::size_t d_model,
                           std::size_t vocab_size, std::size_t d_img,
                           std::mt19937_64& rng) {
  nn::add_linear(store, "heads.mlm_query", d_model, vocab_size, rng);
  nn::add_linear(store, "heads.mlm_title", d_model, vocab_size, rng);
  nn::add_linear(store, "heads.mpm", d_model, d_img, rng);
}

Tensor mlm_logits(const ParameterStore& store, TextTower tower,
                  const EncoderOutput& out) {
  return nn::linear(store,
                    tower == TextTower::kQuery ? "heads.mlm_query" : "heads.mlm_title",
                    out.hidden);
}

Tensor mpm_predictions(const ParameterStore& store, const EncoderOutput& image) {
  Tensor patch_rows = ops::slice_rows(image.hidden, 1, image.hidden.rows());
  return nn::linear(store, "heads.mpm", patch_rows);
}

}  // namespace tritower

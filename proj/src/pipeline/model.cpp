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

#include "tritower/pipeline/model.hpp"

#include <map>
#include <random>

#include "tritower/numcore/errors.hpp"

namespace tritower {

ModelConfig model_config(const TrainConfig& cfg, std::size_t vocab_size,
                         std::size_t num_patches, std::size_t patch_dim) {
  ModelConfig m;
  EncoderConfig base;
  base.n_layers = cfg.n_layers;
  base.d_model = cfg.d_model;
  base.n_heads = cfg.n_heads;
  base.d_ff = cfg.d_ff;
  m.query = base;
  m.query.max_len = cfg.query_max_len;
  m.query.input_dim = vocab_size;
  m.title = base;
  m.title.max_len = cfg.title_max_len;
  m.title.input_dim = vocab_size;
  m.image = base;
  m.image.max_len = num_patches;
  m.image.input_dim = patch_dim;
  m.embed_dim = cfg.embed_dim;
  m.fusion.n_fusion_layers = cfg.fusion_layers;
  m.fusion.d_model = cfg.d_model;
  m.fusion.n_heads = cfg.n_heads;
  m.fusion.d_ff = cfg.d_ff;
  m.fusion.direction = cfg.fusion_direction;
  m.with_fusion = cfg.loss_mode != LossMode::kNoMa;
  return m;
}

Model init_model(const ModelConfig& cfg, Vocabulary vocab, std::uint64_t seed) {
  if (vocab.size() != cfg.query.input_dim || vocab.size() != cfg.title.input_dim) {
    throw DimensionError("vocabulary of " + std::to_string(vocab.size()) +
                         " tokens does not match the text tower input size");
  }
  Model model{cfg, std::move(vocab), {}};
  std::mt19937_64 rng(seed);
  add_text_tower(model.params, TextTower::kQuery, cfg.query, rng);
  add_text_tower(model.params, TextTower::kTitle, cfg.title, rng);
  add_image_tower(model.params, cfg.image, rng);
  add_embedding_heads(model.params, cfg.query.d_model, cfg.embed_dim, rng);
  add_pretraining_heads(model.params, cfg.query.d_model, model.vocab.size(),
                        cfg.image.input_dim, rng);
  if (cfg.with_fusion) {
    add_fusion(model.params, cfg.fusion, rng);
    add_qpc_head(model.params, cfg.fusion.d_model, rng);
  }
  return model;
}

PreparedProduct prepare_product(const Model& model, const ProductRecord& record) {
  if (record.num_patches != model.cfg.image.max_len ||
      record.patch_dim != model.cfg.image.input_dim) {
    throw DimensionError("product " + std::to_string(record.product_id) + " has " +
                         std::to_string(record.num_patches) + "x" +
                         std::to_string(record.patch_dim) + " patches, model expects " +
                         std::to_string(model.cfg.image.max_len) + "x" +
                         std::to_string(model.cfg.image.input_dim));
  }
  PreparedProduct p;
  p.product_id = record.product_id;
  p.category = record.category;
  p.title = tokenize(model.vocab, record.title, Segment::kTitle, model.cfg.title.max_len);
  p.patches = make_patch_sequence(record.patches, record.num_patches, record.patch_dim);
  for (const auto& q : record.queries) {
    p.queries.push_back(tokenize(model.vocab, q, Segment::kQuery, model.cfg.query.max_len));
  }
  return p;
}

EncoderOutput encode_query(const Model& model, const TokenSequence& seq) {
  return encode_text(model.params, TextTower::kQuery, model.cfg.query, seq);
}

EncoderOutput encode_title(const Model& model, const TokenSequence& seq) {
  return encode_text(model.params, TextTower::kTitle, model.cfg.title, seq);
}

EncoderOutput encode_patches(const Model& model, const PatchSequence& patches) {
  return encode_image(model.params, model.cfg.image, patches);
}

ServedProduct embed_product(const Model& model, const ProductRecord& record) {
  const TokenSequence title =
      tokenize(model.vocab, record.title, Segment::kTitle, model.cfg.title.max_len);
  const PatchSequence patches =
      make_patch_sequence(record.patches, record.num_patches, record.patch_dim);
  auto pe = product_embedding(model.params, encode_title(model, title),
                              encode_patches(model, patches));
  auto g = pe.gate.values();
  return {to_embedding(pe.v), {g[0], g[1]}};
}

EmbeddingVector embed_query(const Model& model, const std::string& text) {
  const TokenSequence seq = tokenize(model.vocab, text, Segment::kQuery, model.cfg.query.max_len);
  return to_embedding(query_embedding(model.params, encode_query(model, seq)));
}

std::vector<CategoryModality> modality_attention_by_category(
    const Model& model, const std::vector<ProductRecord>& corpus) {
  std::vector<CategoryModality> out;
  if (!model.cfg.with_fusion) return out;
  std::map<std::string, CategoryModality> acc;
  for (const auto& record : corpus) {
    if (record.queries.empty()) continue;
    PreparedProduct p = prepare_product(model, record);
    auto fused = modal_adapt(model.params, model.cfg.fusion, encode_query(model, p.queries[0]),
                             encode_title(model, p.title), encode_patches(model, p.patches));
    auto& c = acc[record.category];
    c.category = record.category;
    c.a_title += fused.modality_attention[0];
    c.a_image += fused.modality_attention[1];
    ++c.pairs;
  }
  for (auto& [name, c] : acc) {
    c.a_title /= static_cast<Real>(c.pairs);
    c.a_image /= static_cast<Real>(c.pairs);
    out.push_back(c);
  }
  return out;
}

}  // namespace tritower

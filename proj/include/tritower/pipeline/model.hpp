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

#ifndef TRITOWER_PIPELINE_MODEL_HPP_
#define TRITOWER_PIPELINE_MODEL_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tritower/encoders/heads.hpp"
#include "tritower/encoders/towers.hpp"
#include "tritower/fusion/modal_adaptation.hpp"
#include "tritower/numcore/embedding.hpp"
#include "tritower/numcore/params.hpp"
#include "tritower/pipeline/config.hpp"
#include "tritower/textproc/corpus.hpp"
#include "tritower/textproc/vocabulary.hpp"

namespace tritower {

struct ModelConfig {
  EncoderConfig query;
  EncoderConfig title;
  EncoderConfig image;
  std::size_t embed_dim = 64;
  FusionConfig fusion;
  bool with_fusion = true;
};

ModelConfig model_config(const TrainConfig& cfg, std::size_t vocab_size,
                         std::size_t num_patches, std::size_t patch_dim);

struct Model {
  ModelConfig cfg;
  Vocabulary vocab;
  ParameterStore params;
};

// Creates every parameter from the seed.
Model init_model(const ModelConfig& cfg, Vocabulary vocab, std::uint64_t seed);

// Tokenized/typed view of one catalog product.
struct PreparedProduct {
  ProductId product_id = 0;
  std::string category;
  TokenSequence title;
  PatchSequence patches;
  std::vector<TokenSequence> queries;
};

PreparedProduct prepare_product(const Model& model, const ProductRecord& record);

EncoderOutput encode_query(const Model& model, const TokenSequence& seq);
EncoderOutput encode_title(const Model& model, const TokenSequence& seq);
EncoderOutput encode_patches(const Model& model, const PatchSequence& patches);

// Serving path: title + image towers and the gate only.
struct ServedProduct {
  EmbeddingVector v;
  std::array<Real, 2> gate{0, 0};
};
ServedProduct embed_product(const Model& model, const ProductRecord& record);
EmbeddingVector embed_query(const Model& model, const std::string& text);

// Mean fusion modality attention over (own query, product) pairs per
// category; empty if the model has no fusion module.
struct CategoryModality {
  std::string category;
  Real a_title = 0;
  Real a_image = 0;
  std::size_t pairs = 0;
};
std::vector<CategoryModality> modality_attention_by_category(
    const Model& model, const std::vector<ProductRecord>& corpus);

}  // namespace tritower

#endif  // TRITOWER_PIPELINE_MODEL_HPP_

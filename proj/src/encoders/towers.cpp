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

#include "tritower/encoders/towers.hpp"

#include <numeric>

#include "tritower/encoders/transformer.hpp"
#include "tritower/numcore/errors.hpp"
#include "tritower/numcore/ops.hpp"
#include "tritower/textproc/vocabulary.hpp"

namespace tritower {

void EncoderConfig::validate() const {
  if (n_layers == 0 || d_model == 0 || n_heads == 0 || d_ff == 0 || max_len == 0 ||
      input_dim == 0) {
    throw ParameterError("encoder config counts must all be positive");
  }
  if (d_model % n_heads != 0) {
    throw ParameterError("d_model " + std::to_string(d_model) +
                         " is not divisible by n_heads " + std::to_string(n_heads));
  }
}

const char* tower_prefix(TextTower tower) {
  return tower == TextTower::kQuery ? "query" : "title";
}

namespace {

void add_blocks(ParameterStore& store, const std::string& prefix,
                const EncoderConfig& cfg, std::mt19937_64& rng) {
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    nn::add_encoder_block(store, prefix + ".layers." + std::to_string(l), cfg.d_model,
                          cfg.d_ff, rng);
  }
  nn::add_layer_norm(store, prefix + ".final_ln", cfg.d_model);
}

Tensor run_blocks(const ParameterStore& store, const std::string& prefix,
                  const EncoderConfig& cfg, Tensor x) {
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    x = nn::encoder_block(store, prefix + ".layers." + std::to_string(l), x, cfg.n_heads);
  }
  return nn::layer_norm(store, prefix + ".final_ln", x);
}

Tensor segment_row(const ParameterStore& store, const std::string& prefix,
                   Segment segment) {
  const std::size_t id[] = {static_cast<std::size_t>(segment)};
  return ops::gather_rows(store.get(prefix + ".segment_embedding"), id);
}

Tensor positions(const ParameterStore& store, const std::string& prefix,
                 std::size_t count) {
  return ops::slice_rows(store.get(prefix + ".position_embedding"), 0, count);
}

EncoderOutput finish(Tensor hidden, std::vector<std::uint8_t> mask) {
  EncoderOutput out;
  out.cls = ops::reshape(ops::slice_rows(hidden, 0, 1), {hidden.cols()});
  out.hidden = std::move(hidden);
  out.attention_mask = std::move(mask);
  return out;
}

}  // namespace

void add_text_tower(ParameterStore& store, TextTower tower,
                    const EncoderConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  const std::string prefix = tower_prefix(tower);
  store.add_normal(prefix + ".token_embedding", {cfg.input_dim, cfg.d_model}, rng);
  store.add_normal(prefix + ".position_embedding", {cfg.max_len, cfg.d_model}, rng);
  store.add_normal(prefix + ".segment_embedding", {kNumSegments, cfg.d_model}, rng);
  add_blocks(store, prefix, cfg, rng);
}

void add_image_tower(ParameterStore& store, const EncoderConfig& cfg,
                     std::mt19937_64& rng) {
  cfg.validate();
  const std::string prefix = kImagePrefix;
  nn::add_linear(store, prefix + ".patch_proj", cfg.input_dim, cfg.d_model, rng);
  store.add_normal(prefix + ".cls", {1, cfg.d_model}, rng);
  store.add_normal(prefix + ".position_embedding", {cfg.max_len + 1, cfg.d_model}, rng);
  store.add_normal(prefix + ".segment_embedding", {kNumSegments, cfg.d_model}, rng);
  add_blocks(store, prefix, cfg, rng);
}

EncoderOutput encode_text(const ParameterStore& store, TextTower tower,
                          const EncoderConfig& cfg, const TokenSequence& seq) {
  const std::string prefix = tower_prefix(tower);
  if (seq.ids.size() > cfg.max_len) {
    throw LengthError(std::string(prefix) + " tower: sequence of " +
                      std::to_string(seq.ids.size()) + " exceeds max_len " +
                      std::to_string(cfg.max_len));
  }
  const std::size_t len = seq.length();
  if (len == 0) throw ContractError("token sequence lacks its CLS position");
  std::vector<std::size_t> ids(len);
  for (std::size_t i = 0; i < len; ++i) {
    const TokenId id = seq.ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= cfg.input_dim) {
      throw VocabularyError("token id " + std::to_string(id) + " outside vocabulary of " +
                            std::to_string(cfg.input_dim));
    }
    ids[i] = static_cast<std::size_t>(id);
  }
  Tensor x = ops::gather_rows(store.get(prefix + ".token_embedding"), ids);
  x = ops::add(x, positions(store, prefix, len));
  x = ops::add(x, ops::reshape(segment_row(store, prefix, seq.segment), {cfg.d_model}));
  return finish(run_blocks(store, prefix, cfg, std::move(x)),
                std::vector<std::uint8_t>(len, 1));
}

EncoderOutput encode_image(const ParameterStore& store, const EncoderConfig& cfg,
                           const PatchSequence& patches) {
  return encode_image(store, cfg,
                      Tensor::matrix(patches.num_patches, patches.dim, patches.features));
}

EncoderOutput encode_image(const ParameterStore& store, const EncoderConfig& cfg,
                           const Tensor& features) {
  const std::string prefix = kImagePrefix;
  if (features.rank() != 2 || features.cols() != cfg.input_dim) {
    throw DimensionError("image tower expects patches of dimension " +
                         std::to_string(cfg.input_dim) + ", got " +
                         shape_string(features.shape()));
  }
  const std::size_t num_patches = features.rows();
  if (num_patches > cfg.max_len) {
    throw LengthError("image tower: " + std::to_string(num_patches) +
                      " patches exceed max_len " + std::to_string(cfg.max_len));
  }
  Tensor projected = nn::linear(store, prefix + ".patch_proj", features);
  Tensor parts[] = {store.get(prefix + ".cls"), projected};
  Tensor x = ops::concat_rows(parts);
  x = ops::add(x, positions(store, prefix, num_patches + 1));
  x = ops::add(x, ops::reshape(segment_row(store, prefix, Segment::kImage), {cfg.d_model}));
  return finish(run_blocks(store, prefix, cfg, std::move(x)),
                std::vector<std::uint8_t>(num_patches + 1, 1));
}

}  // namespace tritower

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

#ifndef TRITOWER_FUSION_MODAL_ADAPTATION_HPP_
#define TRITOWER_FUSION_MODAL_ADAPTATION_HPP_

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tritower/encoders/towers.hpp"
#include "tritower/numcore/params.hpp"
#include "tritower/numcore/tensor.hpp"

namespace tritower {

// Which stream issues the cross-attention queries.
//   kQueryReadsProduct: the query tokens attend over the fused title+image
//     stream; the output lives on the query-aligned stream.
//   kProductReadsQuery: the fused stream attends over the query tokens; the
//     output lives on the fused stream (row 0 is the title [CLS]).
enum class FusionDirection { kQueryReadsProduct, kProductReadsQuery };

FusionDirection parse_fusion_direction(const std::string& name);
const char* fusion_direction_name(FusionDirection direction);

struct FusionConfig {
  std::size_t n_fusion_layers = 2;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t d_ff = 128;
  FusionDirection direction = FusionDirection::kQueryReadsProduct;

  void validate() const;
};

struct FusionOptions {
  // Diagnostic hook: drives every image-key attention logit to the masked
  // value, forcing all attention mass onto title keys.
  bool suppress_image_keys = false;
};

struct FusionOutput {
  Tensor joint_hidden;
  Tensor joint_cls;  // [d_model]
  std::array<Real, 2> modality_attention{0, 0};  // {a_title, a_image}
};

void add_fusion(ParameterStore& store, const FusionConfig& cfg, std::mt19937_64& rng);

FusionOutput modal_adapt(const ParameterStore& store, const FusionConfig& cfg,
                         const EncoderOutput& query, const EncoderOutput& title,
                         const EncoderOutput& image, const FusionOptions& options = {});

void add_qpc_head(ParameterStore& store, std::size_t d_model, std::mt19937_64& rng);
// Returns the scalar matching logit; sigmoid of it is p_QPC.
Tensor qpc_logit(const ParameterStore& store, const Tensor& joint_cls);
Real qpc_probability(Real logit);

// positive[i * n + j] != 0 marks product j as a positive of query i. Returns
// (query, negative product) pairs; rows without any negative are skipped.
std::vector<std::pair<std::size_t, std::size_t>> select_hard_negatives(
    const Tensor& sim, const std::vector<std::uint8_t>& positive);
// Positives are the diagonal.
std::vector<std::pair<std::size_t, std::size_t>> select_hard_negatives(const Tensor& sim);

}  // namespace tritower

#endif  // TRITOWER_FUSION_MODAL_ADAPTATION_HPP_

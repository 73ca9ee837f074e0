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

#include "tritower/fusion/modal_adaptation.hpp"

#include <cmath>
#include <iostream>

#include "tritower/encoders/transformer.hpp"
#include "tritower/numcore/errors.hpp"
#include "tritower/numcore/ops.hpp"

namespace tritower {

FusionDirection parse_fusion_direction(const std::string& name) {
  if (name == "query-reads-product") return FusionDirection::kQueryReadsProduct;
  if (name == "product-reads-query") return FusionDirection::kProductReadsQuery;
  throw ParameterError("unknown fusion direction '" + name +
                       "' (expected query-reads-product or product-reads-query)");
}

const char* fusion_direction_name(FusionDirection direction) {
  return direction == FusionDirection::kQueryReadsProduct ? "query-reads-product"
                                                          : "product-reads-query";
}

void FusionConfig::validate() const {
  if (n_fusion_layers == 0) throw ParameterError("n_fusion_layers must be at least 1");
  if (d_model == 0 || d_ff == 0) throw ParameterError("fusion widths must be positive");
  if (n_heads == 0 || d_model % n_heads != 0) {
    throw ParameterError("fusion d_model " + std::to_string(d_model) +
                         " is not divisible by n_heads " + std::to_string(n_heads));
  }
}

namespace {

std::string layer_prefix(std::size_t l) { return "fusion.layers." + std::to_string(l); }

std::vector<std::uint8_t> keep_mask(const EncoderOutput& out) {
  if (out.attention_mask.size() == out.hidden.rows()) return out.attention_mask;
  return std::vector<std::uint8_t>(out.hidden.rows(), 1);
}

}  // namespace

void add_fusion(ParameterStore& store, const FusionConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  for (std::size_t l = 0; l < cfg.n_fusion_layers; ++l) {
    const std::string p = layer_prefix(l);
    nn::add_layer_norm(store, p + ".self_ln", cfg.d_model);
    nn::add_attention(store, p + ".self_attn", cfg.d_model, rng);
    nn::add_layer_norm(store, p + ".cross_ln_q", cfg.d_model);
    nn::add_layer_norm(store, p + ".cross_ln_kv", cfg.d_model);
    nn::add_attention(store, p + ".cross_attn", cfg.d_model, rng);
    nn::add_layer_norm(store, p + ".ffn_ln", cfg.d_model);
    nn::add_feed_forward(store, p + ".ffn", cfg.d_model, cfg.d_ff, rng);
  }
  nn::add_layer_norm(store, "fusion.final_ln", cfg.d_model);
}

FusionOutput modal_adapt(const ParameterStore& store, const FusionConfig& cfg,
                         const EncoderOutput& query, const EncoderOutput& title,
                         const EncoderOutput& image, const FusionOptions& options) {
  const std::size_t d = cfg.d_model;
  for (const EncoderOutput* s : {&query, &title, &image}) {
    if (s->hidden.rank() != 2 || s->hidden.cols() != d) {
      throw DimensionError("modal_adapt: stream " + shape_string(s->hidden.shape()) +
                           " does not have width " + std::to_string(d));
    }
  }
  const std::size_t lt = title.hidden.rows();

  std::vector<std::uint8_t> fused_keep = keep_mask(title);
  auto image_keep = keep_mask(image);
  fused_keep.insert(fused_keep.end(), image_keep.begin(), image_keep.end());
  std::vector<std::uint8_t> probed_keep = fused_keep;
  if (options.suppress_image_keys) {
    std::fill(probed_keep.begin() + static_cast<std::ptrdiff_t>(lt), probed_keep.end(), 0);
  }
  const auto query_keep = keep_mask(query);

  const Tensor streams[] = {title.hidden, image.hidden};
  Tensor fused = ops::concat_rows(streams);
  Tensor q = query.hidden;

  Real mass_title = 0;
  Real mass_image = 0;
  for (std::size_t l = 0; l < cfg.n_fusion_layers; ++l) {
    const std::string p = layer_prefix(l);
    nn::AttentionProbe probe;
    const bool fused_reads = cfg.direction == FusionDirection::kProductReadsQuery;

    Tensor normed = nn::layer_norm(store, p + ".self_ln", fused);
    fused = ops::add(fused, nn::attention(store, p + ".self_attn", normed, normed, cfg.n_heads,
                                          &probed_keep, fused_reads ? &probe : nullptr));

    Tensor kv = nn::layer_norm(store, p + ".cross_ln_kv", fused_reads ? q : fused);
    Tensor& target = fused_reads ? fused : q;
    Tensor tq = nn::layer_norm(store, p + ".cross_ln_q", target);
    target = ops::add(target, nn::attention(store, p + ".cross_attn", tq, kv, cfg.n_heads,
                                            fused_reads ? &query_keep : &probed_keep,
                                            fused_reads ? nullptr : &probe));
    target = ops::add(target, nn::feed_forward(store, p + ".ffn",
                                               nn::layer_norm(store, p + ".ffn_ln", target)));

    // Mass on title vs image keys; in the fused-reads direction the only
    // attention with modality keys is the self-attention.
    for (std::size_t r = 0; r < probe.rows; ++r) {
      for (std::size_t k = 0; k < probe.keys; ++k) {
        if (!probed_keep[k]) continue;
        const Real m = probe.prob_sum[r * probe.keys + k];
        (k < lt ? mass_title : mass_image) += m;
      }
    }
  }

  FusionOutput out;
  Tensor stream = cfg.direction == FusionDirection::kQueryReadsProduct ? q : fused;
  out.joint_hidden = nn::layer_norm(store, "fusion.final_ln", stream);
  out.joint_cls = ops::reshape(ops::slice_rows(out.joint_hidden, 0, 1), {d});
  const Real total = mass_title + mass_image;
  if (total > 0) out.modality_attention = {mass_title / total, mass_image / total};
  return out;
}

void add_qpc_head(ParameterStore& store, std::size_t d_model, std::mt19937_64& rng) {
  nn::add_linear(store, "heads.qpc", d_model, 1, rng);
}

Tensor qpc_logit(const ParameterStore& store, const Tensor& joint_cls) {
  Tensor row = ops::reshape(joint_cls, {1, joint_cls.numel()});
  return ops::reshape(nn::linear(store, "heads.qpc", row), {});
}

Real qpc_probability(Real logit) {
  if (logit >= 0) return Real{1} / (Real{1} + std::exp(-logit));
  const Real e = std::exp(logit);
  return e / (Real{1} + e);
}

std::vector<std::pair<std::size_t, std::size_t>> select_hard_negatives(
    const Tensor& sim, const std::vector<std::uint8_t>& positive) {
  if (sim.rank() != 2 || sim.rows() != sim.cols()) {
    throw DimensionError("similarity matrix must be square, got " +
                         shape_string(sim.shape()));
  }
  const std::size_t n = sim.rows();
  if (positive.size() != n * n) {
    throw DimensionError("positive mask has " + std::to_string(positive.size()) +
                         " entries for a " + shape_string(sim.shape()) + " matrix");
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  auto values = sim.values();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (positive[i * n + j]) continue;
      if (best == n || values[i * n + j] > values[i * n + best]) best = j;
    }
    if (best == n) {
      if (n > 1) {
        std::clog << "warning: query row " << i
                  << " has no in-batch negative; skipping hard-negative pairing\n";
      }
      continue;
    }
    pairs.emplace_back(i, best);
  }
  return pairs;
}

std::vector<std::pair<std::size_t, std::size_t>> select_hard_negatives(const Tensor& sim) {
  const std::size_t n = sim.rank() == 2 ? sim.rows() : 0;
  std::vector<std::uint8_t> diag(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) diag[i * n + i] = 1;
  return select_hard_negatives(sim, diag);
}

}  // namespace tritower

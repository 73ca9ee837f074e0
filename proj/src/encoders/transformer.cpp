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

#include "tritower/encoders/transformer.hpp"

#include <cmath>

#include "tritower/numcore/errors.hpp"
#include "tritower/numcore/ops.hpp"

namespace tritower::nn {

void add_linear(ParameterStore& store, const std::string& prefix, std::size_t in,
                std::size_t out, std::mt19937_64& rng) {
  store.add_normal(prefix + ".w", {in, out}, rng);
  store.add_constant(prefix + ".b", {out}, 0);
}

Tensor linear(const ParameterStore& store, const std::string& prefix,
              const Tensor& x) {
  return ops::add(ops::matmul(x, store.get(prefix + ".w")), store.get(prefix + ".b"));
}

void add_layer_norm(ParameterStore& store, const std::string& prefix, std::size_t d) {
  store.add_constant(prefix + ".gain", {d}, 1);
  store.add_constant(prefix + ".bias", {d}, 0);
}

Tensor layer_norm(const ParameterStore& store, const std::string& prefix,
                  const Tensor& x) {
  return ops::layer_norm(x, store.get(prefix + ".gain"), store.get(prefix + ".bias"),
                         kLayerNormEps);
}

void add_attention(ParameterStore& store, const std::string& prefix,
                   std::size_t d_model, std::mt19937_64& rng) {
  add_linear(store, prefix + ".q", d_model, d_model, rng);
  add_linear(store, prefix + ".k", d_model, d_model, rng);
  add_linear(store, prefix + ".v", d_model, d_model, rng);
  add_linear(store, prefix + ".o", d_model, d_model, rng);
}

Tensor attention(const ParameterStore& store, const std::string& prefix,
                 const Tensor& queries, const Tensor& memory, std::size_t n_heads,
                 const std::vector<std::uint8_t>* key_keep, AttentionProbe* probe) {
  const std::size_t d = queries.cols();
  if (memory.cols() != d) {
    throw DimensionError("attention: queries " + shape_string(queries.shape()) +
                         " and memory " + shape_string(memory.shape()) +
                         " differ in width");
  }
  if (n_heads == 0 || d % n_heads != 0) {
    throw ParameterError("d_model " + std::to_string(d) +
                         " is not divisible by n_heads " + std::to_string(n_heads));
  }
  const std::size_t dh = d / n_heads;
  const std::size_t lq = queries.rows();
  const std::size_t lk = memory.rows();

  Tensor q = linear(store, prefix + ".q", queries);
  Tensor k = linear(store, prefix + ".k", memory);
  Tensor v = linear(store, prefix + ".v", memory);

  Tensor key_bias;
  if (key_keep) {
    if (key_keep->size() != lk) {
      throw DimensionError("attention: key mask has " + std::to_string(key_keep->size()) +
                           " entries for " + std::to_string(lk) + " keys");
    }
    std::vector<Real> bias(lk);
    for (std::size_t j = 0; j < lk; ++j) bias[j] = (*key_keep)[j] ? Real{0} : kMaskedLogit;
    key_bias = Tensor::vector(std::move(bias));
  }
  if (probe) {
    probe->rows = lq;
    probe->keys = lk;
    probe->heads = n_heads;
    probe->prob_sum.assign(lq * lk, Real{0});
  }

  const Real inv_sqrt = Real{1} / std::sqrt(static_cast<Real>(dh));
  std::vector<Tensor> heads;
  heads.reserve(n_heads);
  for (std::size_t h = 0; h < n_heads; ++h) {
    Tensor qh = ops::slice_cols(q, h * dh, (h + 1) * dh);
    Tensor kh = ops::slice_cols(k, h * dh, (h + 1) * dh);
    Tensor vh = ops::slice_cols(v, h * dh, (h + 1) * dh);
    Tensor scores = ops::scale(ops::matmul_nt(qh, kh), inv_sqrt);
    if (key_bias.defined()) scores = ops::add(scores, key_bias);
    Tensor probs = ops::softmax(scores);
    if (probe) {
      auto pv = probs.values();
      for (std::size_t i = 0; i < pv.size(); ++i) probe->prob_sum[i] += pv[i];
    }
    heads.push_back(ops::matmul(probs, vh));
  }
  Tensor merged = n_heads == 1 ? heads[0] : ops::concat_cols(heads);
  return linear(store, prefix + ".o", merged);
}

void add_feed_forward(ParameterStore& store, const std::string& prefix,
                      std::size_t d_model, std::size_t d_ff, std::mt19937_64& rng) {
  add_linear(store, prefix + ".in", d_model, d_ff, rng);
  add_linear(store, prefix + ".out", d_ff, d_model, rng);
}

Tensor feed_forward(const ParameterStore& store, const std::string& prefix,
                    const Tensor& x) {
  return linear(store, prefix + ".out", ops::gelu(linear(store, prefix + ".in", x)));
}

void add_encoder_block(ParameterStore& store, const std::string& prefix,
                       std::size_t d_model, std::size_t d_ff, std::mt19937_64& rng) {
  add_layer_norm(store, prefix + ".ln1", d_model);
  add_attention(store, prefix + ".attn", d_model, rng);
  add_layer_norm(store, prefix + ".ln2", d_model);
  add_feed_forward(store, prefix + ".ffn", d_model, d_ff, rng);
}

Tensor encoder_block(const ParameterStore& store, const std::string& prefix,
                     const Tensor& x, std::size_t n_heads) {
  Tensor normed = layer_norm(store, prefix + ".ln1", x);
  Tensor h = ops::add(x, attention(store, prefix + ".attn", normed, normed, n_heads));
  Tensor ff = feed_forward(store, prefix + ".ffn", layer_norm(store, prefix + ".ln2", h));
  return ops::add(h, ff);
}

}  // namespace tritower::nn

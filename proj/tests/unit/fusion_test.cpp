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

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "support/gradcheck.hpp"
#include "support/naive_transformer.hpp"
#include "tritower/encoders/towers.hpp"
#include "tritower/fusion/modal_adaptation.hpp"
#include "tritower/numcore/errors.hpp"
#include "tritower/numcore/ops.hpp"

namespace tritower {
namespace {

namespace naive = testing::naive;

EncoderOutput stream_of(const Tensor& hidden) {
  EncoderOutput out;
  out.hidden = hidden;
  out.cls = ops::reshape(ops::slice_rows(hidden, 0, 1), {hidden.cols()});
  out.attention_mask.assign(hidden.rows(), 1);
  return out;
}

naive::Mat to_mat(const Tensor& t) {
  naive::Mat m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = t.at(i, j);
  return m;
}

FusionConfig small_fusion(std::size_t layers = 2) {
  FusionConfig cfg;
  cfg.n_fusion_layers = layers;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.d_ff = 12;
  return cfg;
}

void scale_all(ParameterStore& store, Real factor) {
  for (auto& [name, t] : store.tensors()) {
    Tensor handle = t;
    for (Real& v : handle.mutable_values()) v *= factor;
  }
}

TEST(ModalAdaptTest, IdenticalStreamsSplitAttentionEvenly) {
  std::mt19937_64 rng(1);
  ParameterStore store;
  auto cfg = small_fusion();
  add_fusion(store, cfg, rng);
  scale_all(store, 10);
  auto q = testing::random_tensor({3, 8}, rng, -1, 1, false);
  auto s = testing::random_tensor({4, 8}, rng, -1, 1, false);
  auto out = modal_adapt(store, cfg, stream_of(q), stream_of(s), stream_of(s));
  EXPECT_NEAR(out.modality_attention[0], 0.5, 1e-6);
  EXPECT_NEAR(out.modality_attention[1], 0.5, 1e-6);
}

TEST(ModalAdaptTest, SuppressedImageKeysSaturateTitle) {
  std::mt19937_64 rng(2);
  ParameterStore store;
  auto cfg = small_fusion();
  add_fusion(store, cfg, rng);
  auto q = testing::random_tensor({2, 8}, rng, -1, 1, false);
  auto t = testing::random_tensor({3, 8}, rng, -1, 1, false);
  auto i = testing::random_tensor({5, 8}, rng, -1, 1, false);
  FusionOptions opts;
  opts.suppress_image_keys = true;
  auto out = modal_adapt(store, cfg, stream_of(q), stream_of(t), stream_of(i), opts);
  EXPECT_EQ(out.modality_attention[0], 1.0);
  EXPECT_EQ(out.modality_attention[1], 0.0);
}

TEST(ModalAdaptTest, ModalityAttentionIsADistribution) {
  std::mt19937_64 rng(3);
  for (auto dir : {FusionDirection::kQueryReadsProduct, FusionDirection::kProductReadsQuery}) {
    ParameterStore store;
    auto cfg = small_fusion();
    cfg.direction = dir;
    add_fusion(store, cfg, rng);
    scale_all(store, 30);
    for (int trial = 0; trial < 20; ++trial) {
      auto q = testing::random_tensor({std::size_t(1 + trial % 3), 8}, rng, -2, 2, false);
      auto t = testing::random_tensor({std::size_t(1 + trial % 5), 8}, rng, -2, 2, false);
      auto i = testing::random_tensor({std::size_t(2 + trial % 4), 8}, rng, -2, 2, false);
      auto a = modal_adapt(store, cfg, stream_of(q), stream_of(t), stream_of(i))
                   .modality_attention;
      EXPECT_GE(a[0], 0.0);
      EXPECT_GE(a[1], 0.0);
      EXPECT_LE(a[0], 1.0);
      EXPECT_NEAR(a[0] + a[1], 1.0, 1e-6);
    }
  }
}

TEST(ModalAdaptTest, SingleLayerMatchesHandComputation) {
  std::mt19937_64 rng(4);
  ParameterStore store;
  FusionConfig cfg;
  cfg.n_fusion_layers = 1;
  cfg.d_model = 4;
  cfg.n_heads = 1;
  cfg.d_ff = 4;
  add_fusion(store, cfg, rng);
  scale_all(store, 25);
  auto q = Tensor::matrix(1, 4, {0.5, -1.0, 2.0, 0.0});
  auto t = Tensor::matrix(1, 4, {1.0, 0.0, -1.0, 0.5});
  auto i = Tensor::matrix(1, 4, {-0.3, 0.8, 0.1, 1.2});
  auto out = modal_adapt(store, cfg, stream_of(q), stream_of(t), stream_of(i));

  const std::string p = "fusion.layers.0";
  naive::Mat fused{to_mat(t)[0], to_mat(i)[0]};
  naive::Mat n = naive::layer_norm(store, p + ".self_ln", fused);
  fused = naive::add(fused, naive::attention(store, p + ".self_attn", n, n, 1));
  naive::Mat kv = naive::layer_norm(store, p + ".cross_ln_kv", fused);
  naive::Mat x = to_mat(q);
  naive::Mat probs;
  x = naive::add(x, naive::attention(store, p + ".cross_attn",
                                     naive::layer_norm(store, p + ".cross_ln_q", x), kv, 1,
                                     nullptr, &probs));
  x = naive::add(x, naive::feed_forward(store, p + ".ffn",
                                        naive::layer_norm(store, p + ".ffn_ln", x)));
  x = naive::layer_norm(store, "fusion.final_ln", x);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(out.joint_cls.at(j), x[0][j], 1e-10);
  EXPECT_NEAR(out.modality_attention[0], probs[0][0], 1e-12);
  EXPECT_NEAR(out.modality_attention[1], probs[0][1], 1e-12);
}

TEST(ModalAdaptTest, ReverseDirectionMatchesNaiveOracle) {
  std::mt19937_64 rng(5);
  ParameterStore store;
  auto cfg = small_fusion(1);
  cfg.direction = FusionDirection::kProductReadsQuery;
  add_fusion(store, cfg, rng);
  scale_all(store, 25);
  auto q = testing::random_tensor({2, 8}, rng, -1, 1, false);
  auto t = testing::random_tensor({3, 8}, rng, -1, 1, false);
  auto i = testing::random_tensor({2, 8}, rng, -1, 1, false);
  auto out = modal_adapt(store, cfg, stream_of(q), stream_of(t), stream_of(i));

  const std::string p = "fusion.layers.0";
  naive::Mat fused = to_mat(t);
  for (auto& row : to_mat(i)) fused.push_back(row);
  naive::Mat n = naive::layer_norm(store, p + ".self_ln", fused);
  fused = naive::add(fused, naive::attention(store, p + ".self_attn", n, n, 2));
  naive::Mat kv = naive::layer_norm(store, p + ".cross_ln_kv", to_mat(q));
  fused = naive::add(fused, naive::attention(store, p + ".cross_attn",
                                             naive::layer_norm(store, p + ".cross_ln_q", fused),
                                             kv, 2));
  fused = naive::add(fused, naive::feed_forward(store, p + ".ffn",
                                                naive::layer_norm(store, p + ".ffn_ln", fused)));
  fused = naive::layer_norm(store, "fusion.final_ln", fused);
  ASSERT_EQ(out.joint_hidden.rows(), 5u);
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(out.joint_hidden.at(r, j), fused[r][j], 1e-10);
}

TEST(ModalAdaptTest, InvariantToPaddingOfEveryStream) {
  std::mt19937_64 rng(6);
  ParameterStore store;
  EncoderConfig text;
  text.n_layers = 1;
  text.d_model = 8;
  text.n_heads = 2;
  text.d_ff = 12;
  text.max_len = 16;
  text.input_dim = 12;
  EncoderConfig image = text;
  image.input_dim = 3;
  image.max_len = 4;
  add_text_tower(store, TextTower::kQuery, text, rng);
  add_text_tower(store, TextTower::kTitle, text, rng);
  add_image_tower(store, image, rng);
  auto cfg = small_fusion();
  add_fusion(store, cfg, rng);

  const std::vector<std::string> texts{"red shirt", "blue cotton shirt"};
  Vocabulary vocab = Vocabulary::build(texts, false);
  auto run = [&](std::size_t qlen, std::size_t tlen) {
    auto qo = encode_text(store, TextTower::kQuery, text, tokenize(vocab, "red shirt", Segment::kQuery, qlen));
    auto to = encode_text(store, TextTower::kTitle, text,
                          tokenize(vocab, "blue cotton shirt", Segment::kTitle, tlen));
    auto io = encode_image(store, image, make_patch_sequence({0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, 2, 3));
    return modal_adapt(store, cfg, qo, to, io);
  };
  auto a = run(4, 6);
  auto b = run(16, 16);
  for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(a.joint_cls.at(j), b.joint_cls.at(j), 1e-6);
  EXPECT_NEAR(a.modality_attention[0], b.modality_attention[0], 1e-6);
}

TEST(ModalAdaptTest, WidthMismatchIsRejected) {
  std::mt19937_64 rng(7);
  ParameterStore store;
  auto cfg = small_fusion();
  add_fusion(store, cfg, rng);
  auto q = testing::random_tensor({2, 8}, rng, -1, 1, false);
  auto t = testing::random_tensor({2, 6}, rng, -1, 1, false);
  EXPECT_THROW(modal_adapt(store, cfg, stream_of(q), stream_of(t), stream_of(q)),
               DimensionError);
  cfg.n_fusion_layers = 0;
  EXPECT_THROW(cfg.validate(), ParameterError);
  EXPECT_THROW(parse_fusion_direction("sideways"), ParameterError);
}

TEST(ModalAdaptTest, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(8);
  ParameterStore store;
  auto cfg = small_fusion();
  add_fusion(store, cfg, rng);
  add_qpc_head(store, 8, rng);
  scale_all(store, 15);
  auto q = testing::random_tensor({2, 8}, rng);
  auto t = testing::random_tensor({3, 8}, rng);
  auto i = testing::random_tensor({2, 8}, rng);
  std::vector<std::pair<std::string, Tensor>> leaves{{"q", q}, {"t", t}, {"i", i}};
  for (auto& [name, tensor] : store.tensors()) leaves.emplace_back(name, tensor);
  auto r = testing::check_gradients(
      [&] {
        return ops::softplus(
            qpc_logit(store, modal_adapt(store, cfg, stream_of(q), stream_of(t), stream_of(i))
                                 .joint_cls));
      },
      leaves, 1e-5, 10, 3, 1e-5);
  EXPECT_LT(r.max_rel_err, 1e-4) << r.worst << " over " << r.checked;
}

TEST(QpcHeadTest, SigmoidExamples) {
  EXPECT_EQ(qpc_probability(0.0), 0.5);
  EXPECT_NEAR(qpc_probability(std::log(3.0)), 0.75, 1e-15);
  const Real tiny = qpc_probability(-1000.0);
  EXPECT_TRUE(std::isfinite(tiny));
  EXPECT_NEAR(tiny, 0.0, 1e-9);
  EXPECT_EQ(qpc_probability(1000.0), 1.0);
}

TEST(HardNegativeTest, WorkedExample) {
  auto sim = Tensor::matrix(3, 3, {0.9, 0.1, 0.2, 0.1, 0.8, 0.7, 0.3, 0.2, 0.6});
  auto pairs = select_hard_negatives(sim);
  ASSERT_EQ(pairs.size(), 3u);
  EXPECT_EQ(pairs[0].second, 2u);
  EXPECT_EQ(pairs[1].second, 2u);
  EXPECT_EQ(pairs[2].second, 0u);
}

TEST(HardNegativeTest, SingleItemAndTies) {
  EXPECT_TRUE(select_hard_negatives(Tensor::matrix(1, 1, {0.4})).empty());
  auto sim = Tensor::matrix(3, 3, {0.9, 0.5, 0.5, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0});
  EXPECT_EQ(select_hard_negatives(sim)[0].second, 1u);
}

TEST(HardNegativeTest, RowsWithoutNegativesAreSkipped) {
  auto sim = Tensor::matrix(2, 2, {0.9, 0.8, 0.7, 0.6});
  auto pairs = select_hard_negatives(sim, {1, 1, 0, 1});
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0], std::make_pair(std::size_t{1}, std::size_t{0}));
}

TEST(HardNegativeTest, NeverSelectsAPositiveExhaustive) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> level(0, 3);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + trial % 6;
    std::vector<Real> v(n * n);
    for (Real& x : v) x = level(rng) * 0.25;  // coarse values force ties
    std::vector<std::uint8_t> pos(n * n);
    for (auto& p : pos) p = coin(rng);
    auto pairs = select_hard_negatives(Tensor::matrix(n, n, v), pos);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = n;
      for (std::size_t j = 0; j < n; ++j)
        if (!pos[i * n + j] && (best == n || v[i * n + j] > v[i * n + best])) best = j;
      if (best == n) continue;
      ASSERT_LT(k, pairs.size());
      EXPECT_EQ(pairs[k].first, i);
      EXPECT_EQ(pairs[k].second, best);
      EXPECT_FALSE(pos[i * n + pairs[k].second]);
      ++k;
    }
    EXPECT_EQ(k, pairs.size());
  }
}

}  // namespace
}  // namespace tritower

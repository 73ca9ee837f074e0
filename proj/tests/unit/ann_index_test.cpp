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

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "support/clustered_corpus.hpp"
#include "tritower/ann_index/hc_index.hpp"
#include "tritower/numcore/errors.hpp"

namespace tritower {
namespace {

std::string bytes_of(const HCIndex& index) {
  std::ostringstream os;
  index.write(os);
  return os.str();
}

TEST(HCIndexTest, SingleProductIsOneLeaf) {
  const std::vector<ProductId> ids{42};
  const std::vector<Real> emb{0, 1, 0};
  auto index = HCIndex::build(ids, emb, 3);
  auto leaves = index.leaf_members();
  ASSERT_EQ(leaves.size(), 1u);
  EXPECT_EQ(leaves[0], std::vector<ProductId>{42});
  auto res = index.search(emb, {1, 1});
  ASSERT_EQ(res.hits.size(), 1u);
  EXPECT_EQ(res.hits[0].product_id, 42u);
}

TEST(HCIndexTest, WellSeparatedClustersBecomeLeaves) {
  auto corpus = testing::clustered_corpus(100, 4, 8, 0.01, 3);
  HCConfig cfg;
  cfg.branching = 4;
  cfg.depth = 1;
  cfg.seed = 11;
  auto index = HCIndex::build(corpus.ids, corpus.embeddings, 8, cfg);
  auto leaves = index.leaf_members();
  ASSERT_EQ(leaves.size(), 4u);
  std::map<ProductId, std::size_t> cluster_of;
  for (std::size_t i = 0; i < corpus.ids.size(); ++i) cluster_of[corpus.ids[i]] = corpus.cluster[i];
  std::set<std::size_t> seen_clusters;
  for (const auto& leaf : leaves) {
    ASSERT_EQ(leaf.size(), 25u);
    for (auto id : leaf) EXPECT_EQ(cluster_of[id], cluster_of[leaf[0]]);
    seen_clusters.insert(cluster_of[leaf[0]]);
  }
  EXPECT_EQ(seen_clusters.size(), 4u);
}

TEST(HCIndexTest, EveryProductInExactlyOneLeafAndCentroidsUnit) {
  auto corpus = testing::clustered_corpus(300, 7, 12, 0.3, 4);
  auto index = HCIndex::build(corpus.ids, corpus.embeddings, 12, {});
  std::multiset<ProductId> members;
  for (const auto& leaf : index.leaf_members()) members.insert(leaf.begin(), leaf.end());
  EXPECT_EQ(members, std::multiset<ProductId>(corpus.ids.begin(), corpus.ids.end()));
  for (const auto& node : index.nodes()) {
    if (node.centroid.empty()) continue;
    Real sq = 0;
    for (Real x : node.centroid) sq += x * x;
    EXPECT_NEAR(sq, 1.0, 1e-12);
  }
}

TEST(HCIndexTest, DeterministicBytesAndRoundTrip) {
  auto corpus = testing::clustered_corpus(200, 5, 8, 0.2, 5);
  HCConfig cfg;
  cfg.seed = 9;
  auto a = HCIndex::build(corpus.ids, corpus.embeddings, 8, cfg);
  auto b = HCIndex::build(corpus.ids, corpus.embeddings, 8, cfg);
  EXPECT_EQ(bytes_of(a), bytes_of(b));
  std::istringstream is(bytes_of(a));
  auto back = HCIndex::read(is);
  EXPECT_TRUE(back == a);
  EXPECT_EQ(bytes_of(back), bytes_of(a));
  std::istringstream bad("HCIY....");
  EXPECT_THROW(HCIndex::read(bad), FormatError);
  std::string truncated = bytes_of(a).substr(0, 100);
  std::istringstream cut(truncated);
  EXPECT_THROW(HCIndex::read(cut), FormatError);
}

TEST(HCIndexTest, FullProbeEqualsBruteForce) {
  auto corpus = testing::clustered_corpus(500, 12, 16, 0.3, 6);
  auto index = HCIndex::build(corpus.ids, corpus.embeddings, 16, {});
  auto queries = testing::clustered_queries(corpus, 100, 0.3, 7);
  for (const auto& q : queries) {
    auto res = index.search(q, {10, index.branching()});
    EXPECT_EQ(res.hits, brute_force(corpus.ids, corpus.embeddings, 16, q, 10));
    EXPECT_FALSE(res.short_result);
  }
}

TEST(HCIndexTest, SelfRetrieval) {
  auto corpus = testing::clustered_corpus(120, 6, 8, 0.2, 8);
  auto index = HCIndex::build(corpus.ids, corpus.embeddings, 8, {});
  for (std::size_t i = 0; i < corpus.ids.size(); i += 17) {
    std::span<const Real> u(corpus.embeddings.data() + i * 8, 8);
    auto res = index.search(u, {1, 1});
    ASSERT_EQ(res.hits.size(), 1u);
    EXPECT_EQ(res.hits[0].product_id, corpus.ids[i]);
    EXPECT_NEAR(res.hits[0].score, 1.0, 1e-12);
  }
}

TEST(HCIndexTest, RecallOnClusteredCorpusAndMonotoneInProbe) {
  auto corpus = testing::clustered_corpus(1000, 10, 32, 0.1, 42);
  HCConfig cfg;
  cfg.branching = 4;
  cfg.depth = 2;
  cfg.seed = 7;
  auto index = HCIndex::build(corpus.ids, corpus.embeddings, 32, cfg);
  auto queries = testing::clustered_queries(corpus, 200, 0.1, 9);
  std::vector<double> recall(cfg.branching + 1, 0.0);
  for (const auto& q : queries) {
    auto truth = brute_force(corpus.ids, corpus.embeddings, 32, q, 10);
    for (std::size_t p = 1; p <= cfg.branching; ++p) {
      auto res = index.search(q, {10, p});
      recall[p] += recall_against(res.hits, truth) / static_cast<double>(queries.size());
      for (const auto& h : res.hits) {
        auto t = std::find_if(truth.begin(), truth.end(),
                              [&](const Hit& x) { return x.product_id == h.product_id; });
        if (t != truth.end()) {
          EXPECT_EQ(t->score, h.score);
        }
      }
    }
  }
  EXPECT_GE(recall[2], 0.9);
  for (std::size_t p = 2; p <= cfg.branching; ++p) EXPECT_GE(recall[p], recall[p - 1]);
  EXPECT_NEAR(recall[cfg.branching], 1.0, 1e-12);
}

TEST(HCIndexTest, ShortResultAndErrors) {
  auto corpus = testing::clustered_corpus(40, 4, 8, 0.05, 10);
  HCConfig cfg;
  cfg.branching = 4;
  cfg.depth = 1;
  auto index = HCIndex::build(corpus.ids, corpus.embeddings, 8, cfg);
  std::span<const Real> u(corpus.embeddings.data(), 8);
  auto res = index.search(u, {30, 1});
  EXPECT_TRUE(res.short_result);
  EXPECT_EQ(res.hits.size(), 10u);
  std::vector<Real> off(u.begin(), u.end());
  off[0] += 0.1;
  EXPECT_THROW(index.search(off, {5, 1}), ContractError);
  EXPECT_THROW(index.search(u, {0, 1}), ParameterError);
  const std::vector<ProductId> dup{1, 1};
  const std::vector<Real> emb{1, 0, 0, 1};
  EXPECT_THROW(HCIndex::build(dup, emb, 2), ContractError);
  const std::vector<ProductId> none;
  EXPECT_THROW(HCIndex::build(none, {}, 2), DegenerateInputError);
}

TEST(BruteForceTest, ZeroQueryTiesByLowestId) {
  const std::vector<ProductId> ids{9, 3, 7, 5};
  const std::vector<Real> basis{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
  const std::vector<Real> zero(4, 0.0);
  auto hits = brute_force(ids, basis, 4, zero, 2);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].product_id, 3u);
  EXPECT_EQ(hits[1].product_id, 5u);
}

TEST(BruteForceTest, MatchesSortBasedReimplementation) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> coarse(-2, 2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + trial % 40, d = 3;
    std::vector<ProductId> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = (i * 7919) % 1009;
    std::vector<Real> emb(n * d);
    for (auto& x : emb) x = coarse(rng);  // coarse values force ties
    std::vector<Real> u{0.5, -0.25, 1.0};
    std::vector<std::pair<Real, ProductId>> all;
    for (std::size_t i = 0; i < n; ++i)
      all.emplace_back(-(emb[i * d] * u[0] + emb[i * d + 1] * u[1] + emb[i * d + 2] * u[2]), ids[i]);
    std::sort(all.begin(), all.end());
    auto hits = brute_force(ids, emb, d, u, 5);
    ASSERT_EQ(hits.size(), std::min<std::size_t>(5, n));
    for (std::size_t i = 0; i < hits.size(); ++i) {
      EXPECT_EQ(hits[i].product_id, all[i].second);
      EXPECT_EQ(hits[i].score, -all[i].first);
      if (i > 0) {
        EXPECT_LE(hits[i].score, hits[i - 1].score);
      }
    }
  }
}

}  // namespace
}  // namespace tritower

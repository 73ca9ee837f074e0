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
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "tritower/evalkit/metrics.hpp"
#include "tritower/numcore/errors.hpp"

namespace tritower {
namespace {

class ConstantOracle : public RelevanceOracle {
 public:
  explicit ConstantOracle(Real v) : v_(v) {}
  Real relevance(const std::string&, ProductId, const std::string&) const override { return v_; }
  std::string query_category(const std::string&) const override { return "a"; }
  bool has_category(const std::string&) const override { return true; }

 private:
  Real v_;
};

// Relevance 1 for even product ids.
class ParityOracle : public ConstantOracle {
 public:
  ParityOracle() : ConstantOracle(0) {}
  Real relevance(const std::string&, ProductId p, const std::string&) const override {
    return p % 2 == 0 ? 1 : 0;
  }
};

EvalRecord row(std::string q, std::vector<ProductId> r, std::vector<std::string> c,
               std::vector<ProductId> t = {}) {
  return {std::move(q), std::move(r), std::move(c), std::move(t)};
}

CategoryOracle shoes_and_hats() {
  return CategoryOracle({{"red shoe", "shoes"}, {"wool hat", "hats"}}, {"shoes", "hats"});
}

TEST(PRelTest, Examples) {
  std::vector<EvalRecord> recs{row("q", {1, 2, 3}, {"a", "a", "a"})};
  EXPECT_EQ(p_rel(recs, ConstantOracle(1)).value, 1.0);
  EXPECT_EQ(p_rel(recs, ConstantOracle(0)).value, 0.0);
  // Per-row means 0.8 (4 of 5 even) and 0.6 (3 of 5 even).
  std::vector<EvalRecord> two{row("x", {2, 4, 6, 8, 1}, std::vector<std::string>(5, "a")),
                              row("y", {2, 4, 6, 1, 3}, std::vector<std::string>(5, "a"))};
  EXPECT_NEAR(p_rel(two, ParityOracle()).value, 0.7, 1e-15);
}

TEST(PRelTest, EmptyRetrievalRowsAreExcluded) {
  std::vector<EvalRecord> recs{row("x", {2}, {"a"}), row("y", {}, {})};
  auto m = p_rel(recs, ParityOracle());
  EXPECT_EQ(m.value, 1.0);
  EXPECT_EQ(m.rows, 1u);
  EXPECT_EQ(m.excluded, 1u);
}

TEST(PCateTest, Examples) {
  auto oracle = shoes_and_hats();
  std::vector<EvalRecord> all{row("red shoe", {1, 2}, {"shoes", "shoes"})};
  EXPECT_EQ(p_cate(all, oracle).value, 1.0);
  std::vector<EvalRecord> three{row("wool hat", {1, 2, 3, 4}, {"hats", "shoes", "hats", "hats"})};
  EXPECT_EQ(p_cate(three, oracle).value, 0.75);
}

TEST(PCateTest, UnknownCategoryIsNamed) {
  auto oracle = shoes_and_hats();
  std::vector<EvalRecord> recs{row("red shoe", {1}, {"cat_17"})};
  try {
    p_cate(recs, oracle);
    FAIL() << "expected a taxonomy error";
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("cat_17"), std::string::npos);
  }
}

TEST(RecallTest, Examples) {
  std::vector<EvalRecord> first{row("a", {1, 2}, {"", ""}, {1}), row("b", {3, 4}, {"", ""}, {3})};
  EXPECT_EQ(recall_at_k(first, 1).value, 1.0);
  std::vector<EvalRecord> quarter{row("a", {1, 2}, {"", ""}, {2}), row("b", {3}, {""}, {9}),
                                  row("c", {5}, {""}, {6}), row("d", {7}, {""}, {8})};
  EXPECT_EQ(recall_at_k(quarter, 2).value, 0.25);
  EXPECT_EQ(recall_at_k(quarter, 1).value, 0.0);
  EXPECT_EQ(recall_at_k(quarter, 0).value, 0.0);
}

TEST(RecallTest, EmptyTargetsExcluded) {
  std::vector<EvalRecord> recs{row("a", {1}, {""}, {1}), row("b", {2}, {""}, {})};
  auto m = recall_at_k(recs, 5);
  EXPECT_EQ(m.value, 1.0);
  EXPECT_EQ(m.excluded, 1u);
}

TEST(MetricPropertiesTest, RangeOrderInvarianceAndMonotoneK) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> pid(0, 30), cat(0, 3), len(0, 8);
  std::vector<std::string> cats{"c0", "c1", "c2", "c3"};
  std::unordered_map<std::string, std::string> qcat;
  std::vector<EvalRecord> recs;
  for (int i = 0; i < 40; ++i) {
    EvalRecord r;
    r.query = "q" + std::to_string(i);
    qcat[r.query] = cats[static_cast<std::size_t>(cat(rng))];
    for (int j = len(rng); j > 0; --j) {
      r.retrieved.push_back(static_cast<ProductId>(pid(rng)));
      r.retrieved_categories.push_back(cats[static_cast<std::size_t>(cat(rng))]);
    }
    for (int j = len(rng) / 3; j > 0; --j) r.targets.push_back(static_cast<ProductId>(pid(rng)));
    recs.push_back(r);
  }
  CategoryOracle oracle(qcat, {cats.begin(), cats.end()});
  const Real pr = p_rel(recs, oracle).value;
  const Real pc = p_cate(recs, oracle).value;
  EXPECT_GE(pr, 0.0);
  EXPECT_LE(pr, 1.0);
  // Relevance is exactly category match here.
  EXPECT_EQ(pr, pc);
  Real prev = 0;
  for (std::size_t k = 0; k <= 10; ++k) {
    const Real r = recall_at_k(recs, k).value;
    EXPECT_GE(r, prev);
    EXPECT_LE(r, 1.0);
    prev = r;
  }
  auto shuffled = recs;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  EXPECT_NEAR(p_rel(shuffled, oracle).value, pr, 1e-15);
  EXPECT_NEAR(p_cate(shuffled, oracle).value, pc, 1e-15);
  EXPECT_EQ(recall_at_k(shuffled, 5).value, recall_at_k(recs, 5).value);
}

TEST(ReportTest, JsonAndCsv) {
  auto oracle = shoes_and_hats();
  std::vector<EvalRecord> recs{row("red shoe", {1, 2}, {"shoes", "hats"}, {2}),
                               row("wool hat", {3}, {"hats"}, {})};
  const std::vector<std::size_t> ks{1, 10};
  auto report = evaluate(recs, oracle, ks);
  auto j = nlohmann::json::parse(report_json(report));
  EXPECT_DOUBLE_EQ(j["p_rel"].get<double>(), 0.75);
  EXPECT_DOUBLE_EQ(j["p_cate"].get<double>(), 0.75);
  EXPECT_DOUBLE_EQ(j["recall_at_k"]["1"].get<double>(), 0.0);
  EXPECT_DOUBLE_EQ(j["recall_at_k"]["10"].get<double>(), 1.0);
  EXPECT_EQ(j["rows"].get<int>(), 2);
  EXPECT_EQ(j["excluded_rows"].get<int>(), 1);

  auto path = std::filesystem::temp_directory_path() / "tritower_eval_rows.csv";
  write_row_diagnostics(path, recs, oracle, ks);
  std::ifstream is(path);
  std::string header, first;
  std::getline(is, header);
  std::getline(is, first);
  EXPECT_EQ(header, "query,query_category,n_retrieved,n_targets,p_rel,p_cate,hit@1,hit@10");
  EXPECT_EQ(first, "red shoe,shoes,2,1,0.5,0.5,0,1");
  std::filesystem::remove(path);
  EXPECT_EQ(csv_field("a,\"b\""), "\"a,\"\"b\"\"\"");
}

}  // namespace
}  // namespace tritower

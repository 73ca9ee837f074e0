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
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "support/gradcheck.hpp"
#include "tritower/numcore/embedding.hpp"
#include "tritower/numcore/errors.hpp"
#include "tritower/numcore/ops.hpp"
#include "tritower/numcore/params.hpp"

namespace tritower {
namespace {

using testing::check_gradients;
using testing::random_tensor;

void expect_values(const Tensor& t, std::vector<Real> expected, Real tol) {
  ASSERT_EQ(t.numel(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_NEAR(t.values()[i], expected[i], tol) << "index " << i;
  }
}

TEST(MatmulTest, IdentityAndDot) {
  auto eye = Tensor::matrix({{1, 0}, {0, 1}});
  auto b = Tensor::matrix({{5, 6}, {7, 8}});
  expect_values(ops::matmul(eye, b), {5, 6, 7, 8}, 0);
  auto row = Tensor::matrix({{1, 2}});
  auto col = Tensor::matrix({{3}, {4}});
  expect_values(ops::matmul(row, col), {11}, 0);
}

TEST(MatmulTest, ShapeMismatchNamesBothShapes) {
  auto a = Tensor::zeros({2, 3});
  auto b = Tensor::zeros({2, 3});
  try {
    ops::matmul(a, b);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3] x [2x3]"), std::string::npos) << msg;
  }
}

TEST(MatmulTest, GradientOfSumIsOnesTimesBTransposed) {
  std::mt19937_64 rng(11);
  auto a = random_tensor({4, 3}, rng);
  auto b = random_tensor({3, 2}, rng, -1, 1, false);
  ops::sum(ops::matmul(a, b)).backward();
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t p = 0; p < 3; ++p) {
      EXPECT_NEAR(a.grad()[i * 3 + p], b.at(p, 0) + b.at(p, 1), 1e-12);
    }
  }
  auto r = check_gradients([&] { return ops::sum(ops::matmul(a, b)); }, {{"a", a}});
  EXPECT_LT(r.max_rel_err, 1e-4) << r.worst;
}

TEST(SoftmaxTest, Examples) {
  expect_values(ops::softmax(Tensor::vector({0, 0}), 1), {0.5, 0.5}, 1e-15);
  expect_values(ops::softmax(Tensor::vector({std::log(2.0), 0}), 1),
                {2.0 / 3.0, 1.0 / 3.0}, 1e-15);
  auto sat = ops::softmax(Tensor::vector({1000, 0}), 1);
  EXPECT_NEAR(sat.at(0), 1.0, 1e-9);
  EXPECT_NEAR(sat.at(1), 0.0, 1e-9);
  EXPECT_TRUE(std::isfinite(sat.at(1)));
}

TEST(SoftmaxTest, RejectsNonPositiveTemperature) {
  EXPECT_THROW(ops::softmax(Tensor::vector({1, 2}), 0), ParameterError);
  EXPECT_THROW(ops::softmax(Tensor::vector({1, 2}), -1), ParameterError);
}

TEST(SoftmaxTest, RowsSumToOne) {
  std::mt19937_64 rng(3);
  auto x = random_tensor({5, 7}, rng, -20, 20, false);
  auto y = ops::softmax(x, 0.3);
  for (std::size_t r = 0; r < 5; ++r) {
    Real total = 0;
    for (std::size_t j = 0; j < 7; ++j) {
      EXPECT_GE(y.at(r, j), 0);
      total += y.at(r, j);
    }
    EXPECT_NEAR(total, 1.0, 1e-6);
  }
}

TEST(LayerNormTest, Examples) {
  auto ones = Tensor::vector({1, 1, 1});
  auto zeros = Tensor::vector({0, 0, 0});
  expect_values(ops::layer_norm(Tensor::vector({2, 2, 2}), ones, zeros, 1e-5),
                {0, 0, 0}, 0);
  expect_values(ops::layer_norm(Tensor::vector({1, 3}), Tensor::vector({1, 1}),
                                Tensor::vector({0, 0}), 0),
                {-1, 1}, 1e-15);
  EXPECT_THROW(ops::layer_norm(Tensor::vector({2, 2}), Tensor::vector({1, 1}),
                               Tensor::vector({0, 0}), 0),
               DegenerateInputError);
}

TEST(L2NormalizeTest, Examples) {
  expect_values(ops::l2_normalize(Tensor::vector({3, 4})), {0.6, 0.8}, 1e-15);
  auto unit = Tensor::vector({0, 1, 0});
  expect_values(ops::l2_normalize(unit), {0, 1, 0}, 0);
  std::mt19937_64 rng(5);
  auto v = to_embedding(random_tensor({64}, rng, -1, 1, false));
  EXPECT_NEAR(v.norm(), 1.0, 1e-6);
  EXPECT_THROW(ops::l2_normalize(Tensor::vector({0, 0})), DegenerateInputError);
  EXPECT_THROW(to_embedding(Tensor::vector({0, 0})), DegenerateInputError);
}

TEST(BroadcastTest, TrailingAxisOnly) {
  auto m = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  expect_values(ops::add(m, Tensor::vector({10, 20, 30})),
                {11, 22, 33, 14, 25, 36}, 0);
  expect_values(ops::mul(m, Tensor::scalar(2)), {2, 4, 6, 8, 10, 12}, 0);
  EXPECT_THROW(ops::add(m, Tensor::vector({1, 2})), DimensionError);
  EXPECT_THROW(ops::add(m, Tensor::zeros({2, 1})), DimensionError);
}

// Every differentiable op against central differences, 100 seeded trials on
// inputs of dimension <= 16. The loss contracts with random weights so that
// no gradient direction is trivially symmetric.
class OpGradientTest : public ::testing::TestWithParam<std::string> {};

Tensor weighted(const Tensor& y, const Tensor& w) { return ops::sum(ops::mul(y, w)); }

TEST_P(OpGradientTest, MatchesFiniteDifferences) {
  const std::string op = GetParam();
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    std::mt19937_64 rng(1000 + trial);
    std::uniform_int_distribution<std::size_t> dim(1, 16);
    const std::size_t r = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
    const std::size_t c = std::max<std::size_t>(2, dim(rng));
    auto x = random_tensor({r, c}, rng);
    auto y = random_tensor({r, c}, rng);
    auto w = random_tensor({r, c}, rng, -1, 1, false);
    std::function<Tensor()> f;
    std::vector<std::pair<std::string, Tensor>> leaves{{"x", x}};
    if (op == "add") {
      auto b = random_tensor({c}, rng);
      leaves.emplace_back("b", b);
      f = [=] { return weighted(ops::add(x, b), w); };
    } else if (op == "sub") {
      leaves.emplace_back("y", y);
      f = [=] { return weighted(ops::sub(x, y), w); };
    } else if (op == "mul") {
      leaves.emplace_back("y", y);
      f = [=] { return weighted(ops::mul(x, y), w); };
    } else if (op == "matmul") {
      auto b = random_tensor({c, 3}, rng);
      auto w2 = random_tensor({r, 3}, rng, -1, 1, false);
      leaves.emplace_back("b", b);
      f = [=] { return weighted(ops::matmul(x, b), w2); };
    } else if (op == "matmul_nt") {
      auto b = random_tensor({3, c}, rng);
      auto w2 = random_tensor({r, 3}, rng, -1, 1, false);
      leaves.emplace_back("b", b);
      f = [=] { return weighted(ops::matmul_nt(x, b), w2); };
    } else if (op == "transpose") {
      auto wt = random_tensor({c, r}, rng, -1, 1, false);
      f = [=] { return weighted(ops::transpose(x), wt); };
    } else if (op == "softmax") {
      f = [=] { return weighted(ops::softmax(x, 0.7), w); };
    } else if (op == "layer_norm") {
      auto g = random_tensor({c}, rng);
      auto b = random_tensor({c}, rng);
      leaves.emplace_back("gain", g);
      leaves.emplace_back("bias", b);
      f = [=] { return weighted(ops::layer_norm(x, g, b, 1e-5), w); };
    } else if (op == "gelu") {
      f = [=] { return weighted(ops::gelu(x), w); };
    } else if (op == "exp") {
      f = [=] { return weighted(ops::exp(x), w); };
    } else if (op == "log") {
      auto pos = random_tensor({r, c}, rng, 0.5, 2.0);
      leaves = {{"x", pos}};
      f = [=] { return weighted(ops::log(pos), w); };
    } else if (op == "sigmoid") {
      f = [=] { return weighted(ops::sigmoid(x), w); };
    } else if (op == "softplus") {
      f = [=] { return weighted(ops::softplus(x), w); };
    } else if (op == "logsumexp") {
      f = [=] { return ops::logsumexp(ops::scale(x, 3.0)); };
    } else if (op == "l2_normalize") {
      f = [=] { return weighted(ops::l2_normalize(x), w); };
    } else if (op == "gather_rows") {
      std::vector<std::size_t> ids{0, r - 1, 0};
      auto w3 = random_tensor({3, c}, rng, -1, 1, false);
      f = [=] { return weighted(ops::gather_rows(x, ids), w3); };
    } else if (op == "slice_concat") {
      f = [=] {
        Tensor parts[] = {ops::slice_cols(x, c / 2, c), ops::slice_cols(x, 0, c / 2)};
        Tensor rowparts[] = {ops::concat_cols(parts), ops::slice_rows(x, 0, 1)};
        auto cat = ops::concat_rows(rowparts);
        auto wc = Tensor::full(cat.shape(), 0.5);
        return ops::sum(ops::mul(ops::mul(cat, cat), wc));
      };
    } else if (op == "cross_entropy") {
      std::vector<std::int64_t> targets(r);
      for (std::size_t i = 0; i < r; ++i) targets[i] = static_cast<std::int64_t>(i % c);
      if (r > 1) targets[0] = ops::kIgnoreLabel;
      f = [=] { return ops::cross_entropy(x, targets); };
    }
    auto res = check_gradients(f, leaves, 1e-4, std::numeric_limits<std::size_t>::max(),
                               trial, 1e-6);
    ASSERT_LT(res.max_rel_err, 1e-4) << op << " trial " << trial << ": " << res.worst;
  }
}

INSTANTIATE_TEST_SUITE_P(
    AllOps, OpGradientTest,
    ::testing::Values("add", "sub", "mul", "matmul", "matmul_nt", "transpose",
                      "softmax", "layer_norm", "gelu", "exp", "log", "sigmoid",
                      "softplus", "logsumexp", "l2_normalize", "gather_rows",
                      "slice_concat", "cross_entropy"));

TEST(AutodiffTest, SecondBackwardOnSameGraphIsRejected) {
  auto x = Tensor::vector({1, 2, 3}, true);
  auto loss = ops::sum(ops::mul(x, x));
  loss.backward();
  EXPECT_THROW(loss.backward(), ContractError);
}

TEST(AutodiffTest, LeafGradientsAccumulateAcrossGraphs) {
  auto x = Tensor::vector({1, 2}, true);
  ops::sum(ops::scale(x, 3)).backward();
  ops::sum(ops::scale(x, 3)).backward();
  EXPECT_EQ(x.grad()[0], 6);
  x.zero_grad();
  EXPECT_EQ(x.grad()[1], 0);
}

TEST(AutodiffTest, SharedSubexpressionVisitedOnce) {
  auto x = Tensor::scalar(3, true);
  auto y = ops::mul(x, x);          // 9
  auto z = ops::add(y, y);          // 2x^2
  z.backward();
  EXPECT_DOUBLE_EQ(x.grad()[0], 12.0);
}

TEST(AutodiffTest, DeterministicForFixedSeed) {
  auto run = [] {
    std::mt19937_64 rng(42);
    auto a = random_tensor({6, 16}, rng);
    auto b = random_tensor({16, 5}, rng);
    auto loss = ops::logsumexp(ops::matmul(ops::gelu(a), b));
    loss.backward();
    return std::make_pair(loss.item(), a.grad()[7]);
  };
  EXPECT_EQ(run(), run());
}

TEST(CheckpointBundleTest, ByteExactRoundTrip) {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "tritower_bundle_test";
  fs::create_directories(dir);
  std::mt19937_64 rng(9);
  ParameterStore store;
  store.add_normal("title.w", {3, 4}, rng);
  store.add_constant("heads.b", {4}, 0.25);
  store.add_normal("query.emb", {5, 2}, rng);
  save_parameters(dir / "a", store);

  ParameterStore other;
  other.add_constant("title.w", {3, 4}, 0);
  other.add_constant("heads.b", {4}, 0);
  other.add_constant("query.emb", {5, 2}, 0);
  load_parameters(dir / "a", other);
  save_parameters(dir / "b", other);

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  EXPECT_EQ(slurp(dir / "a.bin"), slurp(dir / "b.bin"));
  EXPECT_EQ(slurp(dir / "a.json"), slurp(dir / "b.json"));
  EXPECT_EQ(other.get("title.w").to_vector(), store.get("title.w").to_vector());

  ParameterStore wrong;
  wrong.add_constant("title.w", {4, 3}, 0);
  wrong.add_constant("heads.b", {4}, 0);
  wrong.add_constant("query.emb", {5, 2}, 0);
  EXPECT_THROW(load_parameters(dir / "a", wrong), DimensionError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace tritower

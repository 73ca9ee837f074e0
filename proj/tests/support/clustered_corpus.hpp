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

#ifndef TRITOWER_TESTS_SUPPORT_CLUSTERED_CORPUS_HPP_
#define TRITOWER_TESTS_SUPPORT_CLUSTERED_CORPUS_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "tritower/numcore/ids.hpp"

namespace tritower::testing {

struct UnitCorpus {
  std::size_t dim = 0;
  std::vector<ProductId> ids;
  std::vector<double> embeddings;  // row-major
  std::vector<std::size_t> cluster;
};

inline void normalize_in_place(std::vector<double>& v) {
  double sq = 0;
  for (double x : v) sq += x * x;
  for (double& x : v) x /= std::sqrt(sq);
}

// Unit vectors drawn around n_clusters random unit centers; spread is the
// per-coordinate Gaussian noise before renormalization. Ids are shuffled
// so cluster membership is not visible in id order.
inline UnitCorpus clustered_corpus(std::size_t n, std::size_t n_clusters, std::size_t dim,
                                   double spread, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> centers(n_clusters, std::vector<double>(dim));
  for (auto& c : centers) {
    for (double& x : c) x = g(rng);
    normalize_in_place(c);
  }
  UnitCorpus corpus;
  corpus.dim = dim;
  std::vector<ProductId> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = 1000 + i;
  std::shuffle(ids.begin(), ids.end(), rng);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % n_clusters;
    std::vector<double> v = centers[c];
    for (double& x : v) x += spread * g(rng);
    normalize_in_place(v);
    corpus.ids.push_back(ids[i]);
    corpus.cluster.push_back(c);
    corpus.embeddings.insert(corpus.embeddings.end(), v.begin(), v.end());
  }
  return corpus;
}

// Queries drawn from the same mixture.
inline std::vector<std::vector<double>> clustered_queries(const UnitCorpus& corpus,
                                                          std::size_t n, double spread,
                                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<std::size_t> pick(0, corpus.ids.size() - 1);
  std::vector<std::vector<double>> out;
  for (std::size_t q = 0; q < n; ++q) {
    const std::size_t i = pick(rng);
    std::vector<double> v(corpus.embeddings.begin() + static_cast<std::ptrdiff_t>(i * corpus.dim),
                          corpus.embeddings.begin() +
                              static_cast<std::ptrdiff_t>((i + 1) * corpus.dim));
    for (double& x : v) x += spread * g(rng);
    normalize_in_place(v);
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace tritower::testing

#endif  // TRITOWER_TESTS_SUPPORT_CLUSTERED_CORPUS_HPP_

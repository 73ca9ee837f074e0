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

// Plain-loop reference implementations of the training losses. They share no
// code with the library and work on std::vector only.

#ifndef TRITOWER_TESTS_SUPPORT_NAIVE_LOSSES_HPP_
#define TRITOWER_TESTS_SUPPORT_NAIVE_LOSSES_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace tritower::naive {

using Rows = std::vector<std::vector<double>>;

inline double dotp(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline Rows random_unit_rows(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Rows r(n, std::vector<double>(d));
  for (auto& row : r) {
    double sq = 0;
    for (double& x : row) {
      x = g(rng);
      sq += x * x;
    }
    for (double& x : row) x /= std::sqrt(sq);
  }
  return r;
}

// Row i of U is positive for row i of V; every other row is a negative.
inline double qpm(const Rows& U, const Rows& V, double tau) {
  double total = 0;
  for (std::size_t i = 0; i < U.size(); ++i) {
    double denom = 0;
    for (std::size_t j = 0; j < V.size(); ++j) denom += std::exp(dotp(U[i], V[j]) / tau);
    total -= std::log(std::exp(dotp(U[i], V[i]) / tau) / denom);
  }
  return total / static_cast<double>(U.size());
}

inline double ke(const std::vector<double>& s_pos, const std::vector<double>& s_neg,
                 double gamma, double theta, bool literal) {
  double neg = 0;
  for (double s : s_neg)
    neg += literal ? std::exp(gamma * std::exp(s + theta)) : std::exp(gamma * (s + theta));
  double pos = 0;
  for (double s : s_pos) pos += std::exp(-gamma * s);
  return std::log(1 + neg * pos);
}

inline double qpc(const std::vector<double>& p_pos, const std::vector<double>& p_neg) {
  double total = 0;
  for (double p : p_pos) total -= std::log(p);
  for (double p : p_neg) total -= std::log(1 - p);
  return total / static_cast<double>(p_pos.size() + p_neg.size());
}

// logits is rows x classes; label -1 skips a row.
inline double mlm(const Rows& logits, const std::vector<std::int64_t>& labels) {
  double total = 0;
  int count = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (labels[i] < 0) continue;
    double z = 0;
    for (double x : logits[i]) z += std::exp(x);
    total += std::log(z) - logits[i][static_cast<std::size_t>(labels[i])];
    ++count;
  }
  return count ? total / count : 0.0;
}

inline double mpm(const Rows& predicted, const Rows& original, const std::vector<bool>& masked) {
  double total = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (!masked[i]) continue;
    for (std::size_t j = 0; j < predicted[i].size(); ++j) {
      const double d = predicted[i][j] - original[i][j];
      total += d * d;
      ++count;
    }
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

}  // namespace tritower::naive

#endif  // TRITOWER_TESTS_SUPPORT_NAIVE_LOSSES_HPP_

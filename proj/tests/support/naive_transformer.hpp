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

// Plain-loop reference implementation of the transformer pieces. Reads the
// same named parameters but shares no code with the autodiff path.

#ifndef TRITOWER_TESTS_SUPPORT_NAIVE_TRANSFORMER_HPP_
#define TRITOWER_TESTS_SUPPORT_NAIVE_TRANSFORMER_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tritower/numcore/params.hpp"

namespace tritower::testing::naive {

using Mat = std::vector<std::vector<double>>;

inline Mat param(const ParameterStore& store, const std::string& name) {
  const Tensor& t = store.get(name);
  const std::size_t cols = t.shape().back();
  const std::size_t rows = t.numel() / cols;
  Mat m(rows, std::vector<double>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m[i][j] = t.values()[i * cols + j];
  return m;
}

inline std::vector<double> vec(const ParameterStore& store, const std::string& name) {
  auto v = store.get(name).values();
  return {v.begin(), v.end()};
}

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat c(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b[0].size(); ++j)
      for (std::size_t p = 0; p < b.size(); ++p) c[i][j] += a[i][p] * b[p][j];
  return c;
}

inline Mat add(const Mat& a, const Mat& b) {
  Mat c = a;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) c[i][j] += b[i][j];
  return c;
}

inline Mat linear(const ParameterStore& store, const std::string& prefix, const Mat& x) {
  Mat y = matmul(x, param(store, prefix + ".w"));
  auto b = vec(store, prefix + ".b");
  for (auto& row : y)
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += b[j];
  return y;
}

inline Mat layer_norm(const ParameterStore& store, const std::string& prefix,
                      const Mat& x, double eps = 1e-5) {
  auto g = vec(store, prefix + ".gain");
  auto b = vec(store, prefix + ".bias");
  Mat y = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double n = static_cast<double>(x[i].size());
    double mu = 0;
    for (double v : x[i]) mu += v;
    mu /= n;
    double var = 0;
    for (double v : x[i]) var += (v - mu) * (v - mu);
    var /= n;
    for (std::size_t j = 0; j < x[i].size(); ++j)
      y[i][j] = g[j] * (x[i][j] - mu) / std::sqrt(var + eps) + b[j];
  }
  return y;
}

inline double gelu(double v) { return 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))); }

// Returns the attention output; probs_out (if given) receives the per-head
// probabilities summed over heads.
inline Mat attention(const ParameterStore& store, const std::string& prefix,
                     const Mat& queries, const Mat& memory, std::size_t heads,
                     const std::vector<std::uint8_t>* keep = nullptr,
                     Mat* probs_out = nullptr) {
  Mat q = linear(store, prefix + ".q", queries);
  Mat k = linear(store, prefix + ".k", memory);
  Mat v = linear(store, prefix + ".v", memory);
  const std::size_t d = q[0].size(), dh = d / heads;
  Mat merged(q.size(), std::vector<double>(d, 0.0));
  if (probs_out) *probs_out = Mat(q.size(), std::vector<double>(k.size(), 0.0));
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < q.size(); ++i) {
      std::vector<double> w(k.size());
      double mx = -1e300;
      for (std::size_t j = 0; j < k.size(); ++j) {
        double s = 0;
        for (std::size_t p = 0; p < dh; ++p) s += q[i][h * dh + p] * k[j][h * dh + p];
        s /= std::sqrt(static_cast<double>(dh));
        if (keep && !(*keep)[j]) s = -1e30;
        w[j] = s;
        mx = std::max(mx, s);
      }
      double z = 0;
      for (double& x : w) {
        x = std::exp(x - mx);
        z += x;
      }
      for (std::size_t j = 0; j < k.size(); ++j) {
        w[j] /= z;
        if (probs_out) (*probs_out)[i][j] += w[j];
        for (std::size_t p = 0; p < dh; ++p) merged[i][h * dh + p] += w[j] * v[j][h * dh + p];
      }
    }
  }
  return linear(store, prefix + ".o", merged);
}

inline Mat feed_forward(const ParameterStore& store, const std::string& prefix,
                        const Mat& x) {
  Mat h = linear(store, prefix + ".in", x);
  for (auto& row : h)
    for (double& v : row) v = gelu(v);
  return linear(store, prefix + ".out", h);
}

inline Mat block(const ParameterStore& store, const std::string& prefix, const Mat& x,
                 std::size_t heads) {
  Mat n1 = layer_norm(store, prefix + ".ln1", x);
  Mat h = add(x, attention(store, prefix + ".attn", n1, n1, heads));
  return add(h, feed_forward(store, prefix + ".ffn", layer_norm(store, prefix + ".ln2", h)));
}

}  // namespace tritower::testing::naive

#endif  // TRITOWER_TESTS_SUPPORT_NAIVE_TRANSFORMER_HPP_

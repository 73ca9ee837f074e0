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

#include "tritower/numcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include "tritower/numcore/errors.hpp"

namespace tritower::ops {
namespace {

using detail::Node;

constexpr Real kInvSqrt2 = 0.70710678118654752440;

Tensor make_result(Shape shape, std::vector<Real> value,
                   std::initializer_list<Tensor> parents,
                   std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool needs_grad = false;
  for (const Tensor& p : parents) needs_grad = needs_grad || p.requires_grad();
  if (needs_grad) {
    node->requires_grad = true;
    node->leaf = false;
    for (const Tensor& p : parents) node->parents.push_back(p.node());
    node->backward = std::move(backward);
  }
  return Tensor::from_node(std::move(node));
}

Tensor make_result_n(Shape shape, std::vector<Real> value,
                     std::span<const Tensor> parents,
                     std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool needs_grad = false;
  for (const Tensor& p : parents) needs_grad = needs_grad || p.requires_grad();
  if (needs_grad) {
    node->requires_grad = true;
    node->leaf = false;
    for (const Tensor& p : parents) node->parents.push_back(p.node());
    node->backward = std::move(backward);
  }
  return Tensor::from_node(std::move(node));
}

// Gradient buffer of parent i, or nullptr when it does not take gradients.
std::vector<Real>* grad_of(Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  return p.requires_grad ? &p.ensure_grad() : nullptr;
}

const std::vector<Real>& value_of(const Node& self, std::size_t i) {
  return self.parents[i]->value;
}

bool is_suffix(const Shape& small, const Shape& big) {
  if (shape_numel(small) == 1) return true;
  if (small.size() > big.size()) return false;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + " expects a matrix, got " +
                         shape_string(t.shape()));
  }
}

std::size_t last_dim(const Tensor& x, const char* op) {
  if (x.rank() == 0 || x.shape().back() == 0) {
    throw DimensionError(std::string(op) + " needs a non-empty last axis, got " +
                         shape_string(x.shape()));
  }
  return x.shape().back();
}

template <class F, class DA, class DB>
Tensor binary(const Tensor& a, const Tensor& b, const char* name, F f, DA da,
              DB db) {
  Shape out_shape;
  if (a.shape() == b.shape() || is_suffix(b.shape(), a.shape())) {
    out_shape = a.shape();
  } else if (is_suffix(a.shape(), b.shape())) {
    out_shape = b.shape();
  } else {
    throw DimensionError(std::string(name) + ": cannot broadcast " +
                         shape_string(a.shape()) + " with " +
                         shape_string(b.shape()));
  }
  const std::size_t n = shape_numel(out_shape);
  const std::size_t na = a.numel();
  const std::size_t nb = b.numel();
  auto av = a.values();
  auto bv = b.values();
  std::vector<Real> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(av[i % na], bv[i % nb]);
  return make_result(
      std::move(out_shape), std::move(out), {a, b},
      [n, na, nb, da, db](Node& self) {
        const auto& x = value_of(self, 0);
        const auto& y = value_of(self, 1);
        auto* gx = grad_of(self, 0);
        auto* gy = grad_of(self, 1);
        for (std::size_t i = 0; i < n; ++i) {
          const Real g = self.grad[i];
          const Real xi = x[i % na];
          const Real yi = y[i % nb];
          if (gx) (*gx)[i % na] += g * da(xi, yi);
          if (gy) (*gy)[i % nb] += g * db(xi, yi);
        }
      });
}

template <class F, class D>
Tensor unary(const Tensor& x, F f, D d) {
  auto xv = x.values();
  std::vector<Real> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  return make_result(x.shape(), std::move(out), {x}, [d](Node& self) {
    auto* gx = grad_of(self, 0);
    if (!gx) return;
    const auto& xs = value_of(self, 0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      (*gx)[i] += self.grad[i] * d(xs[i], self.value[i]);
    }
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "add", [](Real x, Real y) { return x + y; },
      [](Real, Real) { return Real{1}; }, [](Real, Real) { return Real{1}; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "sub", [](Real x, Real y) { return x - y; },
      [](Real, Real) { return Real{1}; }, [](Real, Real) { return Real{-1}; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "mul", [](Real x, Real y) { return x * y; },
      [](Real, Real y) { return y; }, [](Real x, Real) { return x; });
}

Tensor scale(const Tensor& x, Real factor) {
  return unary(
      x, [factor](Real v) { return v * factor; },
      [factor](Real, Real) { return factor; });
}

Tensor shift(const Tensor& x, Real offset) {
  return unary(
      x, [offset](Real v) { return v + offset; },
      [](Real, Real) { return Real{1}; });
}

Tensor neg(const Tensor& x) { return scale(x, Real{-1}); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: inner dimensions differ for " +
                         shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  auto av = a.values();
  auto bv = b.values();
  std::vector<Real> out(m * n, Real{0});
  for (std::size_t i = 0; i < m; ++i) {
    Real* crow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const Real aip = av[i * k + p];
      const Real* brow = bv.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
  return make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    const auto& A = value_of(self, 0);
    const auto& B = value_of(self, 1);
    const auto& G = self.grad;
    if (auto* gA = grad_of(self, 0)) {
      for (std::size_t i = 0; i < m; ++i) {
        const Real* grow = G.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const Real* brow = B.data() + p * n;
          Real acc = 0;
          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
          (*gA)[i * k + p] += acc;
        }
      }
    }
    if (auto* gB = grad_of(self, 1)) {
      for (std::size_t i = 0; i < m; ++i) {
        const Real* grow = G.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const Real aip = A[i * k + p];
          Real* gbrow = gB->data() + p * n;
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += aip * grow[j];
        }
      }
    }
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_nt");
  require_matrix(b, "matmul_nt");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k) {
    throw DimensionError("matmul_nt: inner dimensions differ for " +
                         shape_string(a.shape()) + " x " +
                         shape_string(b.shape()) + "^T");
  }
  auto av = a.values();
  auto bv = b.values();
  std::vector<Real> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const Real* arow = av.data() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const Real* brow = bv.data() + j * k;
      Real acc = 0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      out[i * n + j] = acc;
    }
  }
  return make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    const auto& A = value_of(self, 0);
    const auto& B = value_of(self, 1);
    const auto& G = self.grad;
    auto* gA = grad_of(self, 0);
    auto* gB = grad_of(self, 1);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const Real g = G[i * n + j];
        if (g == Real{0}) continue;
        if (gA) {
          Real* garow = gA->data() + i * k;
          const Real* brow = B.data() + j * k;
          for (std::size_t p = 0; p < k; ++p) garow[p] += g * brow[p];
        }
        if (gB) {
          Real* gbrow = gB->data() + j * k;
          const Real* arow = A.data() + i * k;
          for (std::size_t p = 0; p < k; ++p) gbrow[p] += g * arow[p];
        }
      }
    }
  });
}

Tensor transpose(const Tensor& x) {
  require_matrix(x, "transpose");
  const std::size_t r = x.rows(), c = x.cols();
  auto xv = x.values();
  std::vector<Real> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = xv[i * c + j];
  return make_result({c, r}, std::move(out), {x}, [r, c](Node& self) {
    auto* gx = grad_of(self, 0);
    if (!gx) return;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j)
        (*gx)[i * c + j] += self.grad[j * r + i];
  });
}

Tensor softmax(const Tensor& x, Real temperature) {
  if (!(temperature > 0)) {
    throw ParameterError("softmax temperature must be positive, got " +
                         std::to_string(temperature));
  }
  const std::size_t n = last_dim(x, "softmax");
  const std::size_t rows = x.numel() / n;
  auto xv = x.values();
  std::vector<Real> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* in = xv.data() + r * n;
    Real* o = out.data() + r * n;
    Real mx = *std::max_element(in, in + n);
    Real total = 0;
    for (std::size_t j = 0; j < n; ++j) {
      o[j] = std::exp((in[j] - mx) / temperature);
      total += o[j];
    }
    for (std::size_t j = 0; j < n; ++j) o[j] /= total;
  }
  return make_result(x.shape(), std::move(out), {x},
                     [n, rows, temperature](Node& self) {
                       auto* gx = grad_of(self, 0);
                       if (!gx) return;
                       for (std::size_t r = 0; r < rows; ++r) {
                         const Real* y = self.value.data() + r * n;
                         const Real* g = self.grad.data() + r * n;
                         Real dot = 0;
                         for (std::size_t j = 0; j < n; ++j) dot += g[j] * y[j];
                         for (std::size_t j = 0; j < n; ++j) {
                           (*gx)[r * n + j] += y[j] * (g[j] - dot) / temperature;
                         }
                       }
                     });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  Real eps) {
  if (eps < 0) throw ParameterError("layer_norm eps must be >= 0");
  const std::size_t d = last_dim(x, "layer_norm");
  if (gain.shape() != Shape{d} || bias.shape() != Shape{d}) {
    throw DimensionError("layer_norm: gain " + shape_string(gain.shape()) +
                         " / bias " + shape_string(bias.shape()) +
                         " do not match last axis of " +
                         shape_string(x.shape()));
  }
  const std::size_t rows = x.numel() / d;
  auto xv = x.values();
  auto gv = gain.values();
  auto bv = bias.values();
  std::vector<Real> out(x.numel());
  std::vector<Real> xhat(x.numel());
  std::vector<Real> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* in = xv.data() + r * d;
    Real mu = 0;
    for (std::size_t j = 0; j < d; ++j) mu += in[j];
    mu /= static_cast<Real>(d);
    Real var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (in[j] - mu) * (in[j] - mu);
    var /= static_cast<Real>(d);
    if (var + eps <= 0) {
      throw DegenerateInputError("layer_norm: zero variance with eps = 0");
    }
    inv_std[r] = Real{1} / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      xhat[r * d + j] = (in[j] - mu) * inv_std[r];
      out[r * d + j] = gv[j] * xhat[r * d + j] + bv[j];
    }
  }
  return make_result(
      x.shape(), std::move(out), {x, gain, bias},
      [d, rows, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
        const auto& gv = value_of(self, 1);
        auto* gx = grad_of(self, 0);
        auto* gg = grad_of(self, 1);
        auto* gb = grad_of(self, 2);
        std::vector<Real> dxhat(d);
        for (std::size_t r = 0; r < rows; ++r) {
          const Real* g = self.grad.data() + r * d;
          const Real* xh = xhat.data() + r * d;
          Real mean_dxhat = 0, mean_dxhat_xhat = 0;
          for (std::size_t j = 0; j < d; ++j) {
            if (gg) (*gg)[j] += g[j] * xh[j];
            if (gb) (*gb)[j] += g[j];
            dxhat[j] = g[j] * gv[j];
            mean_dxhat += dxhat[j];
            mean_dxhat_xhat += dxhat[j] * xh[j];
          }
          if (!gx) continue;
          mean_dxhat /= static_cast<Real>(d);
          mean_dxhat_xhat /= static_cast<Real>(d);
          for (std::size_t j = 0; j < d; ++j) {
            (*gx)[r * d + j] +=
                inv_std[r] * (dxhat[j] - mean_dxhat - xh[j] * mean_dxhat_xhat);
          }
        }
      });
}

Tensor gelu(const Tensor& x) {
  return unary(
      x,
      [](Real v) { return Real{0.5} * v * (Real{1} + std::erf(v * kInvSqrt2)); },
      [](Real v, Real) {
        const Real cdf = Real{0.5} * (Real{1} + std::erf(v * kInvSqrt2));
        const Real pdf = std::exp(Real{-0.5} * v * v) *
                         (std::numbers::inv_sqrtpi * kInvSqrt2);
        return cdf + v * pdf;
      });
}

Tensor exp(const Tensor& x) {
  return unary(
      x, [](Real v) { return std::exp(v); }, [](Real, Real y) { return y; });
}

Tensor log(const Tensor& x) {
  for (Real v : x.values()) {
    if (!(v > 0)) throw DegenerateInputError("log of a non-positive value");
  }
  return unary(
      x, [](Real v) { return std::log(v); },
      [](Real v, Real) { return Real{1} / v; });
}

namespace {

Real stable_sigmoid(Real v) {
  if (v >= 0) return Real{1} / (Real{1} + std::exp(-v));
  const Real e = std::exp(v);
  return e / (Real{1} + e);
}

}  // namespace

Tensor sigmoid(const Tensor& x) {
  return unary(
      x, stable_sigmoid, [](Real, Real y) { return y * (Real{1} - y); });
}

Tensor softplus(const Tensor& x) {
  return unary(
      x,
      [](Real v) { return std::max(v, Real{0}) + std::log1p(std::exp(-std::abs(v))); },
      [](Real v, Real) { return stable_sigmoid(v); });
}

Tensor sum(const Tensor& x) {
  Real total = 0;
  for (Real v : x.values()) total += v;
  return make_result({}, {total}, {x}, [](Node& self) {
    auto* gx = grad_of(self, 0);
    if (!gx) return;
    for (Real& g : *gx) g += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw DimensionError("mean of an empty tensor");
  return scale(sum(x), Real{1} / static_cast<Real>(x.numel()));
}

Tensor logsumexp(const Tensor& x) {
  if (x.numel() == 0) throw DimensionError("logsumexp of an empty tensor");
  auto xv = x.values();
  const Real mx = *std::max_element(xv.begin(), xv.end());
  Real total = 0;
  for (Real v : xv) total += std::exp(v - mx);
  const Real lse = mx + std::log(total);
  return make_result({}, {lse}, {x}, [](Node& self) {
    auto* gx = grad_of(self, 0);
    if (!gx) return;
    const auto& xs = value_of(self, 0);
    const Real out = self.value[0];
    for (std::size_t i = 0; i < xs.size(); ++i) {
      (*gx)[i] += self.grad[0] * std::exp(xs[i] - out);
    }
  });
}

Tensor l2_normalize(const Tensor& x) {
  const std::size_t d = last_dim(x, "l2_normalize");
  const std::size_t rows = x.numel() / d;
  auto xv = x.values();
  std::vector<Real> out(x.numel());
  std::vector<Real> norms(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    Real sq = 0;
    for (std::size_t j = 0; j < d; ++j) sq += xv[r * d + j] * xv[r * d + j];
    if (!(sq > 0)) {
      throw DegenerateInputError("l2_normalize: zero-norm vector");
    }
    norms[r] = std::sqrt(sq);
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] = xv[r * d + j] / norms[r];
  }
  return make_result(x.shape(), std::move(out), {x},
                     [d, rows, norms = std::move(norms)](Node& self) {
                       auto* gx = grad_of(self, 0);
                       if (!gx) return;
                       for (std::size_t r = 0; r < rows; ++r) {
                         const Real* y = self.value.data() + r * d;
                         const Real* g = self.grad.data() + r * d;
                         Real dot = 0;
                         for (std::size_t j = 0; j < d; ++j) dot += y[j] * g[j];
                         for (std::size_t j = 0; j < d; ++j) {
                           (*gx)[r * d + j] += (g[j] - y[j] * dot) / norms[r];
                         }
                       }
                     });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape " + shape_string(x.shape()) + " to " +
                         shape_string(shape));
  }
  return make_result(std::move(shape), x.to_vector(), {x}, [](Node& self) {
    auto* gx = grad_of(self, 0);
    if (!gx) return;
    for (std::size_t i = 0; i < gx->size(); ++i) (*gx)[i] += self.grad[i];
  });
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids) {
  require_matrix(table, "gather_rows");
  const std::size_t v = table.rows(), d = table.cols();
  auto tv = table.values();
  std::vector<Real> out(ids.size() * d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= v) {
      throw DimensionError("gather_rows: row " + std::to_string(ids[i]) +
                           " out of range for " + shape_string(table.shape()));
    }
    std::copy_n(tv.data() + ids[i] * d, d, out.data() + i * d);
  }
  std::vector<std::size_t> idx(ids.begin(), ids.end());
  return make_result({ids.size(), d}, std::move(out), {table},
                     [d, idx = std::move(idx)](Node& self) {
                       auto* gt = grad_of(self, 0);
                       if (!gt) return;
                       for (std::size_t i = 0; i < idx.size(); ++i) {
                         for (std::size_t j = 0; j < d; ++j) {
                           (*gt)[idx[i] * d + j] += self.grad[i * d + j];
                         }
                       }
                     });
}

Tensor gather_elements(const Tensor& x, std::span<const std::size_t> flat) {
  auto xv = x.values();
  std::vector<Real> out(flat.size());
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (flat[i] >= xv.size()) {
      throw DimensionError("gather_elements: index " + std::to_string(flat[i]) +
                           " out of range for " + shape_string(x.shape()));
    }
    out[i] = xv[flat[i]];
  }
  std::vector<std::size_t> idx(flat.begin(), flat.end());
  return make_result({flat.size()}, std::move(out), {x},
                     [idx = std::move(idx)](Node& self) {
                       auto* gx = grad_of(self, 0);
                       if (!gx) return;
                       for (std::size_t i = 0; i < idx.size(); ++i) {
                         (*gx)[idx[i]] += self.grad[i];
                       }
                     });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  require_matrix(x, "slice_rows");
  if (begin > end || end > x.rows()) {
    throw DimensionError("slice_rows [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") of " + shape_string(x.shape()));
  }
  const std::size_t c = x.cols();
  auto xv = x.values();
  std::vector<Real> out(xv.begin() + begin * c, xv.begin() + end * c);
  return make_result({end - begin, c}, std::move(out), {x},
                     [begin, c](Node& self) {
                       auto* gx = grad_of(self, 0);
                       if (!gx) return;
                       for (std::size_t i = 0; i < self.grad.size(); ++i) {
                         (*gx)[begin * c + i] += self.grad[i];
                       }
                     });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  require_matrix(x, "slice_cols");
  if (begin > end || end > x.cols()) {
    throw DimensionError("slice_cols [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") of " + shape_string(x.shape()));
  }
  const std::size_t r = x.rows(), c = x.cols(), w = end - begin;
  auto xv = x.values();
  std::vector<Real> out(r * w);
  for (std::size_t i = 0; i < r; ++i)
    std::copy_n(xv.data() + i * c + begin, w, out.data() + i * w);
  return make_result({r, w}, std::move(out), {x}, [r, c, w, begin](Node& self) {
    auto* gx = grad_of(self, 0);
    if (!gx) return;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j)
        (*gx)[i * c + begin + j] += self.grad[i * w + j];
  });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows of nothing");
  const std::size_t c = parts[0].cols();
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    if (p.cols() != c) {
      throw DimensionError("concat_rows: " + shape_string(parts[0].shape()) +
                           " vs " + shape_string(p.shape()));
    }
    total += p.rows();
  }
  std::vector<Real> out;
  out.reserve(total * c);
  std::vector<std::size_t> offsets;
  for (const Tensor& p : parts) {
    offsets.push_back(out.size());
    auto v = p.values();
    out.insert(out.end(), v.begin(), v.end());
  }
  return make_result_n({total, c}, std::move(out), parts,
                       [offsets = std::move(offsets)](Node& self) {
                         for (std::size_t k = 0; k < self.parents.size(); ++k) {
                           auto* gp = grad_of(self, k);
                           if (!gp) continue;
                           for (std::size_t i = 0; i < gp->size(); ++i) {
                             (*gp)[i] += self.grad[offsets[k] + i];
                           }
                         }
                       });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_cols of nothing");
  const std::size_t r = parts[0].rows();
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  for (const Tensor& p : parts) {
    if (p.rows() != r) {
      throw DimensionError("concat_cols: " + shape_string(parts[0].shape()) +
                           " vs " + shape_string(p.shape()));
    }
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<Real> out(r * total);
  std::size_t col = 0;
  for (const Tensor& p : parts) {
    auto v = p.values();
    const std::size_t w = p.cols();
    for (std::size_t i = 0; i < r; ++i)
      std::copy_n(v.data() + i * w, w, out.data() + i * total + col);
    col += w;
  }
  return make_result_n({r, total}, std::move(out), parts,
                       [r, total, widths = std::move(widths)](Node& self) {
                         std::size_t col = 0;
                         for (std::size_t k = 0; k < self.parents.size(); ++k) {
                           const std::size_t w = widths[k];
                           if (auto* gp = grad_of(self, k)) {
                             for (std::size_t i = 0; i < r; ++i)
                               for (std::size_t j = 0; j < w; ++j)
                                 (*gp)[i * w + j] += self.grad[i * total + col + j];
                           }
                           col += w;
                         }
                       });
}

Tensor cross_entropy(const Tensor& logits, std::span<const std::int64_t> targets) {
  require_matrix(logits, "cross_entropy");
  const std::size_t n = logits.rows(), c = logits.cols();
  if (targets.size() != n) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) +
                         " targets for logits " + shape_string(logits.shape()));
  }
  auto lv = logits.values();
  std::vector<Real> probs(n * c, Real{0});
  std::vector<std::int64_t> tgt(targets.begin(), targets.end());
  std::size_t counted = 0;
  Real total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (tgt[i] == kIgnoreLabel) continue;
    if (tgt[i] < 0 || static_cast<std::size_t>(tgt[i]) >= c) {
      throw DimensionError("cross_entropy: target " + std::to_string(tgt[i]) +
                           " outside [0, " + std::to_string(c) + ")");
    }
    const Real* row = lv.data() + i * c;
    const Real mx = *std::max_element(row, row + c);
    Real z = 0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
    const Real log_z = mx + std::log(z);
    for (std::size_t j = 0; j < c; ++j) probs[i * c + j] = std::exp(row[j] - log_z);
    total += log_z - row[tgt[i]];
    ++counted;
  }
  if (counted == 0) return Tensor::scalar(Real{0});
  const Real inv = Real{1} / static_cast<Real>(counted);
  return make_result({}, {total * inv}, {logits},
                     [n, c, inv, probs = std::move(probs),
                      tgt = std::move(tgt)](Node& self) {
                       auto* gl = grad_of(self, 0);
                       if (!gl) return;
                       const Real g = self.grad[0] * inv;
                       for (std::size_t i = 0; i < n; ++i) {
                         if (tgt[i] == kIgnoreLabel) continue;
                         for (std::size_t j = 0; j < c; ++j) {
                           (*gl)[i * c + j] += g * probs[i * c + j];
                         }
                         (*gl)[i * c + static_cast<std::size_t>(tgt[i])] -= g;
                       }
                     });
}

}  // namespace tritower::ops

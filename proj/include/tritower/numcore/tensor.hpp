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

#ifndef TRITOWER_NUMCORE_TENSOR_HPP_
#define TRITOWER_NUMCORE_TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace tritower {

// All arithmetic runs in 64-bit floating point.
using Real = double;
using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

// One vertex of the dynamic compute graph. Interior nodes hold a closure that
// reads this node's gradient and accumulates into the parents' gradients.
struct Node {
  Shape shape;
  std::vector<Real> value;
  std::vector<Real> grad;
  bool requires_grad = false;
  bool leaf = true;
  bool consumed = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::vector<Real>& ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), Real{0});
    return grad;
  }
};

}  // namespace detail

// Dense row-major tensor with reverse-mode automatic differentiation.
//
// Tensors are cheap handles: copying a Tensor shares the underlying storage.
// Leaves created with requires_grad=true accumulate gradients across
// successive backward() calls until zero_grad(). A graph can be
// differentiated once; a second backward() through the same interior nodes
// throws ContractError.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<Real> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, Real value, bool requires_grad = false);
  static Tensor scalar(Real value, bool requires_grad = false);
  static Tensor vector(std::vector<Real> values, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<Real> values, bool requires_grad = false);
  static Tensor matrix(std::initializer_list<std::initializer_list<Real>> rows,
                       bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size(std::size_t axis) const;
  std::size_t numel() const;
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const Real> values() const;
  // Direct write access; intended for leaves (optimizer updates, probes).
  std::span<Real> mutable_values();
  std::vector<Real> to_vector() const;
  Real item() const;
  Real at(std::size_t i) const;
  Real at(std::size_t i, std::size_t j) const;

  bool requires_grad() const;
  bool is_leaf() const;
  bool has_grad() const;
  std::span<const Real> grad() const;
  std::span<Real> mutable_grad();
  void zero_grad();

  // Reverse-mode sweep from this scalar. Every node is visited once, in
  // reverse topological order.
  void backward();

  // A fresh leaf holding a copy of the values, disconnected from the graph.
  Tensor detach(bool requires_grad = false) const;

  // Internal: used by op implementations.
  static Tensor from_node(std::shared_ptr<detail::Node> node);
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

}  // namespace tritower

#endif  // TRITOWER_NUMCORE_TENSOR_HPP_

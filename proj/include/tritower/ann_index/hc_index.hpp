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

#ifndef TRITOWER_ANN_INDEX_HC_INDEX_HPP_
#define TRITOWER_ANN_INDEX_HC_INDEX_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "tritower/numcore/ids.hpp"
#include "tritower/numcore/tensor.hpp"

namespace tritower {

struct HCConfig {
  std::size_t branching = 16;  // B
  std::size_t depth = 2;       // D
  std::size_t max_iters = 25;
  std::uint64_t seed = 0;
};

struct SearchParams {
  std::size_t k = 10;
  std::size_t nprobe = 4;
};

struct Hit {
  ProductId product_id = 0;
  Real score = 0;
  friend bool operator==(const Hit&, const Hit&) = default;
};

struct SearchResult {
  std::vector<Hit> hits;
  // Fewer than k candidates were visited.
  bool short_result = false;
};

// Hierarchical spherical k-means tree over unit-norm embeddings. Search
// descends into the nprobe best children of every visited node, so
// nprobe >= B visits every leaf.
class HCIndex {
 public:
  struct Node {
    std::vector<Real> centroid;  // empty for the root
    std::vector<std::uint64_t> children;
    std::vector<std::uint64_t> postings;  // item indices, leaves only
    friend bool operator==(const Node&, const Node&) = default;
  };

  HCIndex() = default;

  // embeddings is row-major [ids.size() x dim].
  static HCIndex build(std::span<const ProductId> ids, std::span<const Real> embeddings,
                       std::size_t dim, const HCConfig& cfg = {});

  SearchResult search(std::span<const Real> u, const SearchParams& params) const;

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  std::size_t branching() const { return branching_; }
  std::size_t depth() const { return depth_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  std::span<const ProductId> ids() const { return ids_; }
  std::span<const Real> embedding(std::size_t item) const;
  // Product ids per leaf, in node order.
  std::vector<std::vector<ProductId>> leaf_members() const;

  void write(std::ostream& os) const;
  static HCIndex read(std::istream& is);
  void save(const std::filesystem::path& path) const;
  static HCIndex load(const std::filesystem::path& path);

  friend bool operator==(const HCIndex&, const HCIndex&) = default;

 private:
  std::size_t dim_ = 0;
  std::size_t branching_ = 0;
  std::size_t depth_ = 0;
  std::vector<ProductId> ids_;
  std::vector<Real> embeddings_;
  std::vector<Node> nodes_;
};

// Exact top-k by inner product; ties by product id ascending. No norm check
// on u.
std::vector<Hit> brute_force(std::span<const ProductId> ids, std::span<const Real> embeddings,
                             std::size_t dim, std::span<const Real> u, std::size_t k);

// |found ∩ truth| / |truth| by product id; an empty truth gives 1.
Real recall_against(std::span<const Hit> found, std::span<const Hit> truth);

}  // namespace tritower

#endif  // TRITOWER_ANN_INDEX_HC_INDEX_HPP_

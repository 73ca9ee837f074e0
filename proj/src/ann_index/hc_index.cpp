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

#include "tritower/ann_index/hc_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <unordered_set>

#include "tritower/numcore/binary_io.hpp"
#include "tritower/numcore/embedding.hpp"
#include "tritower/numcore/errors.hpp"
#include "tritower/numcore/seeds.hpp"

namespace tritower {
namespace {

constexpr char kMagic[4] = {'H', 'C', 'I', 'X'};
constexpr std::uint32_t kVersion = 1;

bool hit_before(const Hit& a, const Hit& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.product_id < b.product_id;
}

void check_unit(std::span<const Real> v, const std::string& what) {
  Real sq = 0;
  for (Real x : v) sq += x * x;
  if (std::abs(std::sqrt(sq) - 1) > 1e-4) {
    throw ContractError(what + " has norm " + std::to_string(std::sqrt(sq)) +
                        ", expected unit norm");
  }
}

class Builder {
 public:
  Builder(const HCConfig& cfg, std::span<const Real> emb, std::size_t dim,
          std::vector<HCIndex::Node>& nodes)
      : cfg_(cfg), emb_(emb), dim_(dim), nodes_(nodes) {}

  std::uint64_t build(std::vector<std::uint64_t> items, std::vector<Real> centroid,
                      std::size_t level) {
    const std::uint64_t id = nodes_.size();
    nodes_.push_back({std::move(centroid), {}, {}});
    if (level == cfg_.depth || items.size() <= 1) {
      nodes_[id].postings = std::move(items);
      return id;
    }
    auto clusters = cluster(items, derive_seed(cfg_.seed, {id}));
    if (clusters.size() == 1) {
      nodes_[id].postings = std::move(items);
      return id;
    }
    std::vector<std::uint64_t> children;
    for (auto& [center, members] : clusters) {
      children.push_back(build(std::move(members), std::move(center), level + 1));
    }
    nodes_[id].children = std::move(children);
    return id;
  }

 private:
  std::span<const Real> row(std::uint64_t i) const { return emb_.subspan(i * dim_, dim_); }

  using Clusters = std::vector<std::pair<std::vector<Real>, std::vector<std::uint64_t>>>;

  Clusters cluster(const std::vector<std::uint64_t>& items, std::uint64_t seed) const {
    const std::size_t n = items.size();
    Clusters out;
    if (n <= cfg_.branching) {
      for (auto i : items) out.push_back({std::vector<Real>(row(i).begin(), row(i).end()), {i}});
      return out;
    }
    const std::size_t k = cfg_.branching;
    std::mt19937_64 rng(seed);

    // k-means++ seeding with distance 1 - cos on the sphere.
    std::vector<std::vector<Real>> centers;
    std::vector<Real> best_sim(n, -std::numeric_limits<Real>::infinity());
    std::vector<std::uint8_t> taken(n, 0);
    std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    while (centers.size() < k) {
      const std::size_t pick = centers.empty() ? first : [&] {
        std::vector<Real> w(n);
        Real total = 0;
        for (std::size_t i = 0; i < n; ++i) {
          w[i] = taken[i] ? 0 : std::max<Real>(0, 1 - best_sim[i]);
          total += w[i];
        }
        if (total <= 0) {
          for (std::size_t i = 0; i < n; ++i)
            if (!taken[i]) return i;
          return n;
        }
        return std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng);
      }();
      if (pick == n) break;
      taken[pick] = 1;
      auto r = row(items[pick]);
      centers.emplace_back(r.begin(), r.end());
      for (std::size_t i = 0; i < n; ++i) {
        best_sim[i] = std::max(best_sim[i], dot(row(items[i]), centers.back()));
      }
    }

    std::vector<std::size_t> assign(n, centers.size());
    for (std::size_t iter = 0; iter < cfg_.max_iters; ++iter) {
      bool changed = false;
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        Real best_score = -std::numeric_limits<Real>::infinity();
        for (std::size_t c = 0; c < centers.size(); ++c) {
          const Real s = dot(row(items[i]), centers[c]);
          if (s > best_score) {
            best_score = s;
            best = c;
          }
        }
        if (assign[i] != best) {
          assign[i] = best;
          changed = true;
        }
      }
      if (!changed) break;
      std::vector<std::vector<Real>> sums(centers.size(), std::vector<Real>(dim_, 0));
      for (std::size_t i = 0; i < n; ++i) {
        auto r = row(items[i]);
        for (std::size_t j = 0; j < dim_; ++j) sums[assign[i]][j] += r[j];
      }
      for (std::size_t c = 0; c < centers.size(); ++c) {
        Real sq = 0;
        for (Real x : sums[c]) sq += x * x;
        if (sq == 0) continue;  // empty or cancelling cluster keeps its center
        const Real inv = 1 / std::sqrt(sq);
        for (std::size_t j = 0; j < dim_; ++j) centers[c][j] = sums[c][j] * inv;
      }
    }
    for (std::size_t c = 0; c < centers.size(); ++c) {
      std::vector<std::uint64_t> members;
      for (std::size_t i = 0; i < n; ++i)
        if (assign[i] == c) members.push_back(items[i]);
      if (!members.empty()) out.push_back({centers[c], std::move(members)});
    }
    return out;
  }

  const HCConfig& cfg_;
  std::span<const Real> emb_;
  std::size_t dim_;
  std::vector<HCIndex::Node>& nodes_;
};

}  // namespace

HCIndex HCIndex::build(std::span<const ProductId> ids, std::span<const Real> embeddings,
                       std::size_t dim, const HCConfig& cfg) {
  if (cfg.branching < 2) throw ParameterError("branching factor must be at least 2");
  if (cfg.depth < 1) throw ParameterError("index depth must be at least 1");
  if (ids.empty()) throw DegenerateInputError("cannot build an index over zero products");
  if (dim == 0 || embeddings.size() != ids.size() * dim) {
    throw DimensionError("index build: " + std::to_string(embeddings.size()) +
                         " values for " + std::to_string(ids.size()) + " products of dim " +
                         std::to_string(dim));
  }
  std::unordered_set<ProductId> seen;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!seen.insert(ids[i]).second) {
      throw ContractError("duplicate product id " + std::to_string(ids[i]) + " in index build");
    }
    check_unit(embeddings.subspan(i * dim, dim), "embedding of product " + std::to_string(ids[i]));
  }

  HCIndex index;
  index.dim_ = dim;
  index.branching_ = cfg.branching;
  index.depth_ = cfg.depth;
  index.ids_.assign(ids.begin(), ids.end());
  index.embeddings_.assign(embeddings.begin(), embeddings.end());
  std::vector<std::uint64_t> all(ids.size());
  std::iota(all.begin(), all.end(), std::uint64_t{0});
  Builder(cfg, index.embeddings_, dim, index.nodes_).build(std::move(all), {}, 0);
  return index;
}

std::span<const Real> HCIndex::embedding(std::size_t item) const {
  return std::span<const Real>(embeddings_).subspan(item * dim_, dim_);
}

SearchResult HCIndex::search(std::span<const Real> u, const SearchParams& params) const {
  if (params.k == 0) throw ParameterError("search k must be at least 1");
  if (params.nprobe == 0) throw ParameterError("nprobe must be at least 1");
  if (u.size() != dim_) {
    throw DimensionError("query of dim " + std::to_string(u.size()) + " against index of dim " +
                         std::to_string(dim_));
  }
  check_unit(u, "query embedding");
  std::vector<Hit> candidates;
  std::vector<std::uint64_t> frontier{0};
  while (!frontier.empty()) {
    std::vector<std::uint64_t> next;
    for (auto id : frontier) {
      const Node& node = nodes_[id];
      if (node.children.empty()) {
        for (auto item : node.postings) candidates.push_back({ids_[item], dot(u, embedding(item))});
        continue;
      }
      std::vector<std::pair<Real, std::size_t>> scored;
      for (std::size_t c = 0; c < node.children.size(); ++c) {
        scored.emplace_back(dot(u, nodes_[node.children[c]].centroid), c);
      }
      const std::size_t take = std::min(params.nprobe, scored.size());
      std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                        scored.end(), [](const auto& a, const auto& b) {
                          return a.first != b.first ? a.first > b.first : a.second < b.second;
                        });
      for (std::size_t c = 0; c < take; ++c) next.push_back(node.children[scored[c].second]);
    }
    frontier = std::move(next);
  }
  SearchResult result;
  std::sort(candidates.begin(), candidates.end(), hit_before);
  result.short_result = candidates.size() < params.k;
  if (candidates.size() > params.k) candidates.resize(params.k);
  result.hits = std::move(candidates);
  return result;
}

std::vector<std::vector<ProductId>> HCIndex::leaf_members() const {
  std::vector<std::vector<ProductId>> out;
  for (const Node& node : nodes_) {
    if (!node.children.empty()) continue;
    std::vector<ProductId> members;
    for (auto item : node.postings) members.push_back(ids_[item]);
    out.push_back(std::move(members));
  }
  return out;
}

void HCIndex::write(std::ostream& os) const {
  os.write(kMagic, 4);
  binio::put_u32(os, kVersion);
  binio::put_u32(os, static_cast<std::uint32_t>(branching_));
  binio::put_u32(os, static_cast<std::uint32_t>(depth_));
  binio::put_u64(os, dim_);
  binio::put_u64(os, ids_.size());
  binio::put_u64(os, nodes_.size());
  for (const Node& node : nodes_) {
    binio::put_u32(os, node.centroid.empty() ? 0 : 1);
    for (Real x : node.centroid) binio::put_f64(os, x);
    binio::put_u64(os, node.children.size());
    for (auto c : node.children) binio::put_u64(os, c);
    binio::put_u64(os, node.postings.size());
    for (auto p : node.postings) binio::put_u64(os, p);
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    binio::put_u64(os, ids_[i]);
    for (Real x : embedding(i)) binio::put_f64(os, x);
  }
  if (!os) throw FormatError("failed writing index stream");
}

HCIndex HCIndex::read(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) {
    throw FormatError("not an index file (bad magic)");
  }
  const auto version = binio::get_u32(is);
  if (version != kVersion) {
    throw FormatError("unsupported index version " + std::to_string(version));
  }
  HCIndex index;
  index.branching_ = binio::get_u32(is);
  index.depth_ = binio::get_u32(is);
  index.dim_ = binio::get_u64(is);
  const auto count = binio::get_u64(is);
  const auto n_nodes = binio::get_u64(is);
  auto check_ref = [](std::uint64_t v, std::uint64_t limit, const char* what) {
    if (v >= limit) throw FormatError(std::string("index file: ") + what + " out of range");
  };
  for (std::uint64_t n = 0; n < n_nodes; ++n) {
    Node node;
    const auto has_centroid = binio::get_u32(is);
    if (has_centroid > 1) throw FormatError("index file: bad centroid flag");
    if (has_centroid) {
      node.centroid.resize(index.dim_);
      for (Real& x : node.centroid) x = binio::get_f64(is);
    }
    node.children.resize(binio::get_u64(is));
    for (auto& c : node.children) check_ref(c = binio::get_u64(is), n_nodes, "child");
    node.postings.resize(binio::get_u64(is));
    for (auto& p : node.postings) check_ref(p = binio::get_u64(is), count, "posting");
    index.nodes_.push_back(std::move(node));
  }
  index.ids_.resize(count);
  index.embeddings_.resize(count * index.dim_);
  for (std::uint64_t i = 0; i < count; ++i) {
    index.ids_[i] = binio::get_u64(is);
    for (std::size_t j = 0; j < index.dim_; ++j) index.embeddings_[i * index.dim_ + j] = binio::get_f64(is);
  }
  return index;
}

void HCIndex::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  write(os);
}

HCIndex HCIndex::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read(is);
}

std::vector<Hit> brute_force(std::span<const ProductId> ids, std::span<const Real> embeddings,
                             std::size_t dim, std::span<const Real> u, std::size_t k) {
  if (embeddings.size() != ids.size() * dim || u.size() != dim) {
    throw DimensionError("brute_force: inconsistent dimensions");
  }
  std::vector<Hit> hits;
  hits.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    hits.push_back({ids[i], dot(u, embeddings.subspan(i * dim, dim))});
  }
  const std::size_t take = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(take), hits.end(),
                    hit_before);
  hits.resize(take);
  return hits;
}

Real recall_against(std::span<const Hit> found, std::span<const Hit> truth) {
  if (truth.empty()) return 1;
  std::set<ProductId> got;
  for (const Hit& h : found) got.insert(h.product_id);
  std::size_t shared = 0;
  for (const Hit& h : truth) shared += got.count(h.product_id);
  return static_cast<Real>(shared) / static_cast<Real>(truth.size());
}

}  // namespace tritower

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

#ifndef TRITOWER_PIPELINE_SERVING_HPP_
#define TRITOWER_PIPELINE_SERVING_HPP_

#include <array>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tritower/ann_index/hc_index.hpp"
#include "tritower/evalkit/metrics.hpp"
#include "tritower/pipeline/model.hpp"
#include "tritower/textproc/corpus.hpp"

namespace tritower {

// Product embeddings keyed by product id, row-major values.
struct EmbeddingTable {
  std::size_t dim = 0;
  std::vector<ProductId> ids;
  std::vector<Real> values;
  std::vector<std::array<Real, 2>> gates;  // {w_title, w_image}; not persisted

  std::span<const Real> row(std::size_t i) const;
};

// Query-free: only titles and patches are read.
EmbeddingTable export_embeddings(const Model& model, const std::vector<ProductRecord>& corpus);

// <prefix>.json manifest and <prefix>.bin (u64 id then dim f64 per product,
// little-endian).
void save_embeddings(const std::filesystem::path& prefix, const EmbeddingTable& table);
EmbeddingTable load_embeddings(const std::filesystem::path& prefix);

struct CategoryGate {
  std::string category;
  Real w_title = 0;
  Real w_image = 0;
  std::size_t products = 0;
};
std::vector<CategoryGate> gates_by_category(const std::vector<ProductRecord>& corpus,
                                            const EmbeddingTable& table);
void write_gate_csv(const std::filesystem::path& path, const std::vector<CategoryGate>& gates);
void write_modality_csv(const std::filesystem::path& path,
                        const std::vector<CategoryModality>& rows);

HCIndex build_index(const EmbeddingTable& table, const HCConfig& cfg);

using Retriever = std::function<std::vector<Hit>(std::span<const Real> u)>;

// One record per distinct query text in the corpus; the targets are every
// product listing that query.
std::vector<EvalRecord> retrieval_records(const Model& model,
                                          const std::vector<ProductRecord>& corpus,
                                          const Retriever& retrieve);

// Synthetic oracle: a query's category is the category of the products
// listing it.
CategoryOracle corpus_oracle(const std::vector<ProductRecord>& corpus);

}  // namespace tritower

#endif  // TRITOWER_PIPELINE_SERVING_HPP_

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

#ifndef TRITOWER_TEXTPROC_CORPUS_HPP_
#define TRITOWER_TEXTPROC_CORPUS_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tritower/numcore/ids.hpp"
#include "tritower/numcore/tensor.hpp"

namespace tritower {

// One product grouped with its related queries: a single JSONL line
// {"product_id", "category", "title", "patches", "queries", "frequency"}.
struct ProductRecord {
  ProductId product_id = 0;
  std::string category;
  std::string title;
  std::size_t num_patches = 0;
  std::size_t patch_dim = 0;
  std::vector<Real> patches;  // num_patches x patch_dim
  std::vector<std::string> queries;
  std::uint64_t frequency = 0;
};

std::string to_jsonl(const ProductRecord& record);
ProductRecord parse_product(const std::string& line);

std::vector<ProductRecord> read_corpus(const std::filesystem::path& path);
void write_corpus(const std::filesystem::path& path,
                  const std::vector<ProductRecord>& records);

// Whitespace texts (titles and queries) used to build the vocabulary.
std::vector<std::string> corpus_texts(const std::vector<ProductRecord>& records);

}  // namespace tritower

#endif  // TRITOWER_TEXTPROC_CORPUS_HPP_

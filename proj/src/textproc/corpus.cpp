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

#include "tritower/textproc/corpus.hpp"

#include <fstream>

#include <json.hpp>

#include "tritower/numcore/errors.hpp"

namespace tritower {

std::string to_jsonl(const ProductRecord& r) {
  nlohmann::ordered_json j;
  j["product_id"] = r.product_id;
  j["category"] = r.category;
  j["title"] = r.title;
  nlohmann::ordered_json patches = nlohmann::ordered_json::array();
  for (std::size_t p = 0; p < r.num_patches; ++p) {
    patches.push_back(std::vector<Real>(r.patches.begin() + p * r.patch_dim,
                                        r.patches.begin() + (p + 1) * r.patch_dim));
  }
  j["patches"] = std::move(patches);
  j["queries"] = r.queries;
  j["frequency"] = r.frequency;
  return j.dump();
}

ProductRecord parse_product(const std::string& line) {
  ProductRecord r;
  try {
    auto j = nlohmann::json::parse(line);
    r.product_id = j.at("product_id").get<ProductId>();
    r.category = j.at("category").get<std::string>();
    r.title = j.at("title").get<std::string>();
    r.queries = j.at("queries").get<std::vector<std::string>>();
    r.frequency = j.at("frequency").get<std::uint64_t>();
    const auto& patches = j.at("patches");
    r.num_patches = patches.size();
    r.patch_dim = r.num_patches ? patches[0].size() : 0;
    for (const auto& p : patches) {
      if (p.size() != r.patch_dim) {
        throw FormatError("product " + std::to_string(r.product_id) +
                          " has ragged patch vectors");
      }
      for (const auto& v : p) r.patches.push_back(v.get<Real>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed corpus line: ") + e.what());
  }
  return r;
}

std::vector<ProductRecord> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read corpus " + path.string());
  std::vector<ProductRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_product(line));
  }
  return out;
}

void write_corpus(const std::filesystem::path& path,
                  const std::vector<ProductRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write corpus " + path.string());
  for (const auto& r : records) out << to_jsonl(r) << '\n';
}

std::vector<std::string> corpus_texts(const std::vector<ProductRecord>& records) {
  std::vector<std::string> texts;
  for (const auto& r : records) {
    texts.push_back(r.title);
    texts.insert(texts.end(), r.queries.begin(), r.queries.end());
  }
  return texts;
}

}  // namespace tritower

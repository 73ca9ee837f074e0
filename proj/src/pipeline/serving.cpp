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

#include "tritower/pipeline/serving.hpp"

#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "tritower/numcore/binary_io.hpp"
#include "tritower/numcore/errors.hpp"

namespace tritower {

std::span<const Real> EmbeddingTable::row(std::size_t i) const {
  return std::span<const Real>(values).subspan(i * dim, dim);
}

EmbeddingTable export_embeddings(const Model& model, const std::vector<ProductRecord>& corpus) {
  EmbeddingTable table;
  table.dim = model.cfg.embed_dim;
  for (const auto& record : corpus) {
    ServedProduct p = embed_product(model, record);
    table.ids.push_back(record.product_id);
    table.values.insert(table.values.end(), p.v.values().begin(), p.v.values().end());
    table.gates.push_back(p.gate);
  }
  return table;
}

void save_embeddings(const std::filesystem::path& prefix, const EmbeddingTable& table) {
  auto bin = prefix;
  bin += ".bin";
  auto manifest = prefix;
  manifest += ".json";
  std::ofstream os(bin, std::ios::binary);
  if (!os) throw FormatError("cannot open " + bin.string() + " for writing");
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    binio::put_u64(os, table.ids[i]);
    for (Real x : table.row(i)) binio::put_f64(os, x);
  }
  if (!os) throw FormatError("failed writing " + bin.string());
  nlohmann::ordered_json j;
  j["format"] = "tritower-embeddings";
  j["version"] = 1;
  j["byte_order"] = "little";
  j["dtype"] = "f64";
  j["dim"] = table.dim;
  j["count"] = table.ids.size();
  j["record"] = "u64 product_id followed by dim f64 values";
  j["blob"] = bin.filename().string();
  std::ofstream ms(manifest);
  if (!ms) throw FormatError("cannot open " + manifest.string() + " for writing");
  ms << j.dump(2) << "\n";
}

EmbeddingTable load_embeddings(const std::filesystem::path& prefix) {
  auto manifest = prefix;
  manifest += ".json";
  std::ifstream ms(manifest);
  if (!ms) throw FormatError("cannot open " + manifest.string());
  EmbeddingTable table;
  std::size_t count = 0;
  try {
    auto j = nlohmann::json::parse(ms);
    if (j.at("format") != "tritower-embeddings" || j.at("version") != 1) {
      throw FormatError(manifest.string() + " is not a version 1 embedding manifest");
    }
    table.dim = j.at("dim");
    count = j.at("count");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed embedding manifest: " + std::string(e.what()));
  }
  auto bin = prefix;
  bin += ".bin";
  std::ifstream is(bin, std::ios::binary);
  if (!is) throw FormatError("cannot open " + bin.string());
  for (std::size_t i = 0; i < count; ++i) {
    table.ids.push_back(binio::get_u64(is));
    for (std::size_t k = 0; k < table.dim; ++k) table.values.push_back(binio::get_f64(is));
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw FormatError(bin.string() + " has trailing bytes");
  }
  return table;
}

std::vector<CategoryGate> gates_by_category(const std::vector<ProductRecord>& corpus,
                                            const EmbeddingTable& table) {
  if (table.gates.size() != corpus.size()) {
    throw DimensionError("gate table does not cover the corpus");
  }
  std::map<std::string, CategoryGate> acc;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto& g = acc[corpus[i].category];
    g.category = corpus[i].category;
    g.w_title += table.gates[i][0];
    g.w_image += table.gates[i][1];
    ++g.products;
  }
  std::vector<CategoryGate> out;
  for (auto& [name, g] : acc) {
    g.w_title /= static_cast<Real>(g.products);
    g.w_image /= static_cast<Real>(g.products);
    out.push_back(g);
  }
  return out;
}

void write_gate_csv(const std::filesystem::path& path, const std::vector<CategoryGate>& gates) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os << "category,w_title,w_image,products\n";
  for (const auto& g : gates) {
    os << csv_field(g.category) << ',' << g.w_title << ',' << g.w_image << ',' << g.products
       << "\n";
  }
}

void write_modality_csv(const std::filesystem::path& path,
                        const std::vector<CategoryModality>& rows) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os << "category,a_title,a_image\n";
  for (const auto& r : rows) os << csv_field(r.category) << ',' << r.a_title << ',' << r.a_image << "\n";
}

HCIndex build_index(const EmbeddingTable& table, const HCConfig& cfg) {
  return HCIndex::build(table.ids, table.values, table.dim, cfg);
}

std::vector<EvalRecord> retrieval_records(const Model& model,
                                          const std::vector<ProductRecord>& corpus,
                                          const Retriever& retrieve) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<ProductId>> targets;
  std::unordered_map<ProductId, std::string> category;
  for (const auto& p : corpus) {
    category[p.product_id] = p.category;
    for (const auto& q : p.queries) {
      auto [it, inserted] = targets.try_emplace(q);
      if (inserted) order.push_back(q);
      it->second.push_back(p.product_id);
    }
  }
  std::vector<EvalRecord> records;
  for (const auto& q : order) {
    EvalRecord r;
    r.query = q;
    const EmbeddingVector u = embed_query(model, q);
    for (const Hit& h : retrieve(u.values())) {
      r.retrieved.push_back(h.product_id);
      auto it = category.find(h.product_id);
      if (it == category.end()) {
        throw ContractError("retrieved product " + std::to_string(h.product_id) +
                            " is not in the corpus");
      }
      r.retrieved_categories.push_back(it->second);
    }
    r.targets = targets[q];
    records.push_back(std::move(r));
  }
  return records;
}

CategoryOracle corpus_oracle(const std::vector<ProductRecord>& corpus) {
  std::unordered_map<std::string, std::string> query_categories;
  std::set<std::string> taxonomy;
  for (const auto& p : corpus) {
    taxonomy.insert(p.category);
    for (const auto& q : p.queries) {
      auto [it, inserted] = query_categories.try_emplace(q, p.category);
      if (!inserted && it->second != p.category) {
        throw ContractError("query '" + q + "' is listed under categories '" + it->second +
                            "' and '" + p.category + "'");
      }
    }
  }
  return CategoryOracle(std::move(query_categories), std::move(taxonomy));
}

}  // namespace tritower

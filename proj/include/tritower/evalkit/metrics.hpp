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

#ifndef TRITOWER_EVALKIT_METRICS_HPP_
#define TRITOWER_EVALKIT_METRICS_HPP_

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tritower/numcore/ids.hpp"
#include "tritower/numcore/tensor.hpp"

namespace tritower {

class RelevanceOracle {
 public:
  virtual ~RelevanceOracle() = default;
  // f(query, product) in [0, 1].
  virtual Real relevance(const std::string& query, ProductId product,
                         const std::string& product_category) const = 0;
  // f_c(query).
  virtual std::string query_category(const std::string& query) const = 0;
  virtual bool has_category(const std::string& category) const = 0;
};

// Relevance is exact category match against each query's generating
// category.
class CategoryOracle : public RelevanceOracle {
 public:
  CategoryOracle(std::unordered_map<std::string, std::string> query_categories,
                 std::set<std::string> taxonomy);

  Real relevance(const std::string& query, ProductId product,
                 const std::string& product_category) const override;
  std::string query_category(const std::string& query) const override;
  bool has_category(const std::string& category) const override;

 private:
  std::unordered_map<std::string, std::string> query_categories_;
  std::set<std::string> taxonomy_;
};

struct EvalRecord {
  std::string query;
  std::vector<ProductId> retrieved;
  std::vector<std::string> retrieved_categories;  // parallel to retrieved
  std::vector<ProductId> targets;
};

struct MetricValue {
  Real value = 0;
  std::size_t rows = 0;      // rows that contributed
  std::size_t excluded = 0;  // rows skipped (empty retrieval or empty targets)
};

MetricValue p_rel(std::span<const EvalRecord> records, const RelevanceOracle& oracle);
MetricValue p_cate(std::span<const EvalRecord> records, const RelevanceOracle& oracle);
// Existence form: a row is a hit if any target is among its first k results.
MetricValue recall_at_k(std::span<const EvalRecord> records, std::size_t k);

struct EvalReport {
  Real p_rel = 0;
  Real p_cate = 0;
  std::map<std::size_t, Real> recall_at_k;
  std::size_t rows = 0;
  std::size_t excluded_rows = 0;
};

EvalReport evaluate(std::span<const EvalRecord> records, const RelevanceOracle& oracle,
                    std::span<const std::size_t> ks);

std::string report_json(const EvalReport& report);
void write_report(const std::filesystem::path& path, const EvalReport& report);
// One row per record: query, sizes, per-row p_rel/p_cate and hit@k flags.
void write_row_diagnostics(const std::filesystem::path& path,
                           std::span<const EvalRecord> records, const RelevanceOracle& oracle,
                           std::span<const std::size_t> ks);

// RFC 4180 quoting for a single field.
std::string csv_field(const std::string& s);

}  // namespace tritower

#endif  // TRITOWER_EVALKIT_METRICS_HPP_

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

#include "tritower/evalkit/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <unordered_set>

#include <json.hpp>

#include "tritower/numcore/errors.hpp"

namespace tritower {

CategoryOracle::CategoryOracle(std::unordered_map<std::string, std::string> query_categories,
                               std::set<std::string> taxonomy)
    : query_categories_(std::move(query_categories)), taxonomy_(std::move(taxonomy)) {
  for (const auto& [query, category] : query_categories_) {
    if (!taxonomy_.count(category)) {
      throw ContractError("query '" + query + "' maps to category '" + category +
                          "' outside the taxonomy");
    }
  }
}

Real CategoryOracle::relevance(const std::string& query, ProductId,
                               const std::string& product_category) const {
  return query_category(query) == product_category ? 1 : 0;
}

std::string CategoryOracle::query_category(const std::string& query) const {
  auto it = query_categories_.find(query);
  if (it == query_categories_.end()) {
    throw ContractError("no category known for query '" + query + "'");
  }
  return it->second;
}

bool CategoryOracle::has_category(const std::string& category) const {
  return taxonomy_.count(category) > 0;
}

namespace {

void check_record(const EvalRecord& r) {
  if (r.retrieved.size() != r.retrieved_categories.size()) {
    throw DimensionError("eval record for '" + r.query + "' has " +
                         std::to_string(r.retrieved.size()) + " products but " +
                         std::to_string(r.retrieved_categories.size()) + " categories");
  }
}

Real row_p_rel(const EvalRecord& r, const RelevanceOracle& oracle) {
  Real sum = 0;
  for (std::size_t j = 0; j < r.retrieved.size(); ++j) {
    const Real f = oracle.relevance(r.query, r.retrieved[j], r.retrieved_categories[j]);
    if (!(f >= 0 && f <= 1)) {
      throw ContractError("oracle relevance " + std::to_string(f) + " outside [0, 1]");
    }
    sum += f;
  }
  return sum / static_cast<Real>(r.retrieved.size());
}

Real row_p_cate(const EvalRecord& r, const RelevanceOracle& oracle) {
  const std::string predicted = oracle.query_category(r.query);
  if (!oracle.has_category(predicted)) {
    throw ContractError("category '" + predicted + "' is not in the oracle taxonomy");
  }
  std::size_t match = 0;
  for (const auto& c : r.retrieved_categories) {
    if (!oracle.has_category(c)) {
      throw ContractError("category '" + c + "' is not in the oracle taxonomy");
    }
    match += c == predicted;
  }
  return static_cast<Real>(match) / static_cast<Real>(r.retrieved.size());
}

bool row_hit(const EvalRecord& r, std::size_t k) {
  const std::size_t n = std::min(k, r.retrieved.size());
  std::unordered_set<ProductId> targets(r.targets.begin(), r.targets.end());
  for (std::size_t j = 0; j < n; ++j)
    if (targets.count(r.retrieved[j])) return true;
  return false;
}

template <typename RowFn>
MetricValue macro_average(std::span<const EvalRecord> records, RowFn fn) {
  MetricValue m;
  Real sum = 0;
  for (const auto& r : records) {
    check_record(r);
    if (r.retrieved.empty()) {
      ++m.excluded;
      continue;
    }
    sum += fn(r);
    ++m.rows;
  }
  if (m.rows > 0) m.value = sum / static_cast<Real>(m.rows);
  return m;
}

}  // namespace

MetricValue p_rel(std::span<const EvalRecord> records, const RelevanceOracle& oracle) {
  return macro_average(records, [&](const EvalRecord& r) { return row_p_rel(r, oracle); });
}

MetricValue p_cate(std::span<const EvalRecord> records, const RelevanceOracle& oracle) {
  return macro_average(records, [&](const EvalRecord& r) { return row_p_cate(r, oracle); });
}

MetricValue recall_at_k(std::span<const EvalRecord> records, std::size_t k) {
  MetricValue m;
  if (k == 0) {
    std::clog << "warning: recall@0 is defined as 0\n";
    return m;
  }
  std::size_t hits = 0;
  for (const auto& r : records) {
    if (r.targets.empty()) {
      ++m.excluded;
      continue;
    }
    hits += row_hit(r, k);
    ++m.rows;
  }
  if (m.rows > 0) m.value = static_cast<Real>(hits) / static_cast<Real>(m.rows);
  return m;
}

EvalReport evaluate(std::span<const EvalRecord> records, const RelevanceOracle& oracle,
                    std::span<const std::size_t> ks) {
  EvalReport report;
  report.p_rel = p_rel(records, oracle).value;
  report.p_cate = p_cate(records, oracle).value;
  for (std::size_t k : ks) report.recall_at_k[k] = recall_at_k(records, k).value;
  report.rows = records.size();
  for (const auto& r : records) report.excluded_rows += r.retrieved.empty() || r.targets.empty();
  return report;
}

std::string report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["p_rel"] = report.p_rel;
  j["p_cate"] = report.p_cate;
  nlohmann::ordered_json recall = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.recall_at_k) recall[std::to_string(k)] = v;
  j["recall_at_k"] = recall;
  j["rows"] = report.rows;
  j["excluded_rows"] = report.excluded_rows;
  return j.dump(2) + "\n";
}

void write_report(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os << report_json(report);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_row_diagnostics(const std::filesystem::path& path,
                           std::span<const EvalRecord> records, const RelevanceOracle& oracle,
                           std::span<const std::size_t> ks) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os << "query,query_category,n_retrieved,n_targets,p_rel,p_cate";
  for (std::size_t k : ks) os << ",hit@" << k;
  os << "\n";
  for (const auto& r : records) {
    check_record(r);
    os << csv_field(r.query) << ',' << csv_field(oracle.query_category(r.query)) << ','
       << r.retrieved.size() << ',' << r.targets.size() << ',';
    if (r.retrieved.empty()) {
      os << ",";
    } else {
      os << row_p_rel(r, oracle) << ',' << row_p_cate(r, oracle);
    }
    for (std::size_t k : ks) os << ',' << (r.targets.empty() ? "" : (row_hit(r, k) ? "1" : "0"));
    os << "\n";
  }
}

}  // namespace tritower

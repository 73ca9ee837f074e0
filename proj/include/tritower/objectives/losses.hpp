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

#ifndef TRITOWER_OBJECTIVES_LOSSES_HPP_
#define TRITOWER_OBJECTIVES_LOSSES_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tritower/numcore/ids.hpp"
#include "tritower/numcore/tensor.hpp"
#include "tritower/textproc/sequence.hpp"

namespace tritower {

enum LossComponent : std::size_t { kMlmQuery, kMlmTitle, kMpm, kQpc, kKeQpm, kNumLossComponents };

// CSV column names, in component order.
inline constexpr std::array<const char*, kNumLossComponents> kLossComponentNames{
    "l_mlm_q", "l_mlm_t", "l_mpm", "l_qpc", "l_ke_qpm"};

struct LossConfig {
  Real tau = 0.05;
  Real gamma = 32;
  Real theta = 0.25;
  std::size_t M = 5;
  std::array<Real, kNumLossComponents> weights{1, 1, 1, 1, 1};
  // Use exp(gamma * exp(s_neg + theta)) for the negative term instead of
  // the circle-loss form exp(gamma * (s_neg + theta)).
  bool ke_literal_form = false;

  void validate() const;
};

// Empirical product frequency with add-one smoothing over the catalog:
// p(id) = (count(id) + 1) / (total + catalog_size).
class FrequencyTable {
 public:
  explicit FrequencyTable(std::size_t catalog_size = 0);

  void add(ProductId id, std::uint64_t count = 1);
  // Grows the smoothing denominator when the catalog is larger than the ids
  // seen so far.
  void set_catalog_size(std::size_t n);

  Real probability(ProductId id) const;
  Real log_probability(ProductId id) const;
  std::uint64_t count(ProductId id) const;
  std::uint64_t total() const { return total_; }
  std::size_t catalog_size() const { return catalog_size_; }

 private:
  std::unordered_map<ProductId, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
  std::size_t catalog_size_ = 0;
};

// Throws ContractError if any row's L2 norm is off by more than 1e-3.
void check_unit_rows(const Tensor& x, const char* what);

// In-batch negative sampling over S = U V^T with the diagonal as positives.
Tensor qpm_loss(const Tensor& U, const Tensor& V, Real tau);
Tensor qpm_loss_from_similarities(const Tensor& sim, Real tau);
// Row i of sim is scored against column targets[i].
Tensor qpm_loss_from_similarities(const Tensor& sim, std::span<const std::int64_t> targets,
                                  Real tau);

// log(1 + sum_j exp(g(s_neg_j)) * sum_m exp(-gamma s_pos_m)) where g is the
// circle-loss form or the literal double exponential. s values already carry
// the -log p correction. Empty s_neg gives exactly 0.
Tensor ke_qpm_loss_from_similarities(const Tensor& s_pos, const Tensor& s_neg,
                                     const LossConfig& cfg);

// One group: the product v (id pos_id) with its M queries U [M x d], against
// negative products V_neg [N' x d]. Negatives pair with every query of the
// group.
Tensor ke_qpm_loss(const Tensor& U, const Tensor& v, ProductId pos_id, const Tensor& V_neg,
                   std::span<const ProductId> neg_ids, const FrequencyTable& freq,
                   const LossConfig& cfg);

// Batch form. sim is [N*M x N]: rows g*M .. g*M+M-1 are group g's queries,
// column j is product j. Each group's negatives are the other columns whose
// product id differs. Mean over groups.
Tensor ke_qpm_batch_loss(const Tensor& sim, std::size_t M, std::span<const ProductId> ids,
                         const FrequencyTable& freq, const LossConfig& cfg);

// Probability form, clamped at 1e-12; mean of -log p_pos and -log(1 - p_neg)
// over all terms.
Real qpc_loss(std::span<const Real> p_pos, std::span<const Real> p_neg);
// Differentiable logit form of the same quantity.
Tensor qpc_loss_from_logits(const Tensor& pos_logits, const Tensor& neg_logits);

// Mean cross-entropy over positions whose label is not kIgnoreLabel. Labels
// past the last logit row must all be ignored (padding).
Tensor mlm_loss(const Tensor& logits, std::span<const std::int64_t> labels);
// Squared error averaged over masked patches and feature dims.
Tensor mpm_loss(const Tensor& predicted, const PatchSequence& patches);

struct LossBreakdown {
  std::array<Real, kNumLossComponents> values{};
  Real total = 0;
};

// Weighted sum; an undefined component counts as 0. A non-finite component
// throws TrainingDivergenceError naming it.
Tensor total_loss(const std::array<Tensor, kNumLossComponents>& components,
                  const std::array<Real, kNumLossComponents>& weights,
                  LossBreakdown* breakdown = nullptr);

}  // namespace tritower

#endif  // TRITOWER_OBJECTIVES_LOSSES_HPP_

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

#include "tritower/objectives/losses.hpp"

#include <algorithm>
#include <cmath>

#include "tritower/numcore/errors.hpp"
#include "tritower/numcore/ops.hpp"

namespace tritower {

void LossConfig::validate() const {
  if (!(tau > 0)) throw ParameterError("tau must be positive, got " + std::to_string(tau));
  if (!(gamma > 0)) throw ParameterError("gamma must be positive, got " + std::to_string(gamma));
  if (!(theta >= 0)) throw ParameterError("theta must be nonnegative, got " + std::to_string(theta));
  if (M == 0) throw ParameterError("M must be at least 1");
  for (std::size_t c = 0; c < kNumLossComponents; ++c) {
    if (!(weights[c] >= 0)) {
      throw ParameterError(std::string("loss weight for ") + kLossComponentNames[c] +
                           " must be nonnegative");
    }
  }
}

FrequencyTable::FrequencyTable(std::size_t catalog_size) : catalog_size_(catalog_size) {}

void FrequencyTable::add(ProductId id, std::uint64_t count) {
  auto& c = counts_[id];
  c += count;
  total_ += count;
  catalog_size_ = std::max(catalog_size_, counts_.size());
}

void FrequencyTable::set_catalog_size(std::size_t n) {
  catalog_size_ = std::max(n, counts_.size());
}

std::uint64_t FrequencyTable::count(ProductId id) const {
  auto it = counts_.find(id);
  return it == counts_.end() ? 0 : it->second;
}

Real FrequencyTable::probability(ProductId id) const {
  const Real denom = static_cast<Real>(total_) + static_cast<Real>(std::max<std::size_t>(catalog_size_, 1));
  return (static_cast<Real>(count(id)) + 1) / denom;
}

Real FrequencyTable::log_probability(ProductId id) const {
  return std::log(probability(id));
}

void check_unit_rows(const Tensor& x, const char* what) {
  if (x.rank() != 2) {
    throw DimensionError(std::string(what) + " must be a matrix, got " + shape_string(x.shape()));
  }
  auto v = x.values();
  const std::size_t d = x.cols();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    Real sq = 0;
    for (std::size_t j = 0; j < d; ++j) sq += v[i * d + j] * v[i * d + j];
    if (std::abs(std::sqrt(sq) - 1) > 1e-3) {
      throw ContractError(std::string(what) + " row " + std::to_string(i) + " has norm " +
                          std::to_string(std::sqrt(sq)) + ", expected unit norm");
    }
  }
}

Tensor qpm_loss(const Tensor& U, const Tensor& V, Real tau) {
  check_unit_rows(U, "query embeddings");
  check_unit_rows(V, "product embeddings");
  if (U.rows() != V.rows()) {
    throw DimensionError("qpm_loss: " + shape_string(U.shape()) + " queries vs " +
                         shape_string(V.shape()) + " products");
  }
  return qpm_loss_from_similarities(ops::matmul_nt(U, V), tau);
}

Tensor qpm_loss_from_similarities(const Tensor& sim, Real tau) {
  std::vector<std::int64_t> diag(sim.rank() == 2 ? sim.rows() : 0);
  for (std::size_t i = 0; i < diag.size(); ++i) diag[i] = static_cast<std::int64_t>(i);
  return qpm_loss_from_similarities(sim, diag, tau);
}

Tensor qpm_loss_from_similarities(const Tensor& sim, std::span<const std::int64_t> targets,
                                  Real tau) {
  if (!(tau > 0)) throw ParameterError("tau must be positive, got " + std::to_string(tau));
  if (sim.rank() != 2 || targets.size() != sim.rows()) {
    throw DimensionError("qpm_loss: similarity matrix " + shape_string(sim.shape()) +
                         " with " + std::to_string(targets.size()) + " targets");
  }
  return ops::cross_entropy(ops::scale(sim, 1 / tau), targets);
}

Tensor ke_qpm_loss_from_similarities(const Tensor& s_pos, const Tensor& s_neg,
                                     const LossConfig& cfg) {
  cfg.validate();
  if (s_pos.numel() == 0) throw DimensionError("ke_qpm_loss needs at least one positive");
  if (s_neg.numel() == 0) return Tensor::scalar(0);
  Tensor neg_arg = cfg.ke_literal_form ? ops::exp(ops::shift(s_neg, cfg.theta))
                                       : ops::shift(s_neg, cfg.theta);
  Tensor log_neg = ops::logsumexp(ops::scale(neg_arg, cfg.gamma));
  Tensor log_pos = ops::logsumexp(ops::scale(s_pos, -cfg.gamma));
  return ops::softplus(ops::add(log_neg, log_pos));
}

Tensor ke_qpm_loss(const Tensor& U, const Tensor& v, ProductId pos_id, const Tensor& V_neg,
                   std::span<const ProductId> neg_ids, const FrequencyTable& freq,
                   const LossConfig& cfg) {
  check_unit_rows(U, "query embeddings");
  Tensor v_row = ops::reshape(v, {1, v.numel()});
  check_unit_rows(v_row, "product embedding");
  const Real log_p = freq.log_probability(pos_id);
  Tensor s_pos = ops::shift(ops::matmul_nt(U, v_row), -log_p);
  if (neg_ids.empty()) return ke_qpm_loss_from_similarities(s_pos, Tensor::zeros({0}), cfg);
  check_unit_rows(V_neg, "negative product embeddings");
  if (V_neg.rows() != neg_ids.size()) {
    throw DimensionError("ke_qpm_loss: " + std::to_string(V_neg.rows()) +
                         " negative rows but " + std::to_string(neg_ids.size()) + " ids");
  }
  std::vector<Real> neg_log_p(neg_ids.size());
  for (std::size_t j = 0; j < neg_ids.size(); ++j) {
    if (neg_ids[j] == pos_id) {
      throw ContractError("product " + std::to_string(pos_id) +
                          " appears in its own negative set");
    }
    neg_log_p[j] = -freq.log_probability(neg_ids[j]);
  }
  Tensor s_neg = ops::add(ops::matmul_nt(U, V_neg), Tensor::vector(std::move(neg_log_p)));
  return ke_qpm_loss_from_similarities(s_pos, s_neg, cfg);
}

Tensor ke_qpm_batch_loss(const Tensor& sim, std::size_t M, std::span<const ProductId> ids,
                         const FrequencyTable& freq, const LossConfig& cfg) {
  const std::size_t n = ids.size();
  if (M == 0 || sim.rank() != 2 || sim.rows() != n * M || sim.cols() != n) {
    throw DimensionError("ke_qpm_batch_loss: similarity matrix " + shape_string(sim.shape()) +
                         " does not match " + std::to_string(n) + " groups of " +
                         std::to_string(M));
  }
  std::vector<Real> correction(n);
  for (std::size_t j = 0; j < n; ++j) correction[j] = -freq.log_probability(ids[j]);
  Tensor corrected = ops::add(sim, Tensor::vector(correction));

  std::vector<Tensor> losses;
  losses.reserve(n);
  for (std::size_t g = 0; g < n; ++g) {
    std::vector<std::size_t> pos_idx;
    std::vector<std::size_t> neg_idx;
    for (std::size_t m = 0; m < M; ++m) {
      const std::size_t row = g * M + m;
      pos_idx.push_back(row * n + g);
      for (std::size_t j = 0; j < n; ++j) {
        if (ids[j] != ids[g]) neg_idx.push_back(row * n + j);
      }
    }
    Tensor s_pos = ops::gather_elements(corrected, pos_idx);
    Tensor s_neg = neg_idx.empty() ? Tensor::zeros({0}) : ops::gather_elements(corrected, neg_idx);
    losses.push_back(ops::reshape(ke_qpm_loss_from_similarities(s_pos, s_neg, cfg), {1, 1}));
  }
  return ops::mean(ops::concat_cols(losses));
}

Real qpc_loss(std::span<const Real> p_pos, std::span<const Real> p_neg) {
  constexpr Real kClamp = 1e-12;
  const std::size_t terms = p_pos.size() + p_neg.size();
  if (terms == 0) return 0;
  Real total = 0;
  for (Real p : p_pos) total -= std::log(std::clamp(p, kClamp, 1 - kClamp));
  for (Real p : p_neg) total -= std::log(std::clamp(1 - p, kClamp, 1 - kClamp));
  return total / static_cast<Real>(terms);
}

Tensor qpc_loss_from_logits(const Tensor& pos_logits, const Tensor& neg_logits) {
  const std::size_t terms = pos_logits.numel() + neg_logits.numel();
  if (terms == 0) return Tensor::scalar(0);
  Tensor total = Tensor::scalar(0);
  if (pos_logits.numel() > 0) total = ops::add(total, ops::sum(ops::softplus(ops::neg(pos_logits))));
  if (neg_logits.numel() > 0) total = ops::add(total, ops::sum(ops::softplus(neg_logits)));
  return ops::scale(total, Real{1} / static_cast<Real>(terms));
}

Tensor mlm_loss(const Tensor& logits, std::span<const std::int64_t> labels) {
  const std::size_t rows = logits.rows();
  if (labels.size() < rows) {
    throw DimensionError("mlm_loss: " + std::to_string(labels.size()) + " labels for " +
                         shape_string(logits.shape()) + " logits");
  }
  for (std::size_t i = rows; i < labels.size(); ++i) {
    if (labels[i] != ops::kIgnoreLabel) {
      throw ContractError("mlm_loss: masked label at position " + std::to_string(i) +
                          " lies beyond the encoded sequence");
    }
  }
  return ops::cross_entropy(logits, labels.first(rows));
}

Tensor mpm_loss(const Tensor& predicted, const PatchSequence& patches) {
  if (predicted.rank() != 2 || predicted.rows() != patches.num_patches ||
      predicted.cols() != patches.dim) {
    throw DimensionError("mpm_loss: predictions " + shape_string(predicted.shape()) +
                         " for " + std::to_string(patches.num_patches) + " patches of dim " +
                         std::to_string(patches.dim));
  }
  std::vector<std::size_t> rows;
  std::vector<Real> targets;
  for (std::size_t i = 0; i < patches.num_patches; ++i) {
    if (patches.mpm_mask.empty() || !patches.mpm_mask[i]) continue;
    rows.push_back(i);
    auto t = std::span<const Real>(patches.mpm_targets).subspan(i * patches.dim, patches.dim);
    targets.insert(targets.end(), t.begin(), t.end());
  }
  if (rows.empty()) return Tensor::scalar(0);
  Tensor target = Tensor({rows.size(), patches.dim}, std::move(targets));
  Tensor diff = ops::sub(ops::gather_rows(predicted, rows), target);
  return ops::mean(ops::mul(diff, diff));
}

Tensor total_loss(const std::array<Tensor, kNumLossComponents>& components,
                  const std::array<Real, kNumLossComponents>& weights,
                  LossBreakdown* breakdown) {
  Tensor total = Tensor::scalar(0);
  LossBreakdown local;
  for (std::size_t c = 0; c < kNumLossComponents; ++c) {
    if (!components[c].defined()) continue;
    const Real value = components[c].item();
    if (!std::isfinite(value)) {
      throw TrainingDivergenceError(kLossComponentNames[c],
                                    std::string("loss component ") + kLossComponentNames[c] +
                                        " is " + std::to_string(value));
    }
    local.values[c] = value;
    if (weights[c] != 0) total = ops::add(total, ops::scale(components[c], weights[c]));
  }
  local.total = total.item();
  if (breakdown) *breakdown = local;
  return total;
}

}  // namespace tritower

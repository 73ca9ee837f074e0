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

#include "tritower/textproc/sequence.hpp"

#include <random>

#include "tritower/numcore/errors.hpp"
#include "tritower/numcore/ops.hpp"

namespace tritower {

std::size_t TokenSequence::length() const {
  std::size_t n = 0;
  for (auto m : attention_mask) n += m;
  return n;
}

TokenSequence tokenize(const Vocabulary& vocab, std::string_view text,
                       Segment segment, std::size_t max_len) {
  if (max_len == 0) throw ParameterError("max_len must leave room for CLS");
  TokenSequence seq;
  seq.segment = segment;
  seq.ids.push_back(Vocabulary::kCls);
  for (const auto& word : split_words(text)) {
    if (seq.ids.size() >= max_len) break;
    if (auto id = vocab.find(word)) {
      seq.ids.push_back(*id);
      continue;
    }
    // Character fallback, used only when every character is known.
    auto chars = split_characters(word);
    std::vector<TokenId> char_ids;
    for (const auto& c : chars) {
      auto id = vocab.find(c);
      if (!id) break;
      char_ids.push_back(*id);
    }
    if (char_ids.size() == chars.size() && chars.size() > 1) {
      seq.ids.insert(seq.ids.end(), char_ids.begin(), char_ids.end());
    } else {
      seq.ids.push_back(Vocabulary::kUnk);
    }
  }
  if (seq.ids.size() > max_len) seq.ids.resize(max_len);
  seq.attention_mask.assign(seq.ids.size(), 1);
  seq.ids.resize(max_len, Vocabulary::kPad);
  seq.attention_mask.resize(max_len, 0);
  return seq;
}

std::string detokenize(const Vocabulary& vocab, std::span<const TokenId> ids) {
  std::string out;
  for (TokenId id : ids) {
    if (id == Vocabulary::kCls || id == Vocabulary::kPad) continue;
    if (!out.empty()) out.push_back(' ');
    out += vocab.token(id);
  }
  return out;
}

namespace {

void check_rate(double rate) {
  if (!(rate > 0 && rate < 1)) {
    throw ParameterError("mask rate must lie in (0, 1), got " + std::to_string(rate));
  }
}

}  // namespace

TokenSequence apply_mlm_mask(const TokenSequence& seq, std::size_t vocab_size,
                             double rate, std::uint64_t seed) {
  check_rate(rate);
  if (seq.masked()) throw ContractError("sequence is already masked");
  if (vocab_size <= static_cast<std::size_t>(Vocabulary::kNumReserved)) {
    throw ParameterError("vocabulary has no maskable tokens");
  }
  TokenSequence out = seq;
  out.mlm_labels.assign(seq.ids.size(), ops::kIgnoreLabel);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<TokenId> random_id(
      Vocabulary::kNumReserved, static_cast<TokenId>(vocab_size - 1));
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    if (!seq.attention_mask[i] || Vocabulary::is_special(seq.ids[i])) continue;
    if (unit(rng) >= rate) continue;
    out.mlm_labels[i] = seq.ids[i];
    const double action = unit(rng);
    if (action < 0.8) {
      out.ids[i] = Vocabulary::kMask;
    } else if (action < 0.9) {
      out.ids[i] = random_id(rng);
    }
  }
  return out;
}

std::size_t PatchSequence::masked_count() const {
  std::size_t n = 0;
  for (auto m : mpm_mask) n += m;
  return n;
}

PatchSequence make_patch_sequence(std::vector<Real> features,
                                  std::size_t num_patches, std::size_t dim) {
  if (features.size() != num_patches * dim) {
    throw DimensionError("patch features hold " + std::to_string(features.size()) +
                         " values, expected " + std::to_string(num_patches) + "x" +
                         std::to_string(dim));
  }
  PatchSequence p;
  p.num_patches = num_patches;
  p.dim = dim;
  p.features = std::move(features);
  p.mpm_mask.assign(num_patches, 0);
  p.mpm_targets.assign(num_patches * dim, Real{0});
  return p;
}

PatchSequence apply_mpm_mask(const PatchSequence& patches, double rate,
                             std::uint64_t seed) {
  check_rate(rate);
  PatchSequence out = patches;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < out.num_patches; ++i) {
    if (out.mpm_mask[i] || unit(rng) >= rate) continue;
    out.mpm_mask[i] = 1;
    for (std::size_t j = 0; j < out.dim; ++j) {
      out.mpm_targets[i * out.dim + j] = out.features[i * out.dim + j];
      out.features[i * out.dim + j] = Real{0};
    }
  }
  return out;
}

}  // namespace tritower

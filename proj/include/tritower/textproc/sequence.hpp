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

#ifndef TRITOWER_TEXTPROC_SEQUENCE_HPP_
#define TRITOWER_TEXTPROC_SEQUENCE_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tritower/numcore/tensor.hpp"
#include "tritower/textproc/vocabulary.hpp"

namespace tritower {

// Segment mark distinguishing query, title and image token streams.
enum class Segment : std::uint8_t { kQuery = 0, kTitle = 1, kImage = 2 };
inline constexpr std::size_t kNumSegments = 3;

inline constexpr std::size_t kDefaultQueryMaxLen = 16;
inline constexpr std::size_t kDefaultTitleMaxLen = 48;
// A 4x4 patch grid.
inline constexpr std::size_t kDefaultGridPatches = 16;

inline constexpr double kDefaultMlmRate = 0.15;
inline constexpr double kDefaultMpmRate = 0.10;

// Tokenized text. ids[0] is CLS; padding only at the tail, and
// attention_mask is zero exactly on padding.
struct TokenSequence {
  std::vector<TokenId> ids;
  Segment segment = Segment::kQuery;
  std::vector<std::uint8_t> attention_mask;
  // Empty until masked; then the original id at selected positions and
  // ops::kIgnoreLabel elsewhere.
  std::vector<std::int64_t> mlm_labels;

  std::size_t max_len() const { return ids.size(); }
  // Number of non-padding positions.
  std::size_t length() const;
  bool masked() const { return !mlm_labels.empty(); }
};

TokenSequence tokenize(const Vocabulary& vocab, std::string_view text,
                       Segment segment, std::size_t max_len);
// Inverse of tokenize on in-vocabulary streams; CLS and PAD are dropped.
std::string detokenize(const Vocabulary& vocab, std::span<const TokenId> ids);

// BERT-style masking: each maskable position is selected with probability
// rate; selected positions become MASK (80%), a random non-reserved id
// (10%), or stay unchanged (10%).
TokenSequence apply_mlm_mask(const TokenSequence& seq, std::size_t vocab_size,
                             double rate, std::uint64_t seed);

// P patch feature vectors of dimension dim, row-major.
struct PatchSequence {
  std::size_t num_patches = 0;
  std::size_t dim = 0;
  std::vector<Real> features;
  std::vector<std::uint8_t> mpm_mask;
  // Original features at masked patches, zero elsewhere.
  std::vector<Real> mpm_targets;

  std::span<const Real> patch(std::size_t i) const {
    return std::span<const Real>(features).subspan(i * dim, dim);
  }
  std::size_t masked_count() const;
};

PatchSequence make_patch_sequence(std::vector<Real> features,
                                  std::size_t num_patches, std::size_t dim);

// Zeroes each patch independently with probability rate; originals are kept
// in mpm_targets.
PatchSequence apply_mpm_mask(const PatchSequence& patches, double rate,
                             std::uint64_t seed);

}  // namespace tritower

#endif  // TRITOWER_TEXTPROC_SEQUENCE_HPP_

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

#ifndef TRITOWER_TEXTPROC_VOCABULARY_HPP_
#define TRITOWER_TEXTPROC_VOCABULARY_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tritower {

using TokenId = std::int32_t;

// Token <-> id bijection. The five reserved tokens always occupy ids 0..4.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kCls = 1;
  static constexpr TokenId kSep = 2;
  static constexpr TokenId kMask = 3;
  static constexpr TokenId kUnk = 4;
  static constexpr TokenId kNumReserved = 5;
  static constexpr std::array<std::string_view, 5> kReservedTokens = {
      "[PAD]", "[CLS]", "[SEP]", "[MASK]", "[UNK]"};

  Vocabulary();

  // Whitespace words from texts, lowercased and sorted, followed by every
  // character (UTF-8 code point) not already a token when include_characters.
  static Vocabulary build(std::span<const std::string> texts,
                          bool include_characters = true);

  // One token per line; line number is the id; reserved tokens first.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::optional<TokenId> find(std::string_view token) const;
  // Id of token, or kUnk.
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }

  // CLS, SEP, PAD and MASK never take part in masking.
  static bool is_special(TokenId id) {
    return id == kPad || id == kCls || id == kSep || id == kMask;
  }

 private:
  TokenId add(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// Whitespace split with ASCII lowercasing.
std::vector<std::string> split_words(std::string_view text);
// Splits a word into UTF-8 code points.
std::vector<std::string> split_characters(std::string_view word);

}  // namespace tritower

#endif  // TRITOWER_TEXTPROC_VOCABULARY_HPP_

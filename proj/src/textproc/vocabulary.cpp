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

#include "tritower/textproc/vocabulary.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "tritower/numcore/errors.hpp"

namespace tritower {

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

std::vector<std::string> split_characters(std::string_view word) {
  std::vector<std::string> chars;
  std::size_t i = 0;
  while (i < word.size()) {
    const auto lead = static_cast<unsigned char>(word[i]);
    std::size_t len = 1;
    if (lead >= 0xF0) {
      len = 4;
    } else if (lead >= 0xE0) {
      len = 3;
    } else if (lead >= 0xC0) {
      len = 2;
    }
    len = std::min(len, word.size() - i);
    chars.emplace_back(word.substr(i, len));
    i += len;
  }
  return chars;
}

Vocabulary::Vocabulary() {
  for (auto tok : kReservedTokens) add(std::string(tok));
}

TokenId Vocabulary::add(std::string token) {
  auto [it, inserted] = index_.emplace(token, static_cast<TokenId>(tokens_.size()));
  if (!inserted) throw VocabularyError("duplicate vocabulary token: " + token);
  tokens_.push_back(std::move(token));
  return it->second;
}

Vocabulary Vocabulary::build(std::span<const std::string> texts,
                             bool include_characters) {
  std::set<std::string> words;
  std::set<std::string> chars;
  for (const auto& text : texts) {
    for (auto& w : split_words(text)) {
      if (include_characters) {
        for (auto& c : split_characters(w)) chars.insert(std::move(c));
      }
      words.insert(std::move(w));
    }
  }
  Vocabulary vocab;
  for (const auto& w : words) {
    if (!vocab.find(w)) vocab.add(w);
  }
  for (const auto& c : chars) {
    if (!vocab.find(c)) vocab.add(c);
  }
  return vocab;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw VocabularyError("cannot read vocabulary " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  if (lines.size() < kReservedTokens.size()) {
    throw VocabularyError("vocabulary " + path.string() + " lacks reserved tokens");
  }
  for (std::size_t i = 0; i < kReservedTokens.size(); ++i) {
    if (lines[i] != kReservedTokens[i]) {
      throw VocabularyError("vocabulary line " + std::to_string(i) + " is '" +
                            lines[i] + "', expected " +
                            std::string(kReservedTokens[i]));
    }
  }
  Vocabulary vocab;
  for (std::size_t i = kReservedTokens.size(); i < lines.size(); ++i) {
    vocab.add(lines[i]);
  }
  return vocab;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw VocabularyError("cannot write vocabulary " + path.string());
  for (const auto& tok : tokens_) out << tok << '\n';
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id(std::string_view token) const {
  return find(token).value_or(kUnk);
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw VocabularyError("token id " + std::to_string(id) + " out of range [0, " +
                          std::to_string(tokens_.size()) + ")");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

}  // namespace tritower

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

#ifndef TRITOWER_DATAGEN_GENERATOR_HPP_
#define TRITOWER_DATAGEN_GENERATOR_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tritower/textproc/corpus.hpp"

namespace tritower {

enum class ModalityProfile { kTextDominant, kImageDominant, kBalanced };

const char* profile_name(ModalityProfile p);
ModalityProfile parse_profile(const std::string& name);

struct GenConfig {
  std::size_t n_categories = 26;
  std::size_t products_per_category = 40;
  std::size_t queries_per_product = 5;
  std::size_t signature_tokens = 6;   // per category
  std::size_t noise_vocab = 200;      // shared, category-independent words
  std::size_t title_min_tokens = 6;
  std::size_t title_max_tokens = 12;
  std::size_t title_signature_tokens = 3;  // text-dominant titles; balanced get 1
  std::size_t num_patches = 16;
  std::size_t patch_dim = 32;
  Real image_signal = 1.0;     // amplitude of the category direction
  Real patch_noise = 0.5;      // per-coordinate noise std
  // Category c gets profiles[c % profiles.size()].
  std::vector<ModalityProfile> profiles{ModalityProfile::kTextDominant,
                                        ModalityProfile::kImageDominant,
                                        ModalityProfile::kBalanced};
  Real skew = 1.0;                 // frequency ~ rank^-skew
  std::uint64_t base_frequency = 1000;
  std::uint64_t seed = 0;

  // M is the number of queries each training group needs.
  void validate(std::size_t M = 5) const;
};

// Sets GenConfig fields from key = value pairs; keys are the field names and
// profiles is a comma-separated list. Unknown keys throw ParameterError.
void apply_gen_config(GenConfig& cfg, const std::map<std::string, std::string>& values);

struct CategoryInfo {
  std::string name;
  ModalityProfile profile = ModalityProfile::kBalanced;
  std::vector<std::string> signature_tokens;
};

struct GeneratedCorpus {
  GenConfig config;
  std::vector<CategoryInfo> categories;
  std::vector<ProductRecord> products;
};

GeneratedCorpus generate(const GenConfig& cfg);

// Expected frequency of the product at 1-based popularity rank r.
std::uint64_t expected_frequency(const GenConfig& cfg, std::size_t rank);

std::string manifest_json(const GeneratedCorpus& corpus);
GeneratedCorpus parse_manifest(const std::string& json);  // products left empty

// Writes <dir>/corpus.jsonl and <dir>/manifest.json.
void write_generated(const std::filesystem::path& dir, const GeneratedCorpus& corpus);
GeneratedCorpus read_generated(const std::filesystem::path& dir);

}  // namespace tritower

#endif  // TRITOWER_DATAGEN_GENERATOR_HPP_

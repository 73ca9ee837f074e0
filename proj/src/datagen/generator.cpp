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

#include "tritower/datagen/generator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tritower/numcore/errors.hpp"
#include "tritower/numcore/seeds.hpp"

namespace tritower {

const char* profile_name(ModalityProfile p) {
  switch (p) {
    case ModalityProfile::kTextDominant:
      return "text";
    case ModalityProfile::kImageDominant:
      return "image";
    case ModalityProfile::kBalanced:
      return "balanced";
  }
  return "balanced";
}

ModalityProfile parse_profile(const std::string& name) {
  if (name == "text") return ModalityProfile::kTextDominant;
  if (name == "image") return ModalityProfile::kImageDominant;
  if (name == "balanced") return ModalityProfile::kBalanced;
  throw ParameterError("unknown modality profile '" + name + "'");
}

void GenConfig::validate(std::size_t M) const {
  if (n_categories == 0 || products_per_category == 0) {
    throw ParameterError("corpus needs at least one category and one product per category");
  }
  if (queries_per_product < M) {
    throw ParameterError("queries_per_product " + std::to_string(queries_per_product) +
                         " is below the group size M=" + std::to_string(M));
  }
  if (signature_tokens < 3) throw ParameterError("signature_tokens must be at least 3");
  if (noise_vocab == 0) throw ParameterError("noise_vocab must be positive");
  if (title_min_tokens == 0 || title_min_tokens > title_max_tokens) {
    throw ParameterError("title length range is empty");
  }
  if (title_signature_tokens > title_min_tokens || title_signature_tokens > signature_tokens) {
    throw ParameterError("title_signature_tokens exceeds the shortest title or the signature set");
  }
  if (num_patches == 0 || patch_dim == 0) throw ParameterError("patch shape must be positive");
  if (profiles.empty()) throw ParameterError("at least one modality profile is required");
  if (!(skew >= 0)) throw ParameterError("skew must be nonnegative");
  if (!(patch_noise >= 0) || !(image_signal >= 0)) {
    throw ParameterError("patch amplitudes must be nonnegative");
  }
  // 1-3 token queries without repetition from the signature set.
  const std::size_t s = signature_tokens;
  const std::size_t distinct = s + s * (s - 1) + s * (s - 1) * (s - 2);
  if (queries_per_product > distinct) {
    throw ParameterError("queries_per_product exceeds the distinct queries a category allows");
  }
}

namespace {

std::uint64_t gen_count(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ParameterError("gen key '" + key + "' expects a nonnegative integer, got '" + v + "'");
  }
  return out;
}

Real gen_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const Real r = std::stod(v, &used);
    if (used == v.size()) return r;
  } catch (const std::exception&) {
  }
  throw ParameterError("gen key '" + key + "' expects a number, got '" + v + "'");
}

}  // namespace

void apply_gen_config(GenConfig& cfg, const std::map<std::string, std::string>& values) {
  for (const auto& [key, v] : values) {
    if (key == "n_categories") {
      cfg.n_categories = gen_count(key, v);
    } else if (key == "products_per_category") {
      cfg.products_per_category = gen_count(key, v);
    } else if (key == "queries_per_product") {
      cfg.queries_per_product = gen_count(key, v);
    } else if (key == "signature_tokens") {
      cfg.signature_tokens = gen_count(key, v);
    } else if (key == "noise_vocab") {
      cfg.noise_vocab = gen_count(key, v);
    } else if (key == "title_min_tokens") {
      cfg.title_min_tokens = gen_count(key, v);
    } else if (key == "title_max_tokens") {
      cfg.title_max_tokens = gen_count(key, v);
    } else if (key == "title_signature_tokens") {
      cfg.title_signature_tokens = gen_count(key, v);
    } else if (key == "num_patches") {
      cfg.num_patches = gen_count(key, v);
    } else if (key == "patch_dim") {
      cfg.patch_dim = gen_count(key, v);
    } else if (key == "image_signal") {
      cfg.image_signal = gen_real(key, v);
    } else if (key == "patch_noise") {
      cfg.patch_noise = gen_real(key, v);
    } else if (key == "skew") {
      cfg.skew = gen_real(key, v);
    } else if (key == "base_frequency") {
      cfg.base_frequency = gen_count(key, v);
    } else if (key == "seed") {
      cfg.seed = gen_count(key, v);
    } else if (key == "profiles") {
      cfg.profiles.clear();
      std::stringstream ss(v);
      std::string item;
      while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(' ');
        const auto e = item.find_last_not_of(' ');
        if (b == std::string::npos) continue;
        cfg.profiles.push_back(parse_profile(item.substr(b, e - b + 1)));
      }
    } else {
      throw ParameterError("unknown gen key '" + key + "'");
    }
  }
}

std::uint64_t expected_frequency(const GenConfig& cfg, std::size_t rank) {
  const double f = static_cast<double>(cfg.base_frequency) *
                   std::pow(static_cast<double>(rank), -cfg.skew);
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(f)));
}

namespace {

std::string two_digit(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu", i);
  return buf;
}

std::string noise_word(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "n%03zu", i);
  return buf;
}

Real round4(Real x) { return std::round(x * 1e4) / 1e4; }

std::vector<std::string> make_title(const GenConfig& cfg, const CategoryInfo& cat,
                                    std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> len(cfg.title_min_tokens, cfg.title_max_tokens);
  std::uniform_int_distribution<std::size_t> noise(0, cfg.noise_vocab - 1);
  const std::size_t n = len(rng);
  std::size_t n_sig = 0;
  if (cat.profile == ModalityProfile::kTextDominant) n_sig = cfg.title_signature_tokens;
  if (cat.profile == ModalityProfile::kBalanced) n_sig = std::min<std::size_t>(1, n);
  std::vector<std::string> words;
  std::vector<std::string> sig = cat.signature_tokens;
  std::shuffle(sig.begin(), sig.end(), rng);
  for (std::size_t i = 0; i < n_sig; ++i) words.push_back(sig[i]);
  while (words.size() < n) words.push_back(noise_word(noise(rng)));
  std::shuffle(words.begin(), words.end(), rng);
  return words;
}

std::vector<Real> make_patches(const GenConfig& cfg, const CategoryInfo& cat,
                               const std::vector<Real>& direction, std::mt19937_64& rng) {
  std::normal_distribution<Real> g;
  Real amplitude = 0;
  if (cat.profile == ModalityProfile::kImageDominant) amplitude = cfg.image_signal;
  if (cat.profile == ModalityProfile::kBalanced) amplitude = cfg.image_signal / 2;
  std::vector<Real> out(cfg.num_patches * cfg.patch_dim);
  for (std::size_t p = 0; p < cfg.num_patches; ++p) {
    // Half the patches carry the category direction; the rest are background.
    const Real a = p % 2 == 0 ? amplitude : 0;
    for (std::size_t j = 0; j < cfg.patch_dim; ++j) {
      out[p * cfg.patch_dim + j] = round4(a * direction[j] + cfg.patch_noise * g(rng));
    }
  }
  return out;
}

std::vector<std::string> make_queries(const GenConfig& cfg, const CategoryInfo& cat,
                                      std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> len(1, 3);
  std::set<std::string> seen;
  std::vector<std::string> out;
  while (out.size() < cfg.queries_per_product) {
    std::vector<std::string> sig = cat.signature_tokens;
    std::shuffle(sig.begin(), sig.end(), rng);
    const std::size_t n = len(rng);
    std::string q = sig[0];
    for (std::size_t i = 1; i < n; ++i) q += " " + sig[i];
    if (seen.insert(q).second) out.push_back(q);
  }
  return out;
}

std::string join(const std::vector<std::string>& words) {
  std::string s;
  for (const auto& w : words) s += (s.empty() ? "" : " ") + w;
  return s;
}

}  // namespace

GeneratedCorpus generate(const GenConfig& cfg) {
  cfg.validate(1);
  GeneratedCorpus corpus;
  corpus.config = cfg;

  std::mt19937_64 rng(derive_seed(cfg.seed, {0}));
  std::normal_distribution<Real> g;
  std::vector<std::vector<Real>> directions;
  for (std::size_t c = 0; c < cfg.n_categories; ++c) {
    CategoryInfo info;
    info.name = "category_" + two_digit(c);
    info.profile = cfg.profiles[c % cfg.profiles.size()];
    for (std::size_t k = 0; k < cfg.signature_tokens; ++k) {
      info.signature_tokens.push_back("c" + two_digit(c) + "w" + std::to_string(k));
    }
    std::vector<Real> dir(cfg.patch_dim);
    Real sq = 0;
    for (Real& x : dir) {
      x = g(rng);
      sq += x * x;
    }
    // Scale so the direction has per-coordinate RMS 1.
    const Real scale = std::sqrt(static_cast<Real>(cfg.patch_dim) / sq);
    for (Real& x : dir) x *= scale;
    directions.push_back(std::move(dir));
    corpus.categories.push_back(std::move(info));
  }

  const std::size_t n = cfg.n_categories * cfg.products_per_category;
  std::vector<std::size_t> rank(n);
  std::iota(rank.begin(), rank.end(), std::size_t{1});
  std::shuffle(rank.begin(), rank.end(), rng);

  for (std::size_t c = 0; c < cfg.n_categories; ++c) {
    for (std::size_t k = 0; k < cfg.products_per_category; ++k) {
      const std::size_t idx = c * cfg.products_per_category + k;
      std::mt19937_64 prng(derive_seed(cfg.seed, {1, idx}));
      const CategoryInfo& cat = corpus.categories[c];
      ProductRecord p;
      p.product_id = 100000 + idx;
      p.category = cat.name;
      p.title = join(make_title(cfg, cat, prng));
      p.num_patches = cfg.num_patches;
      p.patch_dim = cfg.patch_dim;
      p.patches = make_patches(cfg, cat, directions[c], prng);
      p.queries = make_queries(cfg, cat, prng);
      p.frequency = expected_frequency(cfg, rank[idx]);
      corpus.products.push_back(std::move(p));
    }
  }
  return corpus;
}

namespace {

nlohmann::ordered_json config_json(const GenConfig& cfg) {
  nlohmann::ordered_json j;
  j["n_categories"] = cfg.n_categories;
  j["products_per_category"] = cfg.products_per_category;
  j["queries_per_product"] = cfg.queries_per_product;
  j["signature_tokens"] = cfg.signature_tokens;
  j["noise_vocab"] = cfg.noise_vocab;
  j["title_min_tokens"] = cfg.title_min_tokens;
  j["title_max_tokens"] = cfg.title_max_tokens;
  j["title_signature_tokens"] = cfg.title_signature_tokens;
  j["num_patches"] = cfg.num_patches;
  j["patch_dim"] = cfg.patch_dim;
  j["image_signal"] = cfg.image_signal;
  j["patch_noise"] = cfg.patch_noise;
  std::vector<std::string> profiles;
  for (auto p : cfg.profiles) profiles.push_back(profile_name(p));
  j["profiles"] = profiles;
  j["skew"] = cfg.skew;
  j["base_frequency"] = cfg.base_frequency;
  j["seed"] = cfg.seed;
  return j;
}

}  // namespace

std::string manifest_json(const GeneratedCorpus& corpus) {
  nlohmann::ordered_json j;
  j["format"] = "tritower-synthetic-corpus";
  j["version"] = 1;
  j["seed"] = corpus.config.seed;
  j["config"] = config_json(corpus.config);
  j["products"] = corpus.products.size();
  nlohmann::ordered_json cats = nlohmann::ordered_json::array();
  for (const auto& c : corpus.categories) {
    cats.push_back({{"name", c.name},
                    {"profile", profile_name(c.profile)},
                    {"signature_tokens", c.signature_tokens}});
  }
  j["categories"] = cats;
  return j.dump(2) + "\n";
}

GeneratedCorpus parse_manifest(const std::string& text) {
  GeneratedCorpus out;
  try {
    auto j = nlohmann::json::parse(text);
    if (j.at("format") != "tritower-synthetic-corpus") throw FormatError("unexpected manifest format");
    const auto& c = j.at("config");
    GenConfig& cfg = out.config;
    cfg.n_categories = c.at("n_categories");
    cfg.products_per_category = c.at("products_per_category");
    cfg.queries_per_product = c.at("queries_per_product");
    cfg.signature_tokens = c.at("signature_tokens");
    cfg.noise_vocab = c.at("noise_vocab");
    cfg.title_min_tokens = c.at("title_min_tokens");
    cfg.title_max_tokens = c.at("title_max_tokens");
    cfg.title_signature_tokens = c.at("title_signature_tokens");
    cfg.num_patches = c.at("num_patches");
    cfg.patch_dim = c.at("patch_dim");
    cfg.image_signal = c.at("image_signal");
    cfg.patch_noise = c.at("patch_noise");
    cfg.profiles.clear();
    for (const auto& p : c.at("profiles")) cfg.profiles.push_back(parse_profile(p));
    cfg.skew = c.at("skew");
    cfg.base_frequency = c.at("base_frequency");
    cfg.seed = c.at("seed");
    for (const auto& cat : j.at("categories")) {
      CategoryInfo info;
      info.name = cat.at("name");
      info.profile = parse_profile(cat.at("profile"));
      info.signature_tokens = cat.at("signature_tokens").get<std::vector<std::string>>();
      out.categories.push_back(std::move(info));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed corpus manifest: ") + e.what());
  }
  return out;
}

void write_generated(const std::filesystem::path& dir, const GeneratedCorpus& corpus) {
  std::filesystem::create_directories(dir);
  write_corpus(dir / "corpus.jsonl", corpus.products);
  std::ofstream os(dir / "manifest.json");
  if (!os) throw FormatError("cannot write " + (dir / "manifest.json").string());
  os << manifest_json(corpus);
}

GeneratedCorpus read_generated(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw FormatError("cannot open " + (dir / "manifest.json").string());
  std::stringstream ss;
  ss << is.rdbuf();
  GeneratedCorpus corpus = parse_manifest(ss.str());
  corpus.products = read_corpus(dir / "corpus.jsonl");
  return corpus;
}

}  // namespace tritower

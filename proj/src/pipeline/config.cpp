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

#include "tritower/pipeline/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "tritower/numcore/errors.hpp"

namespace tritower {

LossMode parse_loss_mode(const std::string& name) {
  if (name == "make") return LossMode::kMake;
  if (name == "ibns") return LossMode::kIbns;
  if (name == "no-ma") return LossMode::kNoMa;
  if (name == "no-ke") return LossMode::kNoKe;
  throw ParameterError("unknown loss mode '" + name + "' (expected make, ibns, no-ma, no-ke)");
}

const char* loss_mode_name(LossMode mode) {
  switch (mode) {
    case LossMode::kMake:
      return "make";
    case LossMode::kIbns:
      return "ibns";
    case LossMode::kNoMa:
      return "no-ma";
    case LossMode::kNoKe:
      return "no-ke";
  }
  return "make";
}

FrequencySource parse_frequency_source(const std::string& name) {
  if (name == "stream") return FrequencySource::kStream;
  if (name == "clicks") return FrequencySource::kClicks;
  throw ParameterError("unknown frequency source '" + name + "' (expected stream, clicks)");
}

const char* frequency_source_name(FrequencySource source) {
  return source == FrequencySource::kClicks ? "clicks" : "stream";
}

void TrainConfig::validate() const {
  if (batch_size < 2) throw ParameterError("batch_size must be at least 2");
  if (warmup_iters < 1) throw ParameterError("warmup_iters must be at least 1");
  if (!(lr >= 0)) throw ParameterError("lr must be nonnegative");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) {
    throw ParameterError("Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0)) throw ParameterError("adam_eps must be positive");
  if (!(clip_norm >= 0)) throw ParameterError("clip_norm must be nonnegative");
  if (!(mlm_rate > 0 && mlm_rate < 1) || !(mpm_rate > 0 && mpm_rate < 1)) {
    throw ParameterError("mask rates must lie in (0, 1)");
  }
  if (embed_dim == 0) throw ParameterError("embed_dim must be positive");
  if (query_max_len < 2 || title_max_len < 2) {
    throw ParameterError("sequence lengths must leave room for [CLS] and one token");
  }
  if (n_heads == 0 || d_model % n_heads != 0) {
    throw ParameterError("d_model " + std::to_string(d_model) + " is not divisible by n_heads " +
                         std::to_string(n_heads));
  }
  if (n_layers == 0 || fusion_layers == 0) throw ParameterError("layer counts must be at least 1");
  loss.validate();
}

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap out;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParameterError("config line " + std::to_string(line_no) + " is not key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParameterError("config line " + std::to_string(line_no) + " has no key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

ConfigMap read_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ParameterError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

namespace {

std::size_t to_count(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ParameterError("config key '" + key + "' expects a nonnegative integer, got '" + v + "'");
  }
  return out;
}

Real to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const Real r = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ParameterError("config key '" + key + "' expects a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ParameterError("config key '" + key + "' expects true or false, got '" + v + "'");
}

std::string fmt_real(Real r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", r);
  return buf;
}

struct Field {
  const char* key;
  std::function<void(TrainConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

#define COUNT_FIELD(name, member)                                                  \
  Field {                                                                          \
    name, [](TrainConfig& c, const std::string& k, const std::string& v) {         \
      c.member = to_count(k, v);                                                   \
    },                                                                             \
        [](const TrainConfig& c) { return std::to_string(c.member); }              \
  }
#define REAL_FIELD(name, member)                                                   \
  Field {                                                                          \
    name, [](TrainConfig& c, const std::string& k, const std::string& v) {         \
      c.member = to_real(k, v);                                                    \
    },                                                                             \
        [](const TrainConfig& c) { return fmt_real(c.member); }                    \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      COUNT_FIELD("batch_size", batch_size),
      COUNT_FIELD("epochs", epochs),
      COUNT_FIELD("max_steps", max_steps),
      REAL_FIELD("lr", lr),
      COUNT_FIELD("warmup_iters", warmup_iters),
      REAL_FIELD("beta1", beta1),
      REAL_FIELD("beta2", beta2),
      REAL_FIELD("adam_eps", adam_eps),
      REAL_FIELD("clip_norm", clip_norm),
      COUNT_FIELD("seed", seed),
      Field{"loss_mode",
            [](TrainConfig& c, const std::string&, const std::string& v) {
              c.loss_mode = parse_loss_mode(v);
            },
            [](const TrainConfig& c) { return std::string(loss_mode_name(c.loss_mode)); }},
      Field{"frequency_source",
            [](TrainConfig& c, const std::string&, const std::string& v) {
              c.frequency_source = parse_frequency_source(v);
            },
            [](const TrainConfig& c) {
              return std::string(frequency_source_name(c.frequency_source));
            }},
      REAL_FIELD("mlm_rate", mlm_rate),
      REAL_FIELD("mpm_rate", mpm_rate),
      COUNT_FIELD("d_model", d_model),
      COUNT_FIELD("n_layers", n_layers),
      COUNT_FIELD("n_heads", n_heads),
      COUNT_FIELD("d_ff", d_ff),
      COUNT_FIELD("embed_dim", embed_dim),
      COUNT_FIELD("query_max_len", query_max_len),
      COUNT_FIELD("title_max_len", title_max_len),
      COUNT_FIELD("fusion_layers", fusion_layers),
      Field{"fusion_direction",
            [](TrainConfig& c, const std::string&, const std::string& v) {
              c.fusion_direction = parse_fusion_direction(v);
            },
            [](const TrainConfig& c) {
              return std::string(fusion_direction_name(c.fusion_direction));
            }},
      REAL_FIELD("tau", loss.tau),
      REAL_FIELD("gamma", loss.gamma),
      REAL_FIELD("theta", loss.theta),
      COUNT_FIELD("M", loss.M),
      Field{"ke_literal_form",
            [](TrainConfig& c, const std::string& k, const std::string& v) {
              c.loss.ke_literal_form = to_bool(k, v);
            },
            [](const TrainConfig& c) {
              return std::string(c.loss.ke_literal_form ? "true" : "false");
            }},
      REAL_FIELD("w_mlm_q", loss.weights[kMlmQuery]),
      REAL_FIELD("w_mlm_t", loss.weights[kMlmTitle]),
      REAL_FIELD("w_mpm", loss.weights[kMpm]),
      REAL_FIELD("w_qpc", loss.weights[kQpc]),
      REAL_FIELD("w_ke_qpm", loss.weights[kKeQpm]),
  };
  return table;
}

#undef COUNT_FIELD
#undef REAL_FIELD

}  // namespace

void apply_config(TrainConfig& cfg, const ConfigMap& values) {
  for (const auto& [key, value] : values) {
    bool found = false;
    for (const Field& f : fields()) {
      if (key == f.key) {
        f.set(cfg, key, value);
        found = true;
        break;
      }
    }
    if (!found) throw ParameterError("unknown config key '" + key + "'");
  }
}

ConfigMap to_config_map(const TrainConfig& cfg) {
  ConfigMap out;
  for (const Field& f : fields()) out[f.key] = f.get(cfg);
  return out;
}

std::string config_text(const TrainConfig& cfg) {
  std::string out;
  for (const Field& f : fields()) out += std::string(f.key) + " = " + f.get(cfg) + "\n";
  return out;
}

std::size_t steps_per_epoch(const TrainConfig& cfg, std::size_t n_products) {
  const std::size_t full = n_products / cfg.batch_size;
  const std::size_t rest = n_products % cfg.batch_size;
  return full + (rest >= 2 ? 1 : 0);
}

std::size_t total_steps(const TrainConfig& cfg, std::size_t n_products) {
  if (cfg.max_steps > 0) return cfg.max_steps;
  return cfg.epochs * steps_per_epoch(cfg, n_products);
}

Real lr_schedule(std::size_t step, const TrainConfig& cfg, std::size_t total) {
  const std::size_t w = cfg.warmup_iters;
  if (total <= w) {
    throw ParameterError("total steps " + std::to_string(total) +
                         " must exceed warmup_iters " + std::to_string(w));
  }
  if (step >= total) return 0;
  if (step <= w) return cfg.lr * static_cast<Real>(step) / static_cast<Real>(w);
  return cfg.lr * static_cast<Real>(total - step) / static_cast<Real>(total - w);
}

}  // namespace tritower

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

#ifndef TRITOWER_PIPELINE_CONFIG_HPP_
#define TRITOWER_PIPELINE_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "tritower/fusion/modal_adaptation.hpp"
#include "tritower/objectives/losses.hpp"

namespace tritower {

// make: full objective. ibns: in-batch softmax with one query per group in
// place of KE-QPM. no-ke: in-batch softmax over every query of every group.
// no-ma: full objective without the fusion module and the QPC term.
enum class LossMode { kMake, kIbns, kNoMa, kNoKe };

LossMode parse_loss_mode(const std::string& name);
const char* loss_mode_name(LossMode mode);

// Where the product probabilities of the -log p correction come from. stream:
// occurrences in the training stream (one per record per epoch). clicks: the
// records' click counts.
enum class FrequencySource { kStream, kClicks };
FrequencySource parse_frequency_source(const std::string& name);
const char* frequency_source_name(FrequencySource source);

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t epochs = 10;
  std::size_t max_steps = 0;  // overrides epochs when nonzero
  Real lr = 1e-4;
  std::size_t warmup_iters = 2000;
  Real beta1 = 0.9;
  Real beta2 = 0.98;
  Real adam_eps = 1e-8;
  Real clip_norm = 1.0;  // 0 disables clipping
  std::uint64_t seed = 0;
  LossMode loss_mode = LossMode::kMake;
  FrequencySource frequency_source = FrequencySource::kStream;
  Real mlm_rate = 0.15;
  Real mpm_rate = 0.10;

  std::size_t d_model = 64;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t d_ff = 128;
  std::size_t embed_dim = 64;
  std::size_t query_max_len = 16;
  std::size_t title_max_len = 48;
  std::size_t fusion_layers = 2;
  FusionDirection fusion_direction = FusionDirection::kQueryReadsProduct;

  LossConfig loss;

  void validate() const;
};

using ConfigMap = std::map<std::string, std::string>;

// key = value lines; '#' starts a comment; blank lines ignored.
ConfigMap parse_config_text(const std::string& text);
ConfigMap read_config_file(const std::filesystem::path& path);

// Unknown keys and unparsable values throw ParameterError naming the key.
void apply_config(TrainConfig& cfg, const ConfigMap& values);
ConfigMap to_config_map(const TrainConfig& cfg);
std::string config_text(const TrainConfig& cfg);

std::size_t total_steps(const TrainConfig& cfg, std::size_t n_products);
std::size_t steps_per_epoch(const TrainConfig& cfg, std::size_t n_products);

// Linear warmup from 0 at step 0 to lr at warmup_iters, then linear decay to
// 0 at total; 0 beyond total.
Real lr_schedule(std::size_t step, const TrainConfig& cfg, std::size_t total);

}  // namespace tritower

#endif  // TRITOWER_PIPELINE_CONFIG_HPP_

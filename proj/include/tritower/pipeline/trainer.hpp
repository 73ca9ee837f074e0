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

#ifndef TRITOWER_PIPELINE_TRAINER_HPP_
#define TRITOWER_PIPELINE_TRAINER_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "tritower/objectives/losses.hpp"
#include "tritower/pipeline/config.hpp"
#include "tritower/pipeline/model.hpp"
#include "tritower/pipeline/optimizer.hpp"
#include "tritower/textproc/corpus.hpp"

namespace tritower {

Vocabulary build_vocabulary(const std::vector<ProductRecord>& corpus);
// Product counts smoothed over the catalog of distinct product ids.
FrequencyTable frequency_table(const std::vector<ProductRecord>& corpus,
                               FrequencySource source);

class Trainer {
 public:
  Trainer(TrainConfig cfg, std::vector<ProductRecord> corpus, Vocabulary vocab);
  // Continues a run from a checkpoint directory over the same corpus.
  static Trainer resume(const std::filesystem::path& checkpoint,
                        std::vector<ProductRecord> corpus);

  // Zeroes gradients, then runs forward and backward for the batch of the
  // given step. Parameters are not changed.
  LossBreakdown compute_gradients(std::size_t step);
  // compute_gradients + clipping + one Adam update at the current step.
  LossBreakdown step();

  std::size_t current_step() const { return step_; }
  std::size_t total_steps() const { return total_; }
  bool done() const { return step_ >= total_; }
  Real learning_rate() const;

  const TrainConfig& config() const { return cfg_; }
  const Model& model() const { return model_; }
  Model& mutable_model() { return model_; }
  const std::vector<ProductRecord>& corpus() const { return corpus_; }

  // Corpus indices of the groups in the batch for a step.
  std::vector<std::size_t> batch_indices(std::size_t step) const;

  // vocab.txt, params.{json,bin}, optimizer.{json,bin}, state.json.
  void save_checkpoint(const std::filesystem::path& dir) const;

 private:
  Trainer(TrainConfig cfg, std::vector<ProductRecord> corpus, Model model);

  TrainConfig cfg_;
  std::vector<ProductRecord> corpus_;
  Model model_;
  std::vector<PreparedProduct> prepared_;
  FrequencyTable freq_;
  Adam adam_;
  std::size_t step_ = 0;
  std::size_t total_ = 0;
};

std::string loss_csv_header();
std::string loss_csv_row(std::size_t step, const LossBreakdown& losses);

// Loads the model stored in a checkpoint directory.
Model load_model(const std::filesystem::path& checkpoint);

}  // namespace tritower

#endif  // TRITOWER_PIPELINE_TRAINER_HPP_

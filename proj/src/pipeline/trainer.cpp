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

#include "tritower/pipeline/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tritower/fusion/modal_adaptation.hpp"
#include "tritower/numcore/errors.hpp"
#include "tritower/numcore/ops.hpp"
#include "tritower/numcore/seeds.hpp"

namespace tritower {
namespace {

// Seed stream tags.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kEpochStream = 2;
constexpr std::uint64_t kMaskQueryStream = 3;
constexpr std::uint64_t kMaskTitleStream = 4;
constexpr std::uint64_t kMaskPatchStream = 5;

Tensor as_row(const Tensor& v) { return ops::reshape(v, {1, v.numel()}); }

std::size_t patch_dims(const std::vector<ProductRecord>& corpus, bool want_dim) {
  if (corpus.empty()) throw DegenerateInputError("training corpus is empty");
  return want_dim ? corpus.front().patch_dim : corpus.front().num_patches;
}

// Rows of logits with a real label, stacked across the batch.
struct PooledLabels {
  std::vector<Tensor> logits;
  std::vector<std::int64_t> labels;

  void add(const Tensor& rows, const std::vector<std::int64_t>& seq_labels) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < rows.rows(); ++i) {
      if (seq_labels[i] != ops::kIgnoreLabel) keep.push_back(i);
    }
    if (keep.empty()) return;
    logits.push_back(ops::gather_rows(rows, keep));
    for (auto i : keep) labels.push_back(seq_labels[i]);
  }

  Tensor loss() const {
    if (logits.empty()) return Tensor::scalar(0);
    return ops::cross_entropy(ops::concat_rows(logits), labels);
  }
};

}  // namespace

Vocabulary build_vocabulary(const std::vector<ProductRecord>& corpus) {
  const auto texts = corpus_texts(corpus);
  return Vocabulary::build(texts);
}

FrequencyTable frequency_table(const std::vector<ProductRecord>& corpus,
                               FrequencySource source) {
  std::set<ProductId> catalog;
  for (const auto& p : corpus) catalog.insert(p.product_id);
  FrequencyTable freq(catalog.size());
  for (const auto& p : corpus) {
    freq.add(p.product_id, source == FrequencySource::kClicks ? p.frequency : 1);
  }
  return freq;
}

Trainer::Trainer(TrainConfig cfg, std::vector<ProductRecord> corpus, Vocabulary vocab)
    : Trainer(cfg, corpus, [&] {
        cfg.validate();
        const auto mc = model_config(cfg, vocab.size(), patch_dims(corpus, false),
                                     patch_dims(corpus, true));
        return init_model(mc, std::move(vocab), derive_seed(cfg.seed, {kInitStream}));
      }()) {}

Trainer::Trainer(TrainConfig cfg, std::vector<ProductRecord> corpus, Model model)
    : cfg_(std::move(cfg)),
      corpus_(std::move(corpus)),
      model_(std::move(model)),
      freq_(frequency_table(corpus_, cfg_.frequency_source)),
      adam_(cfg_.beta1, cfg_.beta2, cfg_.adam_eps) {
  cfg_.validate();
  const std::size_t m = cfg_.loss_mode == LossMode::kIbns ? 1 : cfg_.loss.M;
  for (const auto& record : corpus_) {
    if (record.queries.size() < m) {
      throw ContractError("product " + std::to_string(record.product_id) + " has " +
                          std::to_string(record.queries.size()) + " queries, the group size is " +
                          std::to_string(m));
    }
    prepared_.push_back(prepare_product(model_, record));
  }
  if (corpus_.size() < 2) throw DegenerateInputError("training needs at least two products");
  total_ = tritower::total_steps(cfg_, corpus_.size());
  lr_schedule(0, cfg_, total_);  // validates warmup against the run length
}

Real Trainer::learning_rate() const { return lr_schedule(step_ + 1, cfg_, total_); }

std::vector<std::size_t> Trainer::batch_indices(std::size_t step) const {
  const std::size_t n = corpus_.size();
  const std::size_t per_epoch = steps_per_epoch(cfg_, n);
  const std::size_t epoch = step / per_epoch;
  const std::size_t b = step % per_epoch;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(cfg_.seed, {kEpochStream, epoch}));
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t begin = b * cfg_.batch_size;
  const std::size_t end = std::min(n, begin + cfg_.batch_size);
  return {order.begin() + static_cast<std::ptrdiff_t>(begin),
          order.begin() + static_cast<std::ptrdiff_t>(end)};
}

LossBreakdown Trainer::compute_gradients(std::size_t step) {
  model_.params.zero_grad();
  const auto batch = batch_indices(step);
  const std::size_t n = batch.size();
  const bool ibns = cfg_.loss_mode == LossMode::kIbns;
  const std::size_t M = ibns ? 1 : cfg_.loss.M;
  const auto& w = cfg_.loss.weights;
  const ParameterStore& params = model_.params;

  std::vector<std::vector<EncoderOutput>> query_out(n);
  std::vector<EncoderOutput> title_out(n);
  std::vector<EncoderOutput> image_out(n);
  std::vector<Tensor> u_rows;
  std::vector<Tensor> v_rows;
  std::vector<ProductId> ids(n);
  for (std::size_t g = 0; g < n; ++g) {
    const PreparedProduct& p = prepared_[batch[g]];
    ids[g] = p.product_id;
    for (std::size_t m = 0; m < M; ++m) {
      query_out[g].push_back(encode_query(model_, p.queries[m]));
      u_rows.push_back(as_row(query_embedding(params, query_out[g].back())));
    }
    title_out[g] = encode_title(model_, p.title);
    image_out[g] = encode_patches(model_, p.patches);
    v_rows.push_back(as_row(product_embedding(params, title_out[g], image_out[g]).v));
  }
  const Tensor U = ops::concat_rows(u_rows);
  const Tensor V = ops::concat_rows(v_rows);
  const Tensor sim = ops::matmul_nt(U, V);  // [N*M x N]

  std::array<Tensor, kNumLossComponents> parts;
  switch (cfg_.loss_mode) {
    case LossMode::kMake:
    case LossMode::kNoMa:
      parts[kKeQpm] = ke_qpm_batch_loss(sim, M, ids, freq_, cfg_.loss);
      break;
    case LossMode::kIbns:
      parts[kKeQpm] = qpm_loss_from_similarities(sim, cfg_.loss.tau);
      break;
    case LossMode::kNoKe: {
      std::vector<std::int64_t> targets(n * M);
      for (std::size_t r = 0; r < targets.size(); ++r) targets[r] = static_cast<std::int64_t>(r / M);
      parts[kKeQpm] = qpm_loss_from_similarities(sim, targets, cfg_.loss.tau);
      break;
    }
  }

  if (model_.cfg.with_fusion && w[kQpc] != 0) {
    // Hard negatives from the first query of each group; no extra encoder
    // passes.
    std::vector<Real> first(n * n);
    auto sv = sim.values();
    for (std::size_t g = 0; g < n; ++g)
      for (std::size_t j = 0; j < n; ++j) first[g * n + j] = sv[(g * M) * n + j];
    std::vector<std::uint8_t> positive(n * n);
    for (std::size_t g = 0; g < n; ++g)
      for (std::size_t j = 0; j < n; ++j) positive[g * n + j] = ids[g] == ids[j];
    const auto pairs = select_hard_negatives(Tensor({n, n}, std::move(first)), positive);
    std::vector<Tensor> pos_logits;
    std::vector<Tensor> neg_logits;
    auto logit = [&](std::size_t q, std::size_t p) {
      auto fused = modal_adapt(params, model_.cfg.fusion, query_out[q][0], title_out[p],
                               image_out[p]);
      return ops::reshape(qpc_logit(params, fused.joint_cls), {1, 1});
    };
    for (std::size_t g = 0; g < n; ++g) pos_logits.push_back(logit(g, g));
    for (const auto& [q, p] : pairs) neg_logits.push_back(logit(q, p));
    const Tensor pos = ops::concat_cols(pos_logits);
    const Tensor neg = neg_logits.empty() ? Tensor::zeros({0}) : ops::concat_cols(neg_logits);
    parts[kQpc] = qpc_loss_from_logits(pos, neg);
  }

  const std::size_t vocab = model_.vocab.size();
  if (w[kMlmQuery] != 0) {
    PooledLabels pooled;
    for (std::size_t g = 0; g < n; ++g) {
      const auto masked = apply_mlm_mask(prepared_[batch[g]].queries[0], vocab, cfg_.mlm_rate,
                                         derive_seed(cfg_.seed, {kMaskQueryStream, step, batch[g]}));
      auto out = encode_query(model_, masked);
      pooled.add(mlm_logits(params, TextTower::kQuery, out), masked.mlm_labels);
    }
    parts[kMlmQuery] = pooled.loss();
  }
  if (w[kMlmTitle] != 0) {
    PooledLabels pooled;
    for (std::size_t g = 0; g < n; ++g) {
      const auto masked = apply_mlm_mask(prepared_[batch[g]].title, vocab, cfg_.mlm_rate,
                                         derive_seed(cfg_.seed, {kMaskTitleStream, step, batch[g]}));
      auto out = encode_title(model_, masked);
      pooled.add(mlm_logits(params, TextTower::kTitle, out), masked.mlm_labels);
    }
    parts[kMlmTitle] = pooled.loss();
  }
  if (w[kMpm] != 0) {
    std::vector<Tensor> predicted;
    std::vector<Real> targets;
    const std::size_t d_img = model_.cfg.image.input_dim;
    for (std::size_t g = 0; g < n; ++g) {
      const auto masked = apply_mpm_mask(prepared_[batch[g]].patches, cfg_.mpm_rate,
                                         derive_seed(cfg_.seed, {kMaskPatchStream, step, batch[g]}));
      if (masked.masked_count() == 0) continue;
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < masked.num_patches; ++i) {
        if (!masked.mpm_mask[i]) continue;
        rows.push_back(i);
        auto t = std::span<const Real>(masked.mpm_targets).subspan(i * d_img, d_img);
        targets.insert(targets.end(), t.begin(), t.end());
      }
      predicted.push_back(
          ops::gather_rows(mpm_predictions(params, encode_patches(model_, masked)), rows));
    }
    if (predicted.empty()) {
      parts[kMpm] = Tensor::scalar(0);
    } else {
      const std::size_t rows = targets.size() / d_img;
      Tensor diff = ops::sub(ops::concat_rows(predicted), Tensor({rows, d_img}, std::move(targets)));
      parts[kMpm] = ops::mean(ops::mul(diff, diff));
    }
  }

  LossBreakdown breakdown;
  Tensor total = total_loss(parts, w, &breakdown);
  if (total.requires_grad()) total.backward();
  return breakdown;
}

LossBreakdown Trainer::step() {
  if (done()) throw ContractError("training already reached its final step");
  LossBreakdown losses = compute_gradients(step_);
  clip_gradients(model_.params, cfg_.clip_norm);
  adam_.step(model_.params, learning_rate());
  ++step_;
  return losses;
}

void Trainer::save_checkpoint(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  model_.vocab.save(dir / "vocab.txt");
  save_parameters(dir / "params", model_.params);
  adam_.save(dir / "optimizer");
  nlohmann::ordered_json state;
  state["format"] = "tritower-checkpoint";
  state["version"] = 1;
  state["step"] = step_;
  state["adam_updates"] = adam_.updates();
  state["total_steps"] = total_;
  // Randomness is a pure function of (seed, step, item), so the seed and the
  // step counter are the whole RNG state.
  state["rng"] = {{"seed", cfg_.seed}, {"next_step", step_}};
  state["config"] = to_config_map(cfg_);
  state["corpus_products"] = corpus_.size();
  state["patch_shape"] = {model_.cfg.image.max_len, model_.cfg.image.input_dim};
  std::ofstream os(dir / "state.json");
  if (!os) throw FormatError("cannot write " + (dir / "state.json").string());
  os << state.dump(2) << "\n";
}

namespace {

struct CheckpointState {
  TrainConfig cfg;
  std::size_t step = 0;
  std::size_t adam_updates = 0;
  std::size_t num_patches = 0;
  std::size_t patch_dim = 0;
};

CheckpointState read_state(const std::filesystem::path& dir) {
  std::ifstream is(dir / "state.json");
  if (!is) throw FormatError("cannot open " + (dir / "state.json").string());
  CheckpointState s;
  try {
    auto j = nlohmann::json::parse(is);
    if (j.at("format") != "tritower-checkpoint") throw FormatError("not a checkpoint state file");
    s.step = j.at("step");
    s.adam_updates = j.at("adam_updates");
    s.num_patches = j.at("patch_shape").at(0);
    s.patch_dim = j.at("patch_shape").at(1);
    apply_config(s.cfg, j.at("config").get<ConfigMap>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed checkpoint state: ") + e.what());
  }
  return s;
}

}  // namespace

Model load_model(const std::filesystem::path& checkpoint) {
  const CheckpointState s = read_state(checkpoint);
  Vocabulary vocab = Vocabulary::load(checkpoint / "vocab.txt");
  const auto mc = model_config(s.cfg, vocab.size(), s.num_patches, s.patch_dim);
  Model model = init_model(mc, std::move(vocab), derive_seed(s.cfg.seed, {kInitStream}));
  load_parameters(checkpoint / "params", model.params);
  return model;
}

Trainer Trainer::resume(const std::filesystem::path& checkpoint,
                        std::vector<ProductRecord> corpus) {
  const CheckpointState s = read_state(checkpoint);
  Trainer t(s.cfg, std::move(corpus), load_model(checkpoint));
  t.adam_.load(checkpoint / "optimizer", t.model_.params, s.adam_updates);
  t.step_ = s.step;
  return t;
}

std::string loss_csv_header() {
  std::string h = "step";
  for (const char* name : kLossComponentNames) h += std::string(",") + name;
  return h + ",total";
}

std::string loss_csv_row(std::size_t step, const LossBreakdown& losses) {
  std::string row = std::to_string(step);
  char buf[32];
  for (Real v : losses.values) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    row += buf;
  }
  std::snprintf(buf, sizeof buf, ",%.17g", losses.total);
  return row + buf;
}

}  // namespace tritower

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

// Command-line front end: synthetic data, training, export, indexing, search
// and evaluation.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tritower/datagen/generator.hpp"
#include "tritower/numcore/errors.hpp"
#include "tritower/pipeline/config.hpp"
#include "tritower/pipeline/serving.hpp"
#include "tritower/pipeline/trainer.hpp"

namespace fs = std::filesystem;
using namespace tritower;

namespace {

// Options shared by every subcommand.
struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void add_seed(CLI::App* app, Common& c, const std::string& help) {
  app->add_option("--seed", c.seed, help)->each([&c](const std::string&) {
    c.seed_given = true;
  });
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "key = value config file");
  app->add_option("--set", c.sets, "key=value override, repeatable");
  add_seed(app, c, "random seed, overrides the config");
}

// Config file first, then --set overrides in order.
ConfigMap collect(const Common& c) {
  ConfigMap values;
  if (!c.config.empty()) values = read_config_file(c.config);
  for (const auto& s : c.sets) {
    for (const auto& [k, v] : parse_config_text(s)) values[k] = v;
  }
  if (c.seed_given) values["seed"] = std::to_string(c.seed);
  return values;
}

std::vector<ProductRecord> load_corpus(const fs::path& data) {
  return read_corpus(fs::is_directory(data) ? data / "corpus.jsonl" : data);
}

int gen_data(const Common& c, const std::string& out) {
  GenConfig cfg;
  apply_gen_config(cfg, collect(c));
  const auto corpus = generate(cfg);
  write_generated(out, corpus);
  std::cout << "wrote " << corpus.products.size() << " products in "
            << corpus.categories.size() << " categories to " << out << "\n";
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string out;
  std::string resume;
  std::string loss_mode;
  std::size_t max_steps = 0;
  std::size_t until = 0;
  std::size_t log_every = 50;
  std::size_t checkpoint_every = 0;
};

int train(const Common& c, const TrainArgs& a) {
  auto corpus = load_corpus(a.data);
  const fs::path out = a.out;
  fs::create_directories(out);
  std::unique_ptr<Trainer> trainer;
  if (!a.resume.empty()) {
    trainer = std::make_unique<Trainer>(Trainer::resume(a.resume, std::move(corpus)));
  } else {
    TrainConfig cfg;
    apply_config(cfg, collect(c));
    if (!a.loss_mode.empty()) cfg.loss_mode = parse_loss_mode(a.loss_mode);
    if (a.max_steps > 0) cfg.max_steps = a.max_steps;
    auto vocab = build_vocabulary(corpus);
    trainer = std::make_unique<Trainer>(cfg, std::move(corpus), std::move(vocab));
  }
  const fs::path log_path = out / "loss.csv";
  const bool append = !a.resume.empty() && fs::exists(log_path);
  std::ofstream log(log_path, append ? std::ios::app : std::ios::trunc);
  if (!log) throw FormatError("cannot write " + log_path.string());
  if (!append) log << loss_csv_header() << "\n";
  std::cout << "training " << loss_mode_name(trainer->config().loss_mode) << " for "
            << trainer->total_steps() << " steps from step " << trainer->current_step() << "\n";
  while (!trainer->done() && (a.until == 0 || trainer->current_step() < a.until)) {
    const std::size_t s = trainer->current_step();
    const Real lr = trainer->learning_rate();
    const auto losses = trainer->step();
    log << loss_csv_row(s, losses) << "\n";
    if (a.log_every > 0 && (s % a.log_every == 0 || trainer->done())) {
      std::printf("step %zu  lr %.3g  total %.5f\n", s, lr, losses.total);
      std::fflush(stdout);
    }
    if (a.checkpoint_every > 0 && trainer->current_step() % a.checkpoint_every == 0) {
      log.flush();
      trainer->save_checkpoint(out);
    }
  }
  trainer->save_checkpoint(out);
  std::cout << "checkpoint written to " << out.string() << "\n";
  return 0;
}

struct ExportArgs {
  std::string checkpoint;
  std::string data;
  std::string out;
  std::string gates;
  std::string modality;
};

int export_cmd(const ExportArgs& a) {
  const Model model = load_model(a.checkpoint);
  const auto corpus = load_corpus(a.data);
  const auto table = export_embeddings(model, corpus);
  save_embeddings(a.out, table);
  if (!a.gates.empty()) write_gate_csv(a.gates, gates_by_category(corpus, table));
  if (!a.modality.empty()) {
    write_modality_csv(a.modality, modality_attention_by_category(model, corpus));
  }
  std::cout << "exported " << table.ids.size() << " embeddings of dim " << table.dim << "\n";
  return 0;
}

struct IndexArgs {
  std::string embeddings;
  std::string out;
  HCConfig hc;
};

int build_index_cmd(const Common& c, IndexArgs a) {
  if (c.seed_given) a.hc.seed = c.seed;
  const auto table = load_embeddings(a.embeddings);
  const HCIndex index = build_index(table, a.hc);
  index.save(a.out);
  std::cout << "indexed " << index.size() << " products (B=" << index.branching()
            << ", D=" << index.depth() << ", " << index.nodes().size() << " nodes)\n";
  return 0;
}

struct SearchArgs {
  std::string checkpoint;
  std::string index;
  std::vector<std::string> queries;
  SearchParams params;
};

int search_cmd(const SearchArgs& a) {
  const Model model = load_model(a.checkpoint);
  const HCIndex index = HCIndex::load(a.index);
  std::cout << "query\trank\tproduct_id\tscore\n";
  for (const auto& q : a.queries) {
    const auto u = embed_query(model, q);
    const auto result = index.search(u.values(), a.params);
    for (std::size_t r = 0; r < result.hits.size(); ++r) {
      std::printf("%s\t%zu\t%llu\t%.6f\n", q.c_str(), r + 1,
                  static_cast<unsigned long long>(result.hits[r].product_id),
                  result.hits[r].score);
    }
    if (result.short_result) std::cerr << "warning: fewer than " << a.params.k
                                       << " candidates for '" << q << "'\n";
  }
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string index;
  std::string embeddings;
  std::string report;
  std::string rows;
  SearchParams params;
  std::vector<std::size_t> ks{1, 10};
};

int eval_cmd(const EvalArgs& a) {
  const Model model = load_model(a.checkpoint);
  const auto corpus = load_corpus(a.data);
  Retriever retrieve;
  HCIndex index;
  EmbeddingTable table;
  if (!a.index.empty()) {
    index = HCIndex::load(a.index);
    retrieve = [&](std::span<const Real> u) { return index.search(u, a.params).hits; };
  } else {
    table = a.embeddings.empty() ? export_embeddings(model, corpus) : load_embeddings(a.embeddings);
    retrieve = [&](std::span<const Real> u) {
      return brute_force(table.ids, table.values, table.dim, u, a.params.k);
    };
  }
  const auto records = retrieval_records(model, corpus, retrieve);
  const auto oracle = corpus_oracle(corpus);
  const EvalReport report = evaluate(records, oracle, a.ks);
  std::cout << report_json(report);
  if (!a.report.empty()) write_report(a.report, report);
  if (!a.rows.empty()) write_row_diagnostics(a.rows, records, oracle, a.ks);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tritower: query/title/image retrieval toolkit"};
  app.require_subcommand(1);

  Common gen_common;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic corpus");
  add_common(gen, gen_common);
  gen->add_option("--out", gen_out, "output directory")->required();

  Common train_common;
  TrainArgs train_args;
  auto* tr = app.add_subcommand("train", "train a model and write a checkpoint");
  add_common(tr, train_common);
  tr->add_option("--data", train_args.data, "corpus directory or JSONL file")->required();
  tr->add_option("--out", train_args.out, "checkpoint directory")->required();
  tr->add_option("--resume", train_args.resume, "checkpoint directory to continue from");
  tr->add_option("--loss-mode", train_args.loss_mode, "make, ibns, no-ma or no-ke");
  tr->add_option("--max-steps", train_args.max_steps, "stop after this many steps");
  tr->add_option("--until", train_args.until,
                 "pause after this many completed steps; the schedule is unchanged");
  tr->add_option("--log-every", train_args.log_every, "progress line interval (0 = quiet)");
  tr->add_option("--checkpoint-every", train_args.checkpoint_every,
                 "save the checkpoint every N steps");

  Common export_common;
  ExportArgs export_args;
  auto* ex = app.add_subcommand("export-embeddings", "embed every product without queries");
  add_seed(ex, export_common, "accepted for uniform scripts; this stage is deterministic");
  ex->add_option("--checkpoint", export_args.checkpoint)->required();
  ex->add_option("--data", export_args.data, "corpus directory or JSONL file")->required();
  ex->add_option("--out", export_args.out, "output prefix (.json and .bin)")->required();
  ex->add_option("--gates", export_args.gates, "per-category gate weights CSV");
  ex->add_option("--modality", export_args.modality, "per-category fusion attention CSV");

  Common index_common;
  IndexArgs index_args;
  auto* bi = app.add_subcommand("build-index", "build the hierarchical clustering index");
  add_seed(bi, index_common, "k-means seeding seed");
  bi->add_option("--embeddings", index_args.embeddings, "embedding file prefix")->required();
  bi->add_option("--out", index_args.out, "index file")->required();
  bi->add_option("--branching", index_args.hc.branching, "children per node");
  bi->add_option("--depth", index_args.hc.depth, "tree depth");
  bi->add_option("--max-iters", index_args.hc.max_iters, "k-means iterations per node");

  Common search_common;
  SearchArgs search_args;
  auto* se = app.add_subcommand("search", "retrieve products for query texts");
  add_seed(se, search_common, "accepted for uniform scripts; this stage is deterministic");
  se->add_option("--checkpoint", search_args.checkpoint)->required();
  se->add_option("--index", search_args.index)->required();
  se->add_option("--query", search_args.queries, "query text, repeatable")->required();
  se->add_option("--topk", search_args.params.k, "results per query");
  se->add_option("--nprobe", search_args.params.nprobe, "children probed per node");

  Common eval_common;
  EvalArgs eval_args;
  auto* ev = app.add_subcommand("eval", "score retrieval for every corpus query");
  add_seed(ev, eval_common, "accepted for uniform scripts; this stage is deterministic");
  ev->add_option("--checkpoint", eval_args.checkpoint)->required();
  ev->add_option("--data", eval_args.data, "corpus directory or JSONL file")->required();
  ev->add_option("--index", eval_args.index, "search this index instead of exact search");
  ev->add_option("--embeddings", eval_args.embeddings, "exact search over this file");
  ev->add_option("--topk", eval_args.params.k, "retrieval set size");
  ev->add_option("--nprobe", eval_args.params.nprobe, "children probed per node");
  ev->add_option("--recall-k", eval_args.ks, "Recall@K cutoffs")->delimiter(',');
  ev->add_option("--report", eval_args.report, "JSON report path");
  ev->add_option("--rows", eval_args.rows, "per-query CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return gen_data(gen_common, gen_out);
    if (*tr) return train(train_common, train_args);
    if (*ex) return export_cmd(export_args);
    if (*bi) return build_index_cmd(index_common, index_args);
    if (*se) return search_cmd(search_args);
    if (*ev) return eval_cmd(eval_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

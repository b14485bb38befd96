// Copyright 2026 The dail-harness Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Per-sample methods and the experiment runner.
//
//   standard          one inference on the original text
//   dail (n >= 2)     n self-paraphrases + the original, majority vote
//   dail (n == 1)     the single paraphrase replaces the original, no vote
//   dail_cross        as dail, paraphrases read from a file made elsewhere
//   self_consistency  k sampled decodes of the original prompt, vote
//   prompt_ensemble   one inference per instruction variant, vote

#pragma once

#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dail/analysis.hpp"
#include "dail/augment.hpp"
#include "dail/core.hpp"
#include "dail/datasets.hpp"
#include "dail/digest.hpp"
#include "dail/prompting.hpp"
#include "dail/provider.hpp"
#include "dail/records.hpp"
#include "dail/templates.hpp"
#include "json.hpp"

namespace dail {

// ---------------------------------------------------------------------------
// Cross-model paraphrase files: one JSON object per line,
//   {"sample_id": "...", "paraphrases": ["...", ...], "requested_n": 4,
//    "shortfall": false, "error": null}
// Only sample_id and paraphrases are required when reading.
// ---------------------------------------------------------------------------

struct ParaphraseEntry {
  std::string sample_id;
  std::vector<std::string> paraphrases;
  std::size_t requested_n = 0;
  std::optional<std::string> error;
};

struct CrossParaphrases {
  std::map<std::string, std::vector<std::string>> by_sample;
  std::string digest;
};

inline CrossParaphrases load_cross_paraphrases(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  CrossParaphrases out;
  out.digest = sha256_hex(bytes);
  std::istringstream in(bytes);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.by_sample[j.at("sample_id").get<std::string>()] =
          j.at("paraphrases").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kMalformedRecord, path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline std::string paraphrase_entry_line(const ParaphraseEntry& e) {
  ojson j;
  j["sample_id"] = e.sample_id;
  j["paraphrases"] = e.paraphrases;
  j["requested_n"] = e.requested_n;
  j["shortfall"] = e.paraphrases.size() < e.requested_n;
  j["error"] = e.error ? ojson(*e.error) : ojson(nullptr);
  return j.dump();
}

// ---------------------------------------------------------------------------
// Run context
// ---------------------------------------------------------------------------

struct RunContext {
  const Dataset& dataset;
  Provider& provider;
  MethodConfig config;
  ModelParams model;
  PromptCatalog catalog;
  DemonstrationSet demos;
  TaskPrompt task;
  std::vector<TaskPrompt> variants;
  std::optional<CrossParaphrases> cross;
};

// Validates the config, fixes the demonstration set for the whole run, and
// loads whatever the method needs (variants, cross paraphrases).
inline RunContext make_context(const Dataset& dataset, Provider& provider, MethodConfig config,
                               ModelParams model = {}, PromptCatalog catalog = PromptCatalog::embedded()) {
  config = config.normalized();
  config.validate();
  RunContext ctx{dataset, provider, config, std::move(model), std::move(catalog), {}, {}, {}, {}};
  ctx.demos = select_demonstrations(dataset, config.per_label_demos, config.seed);
  ctx.task = canonical_task_prompt(ctx.catalog, dataset.task_family);
  if (config.method == Method::kPromptEnsemble) {
    ctx.variants = load_prompt_variants(ctx.catalog, dataset.name);
    if (ctx.variants.size() < 2) {
      throw Error(ErrorCode::kInvalidMethodConfig, "prompt_ensemble needs at least 2 variants");
    }
  }
  if (config.method == Method::kDailCross) ctx.cross = load_cross_paraphrases(*config.cross_paraphrase_source);
  return ctx;
}

namespace detail {

// Calls fn(i) for i in [0, total) on up to `workers` threads. The first
// exception stops further scheduling and is rethrown after all threads join.
template <typename Fn>
void for_each_index(std::size_t total, std::size_t workers, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr failure;
  std::mutex mu;
  const auto worker = [&] {
    while (!stop.load()) {
      const auto i = next.fetch_add(1);
      if (i >= total) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        stop.store(true);
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, total));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

inline CandidatePrediction infer_candidate(const RunContext& ctx, const TaskPrompt& task, const std::string& text,
                                           CandidateSource source, double temperature,
                                           std::uint32_t sample_index) {
  CompletionRequest req;
  req.model = ctx.model.model;
  req.top_p = ctx.model.top_p;
  req.max_tokens = ctx.model.max_tokens;
  req.temperature = temperature;
  req.sample_index = sample_index;
  req.messages = build_inference_prompt(task, ctx.dataset.space, ctx.demos, text);
  auto response = ctx.provider.complete(req);
  CandidatePrediction c;
  c.source = source;
  c.text = text;
  c.raw_output = std::move(response.text);
  c.label = normalize_label(c.raw_output, ctx.dataset.space);
  return c;
}

inline PredictionRecord start_record(const Sample& sample, Method method) {
  PredictionRecord r;
  r.sample_id = sample.id;
  r.method = method;
  r.gold_label = sample.gold_label;
  return r;
}

inline void finish_record(PredictionRecord& r, const LabelSpace& space) {
  r.vote = majority_vote(r.candidates, space);
  r.confidence = consistency_score(r.candidates, r.vote.winner);
  r.correct = r.vote.winner.in_space() && space[r.vote.winner.index()] == r.gold_label;
}

// Shared by dail and dail_cross: the paraphrases are given.
inline PredictionRecord vote_over_paraphrases(const Sample& sample, const RunContext& ctx, Method method,
                                              std::size_t requested_n, const std::vector<std::string>& paraphrases,
                                              std::vector<std::string> warnings, std::string provenance) {
  auto r = start_record(sample, method);
  r.warnings = std::move(warnings);
  r.paraphrase_source = std::move(provenance);
  const auto t = ctx.config.inference_temperature;
  if (requested_n == 1) {
    r.candidates.push_back(infer_candidate(ctx, ctx.task, paraphrases.at(0), CandidateSource::paraphrase(1), t, 0));
  } else {
    r.candidates.push_back(infer_candidate(ctx, ctx.task, sample.text, CandidateSource::original(), t, 0));
    for (std::size_t i = 0; i < paraphrases.size(); ++i) {
      r.candidates.push_back(
          infer_candidate(ctx, ctx.task, paraphrases[i], CandidateSource::paraphrase(i + 1), t, 0));
    }
  }
  finish_record(r, ctx.dataset.space);
  return r;
}

}  // namespace detail

inline PredictionRecord run_standard_icl(const Sample& sample, const RunContext& ctx) {
  auto r = detail::start_record(sample, Method::kStandard);
  r.candidates.push_back(detail::infer_candidate(ctx, ctx.task, sample.text, CandidateSource::original(),
                                                 ctx.config.inference_temperature, 0));
  detail::finish_record(r, ctx.dataset.space);
  return r;
}

// n == 0 is standard ICL; n == 1 infers on the paraphrase alone; n >= 2
// votes over the original plus every paraphrase that parsed.
inline PredictionRecord run_dail(const Sample& sample, const RunContext& ctx, std::size_t n) {
  if (n == 0) return run_standard_icl(sample, ctx);
  ParaphraseOptions opts{ctx.model, ctx.config.paraphrase_temperature};
  std::vector<std::string> warnings;
  std::vector<std::string> paraphrases;
  try {
    auto set = generate_paraphrases(sample, ctx.dataset.task_family, n, ctx.provider, opts, ctx.catalog);
    paraphrases = std::move(set.paraphrases);
    warnings = std::move(set.warnings);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoParaphrasesFound || n == 1) throw;
    warnings.push_back("paraphrase shortfall: got 0 of " + std::to_string(n));
  }
  return detail::vote_over_paraphrases(sample, ctx, Method::kDail, n, paraphrases, std::move(warnings), "self");
}

inline PredictionRecord run_dail_cross(const Sample& sample, const RunContext& ctx, const CrossParaphrases& source) {
  const auto it = source.by_sample.find(sample.id);
  if (it == source.by_sample.end() || (ctx.config.n_paraphrases == 1 && it->second.empty())) {
    throw Error(ErrorCode::kMissingParaphrases, "no paraphrases for sample '" + sample.id + "'");
  }
  const auto n = ctx.config.n_paraphrases;
  std::vector<std::string> paraphrases(it->second.begin(),
                                       it->second.begin() + static_cast<std::ptrdiff_t>(std::min(n, it->second.size())));
  std::vector<std::string> warnings;
  if (paraphrases.size() < n) {
    warnings.push_back("paraphrase shortfall: got " + std::to_string(paraphrases.size()) + " of " +
                       std::to_string(n));
  }
  return detail::vote_over_paraphrases(sample, ctx, Method::kDailCross, n, paraphrases, std::move(warnings),
                                       "cross:" + source.digest);
}

inline PredictionRecord run_self_consistency(const Sample& sample, const RunContext& ctx, std::size_t k,
                                             double temperature) {
  if (k < 2 || !(temperature > 0.0)) {
    throw Error(ErrorCode::kInvalidMethodConfig, "self_consistency needs k >= 2 and temperature > 0");
  }
  auto r = detail::start_record(sample, Method::kSelfConsistency);
  for (std::size_t i = 1; i <= k; ++i) {
    r.candidates.push_back(detail::infer_candidate(ctx, ctx.task, sample.text, CandidateSource::sampled_decode(i),
                                                   temperature, static_cast<std::uint32_t>(i)));
  }
  detail::finish_record(r, ctx.dataset.space);
  return r;
}

inline PredictionRecord run_prompt_ensemble(const Sample& sample, const RunContext& ctx,
                                            const std::vector<TaskPrompt>& variants) {
  if (variants.size() < 2) throw Error(ErrorCode::kInvalidMethodConfig, "prompt_ensemble needs >= 2 variants");
  auto r = detail::start_record(sample, Method::kPromptEnsemble);
  for (std::size_t i = 0; i < variants.size(); ++i) {
    r.candidates.push_back(detail::infer_candidate(ctx, variants[i], sample.text, CandidateSource::prompt_variant(i + 1),
                                                   ctx.config.inference_temperature, 0));
  }
  detail::finish_record(r, ctx.dataset.space);
  return r;
}

// Errors that stop the whole run instead of failing one sample.
inline bool aborts_run(ErrorCode code) {
  switch (code) {
    case ErrorCode::kAuthError:
    case ErrorCode::kConfigError:
    case ErrorCode::kInvalidMethodConfig:
    case ErrorCode::kInvalidRequest:
    case ErrorCode::kIoError:
      return true;
    default:
      return false;
  }
}

// Dispatches on ctx.config.method. Per-sample failures become failed
// records with a warning.
inline PredictionRecord run_sample(const Sample& sample, const RunContext& ctx) {
  const auto& c = ctx.config;
  try {
    switch (c.method) {
      case Method::kStandard: return run_standard_icl(sample, ctx);
      case Method::kDail: return run_dail(sample, ctx, c.n_paraphrases);
      case Method::kDailCross: return run_dail_cross(sample, ctx, *ctx.cross);
      case Method::kSelfConsistency: return run_self_consistency(sample, ctx, c.k_samples, c.sc_temperature);
      case Method::kPromptEnsemble: return run_prompt_ensemble(sample, ctx, ctx.variants);
    }
  } catch (const Error& e) {
    if (aborts_run(e.code())) throw;
    auto r = detail::start_record(sample, c.method);
    r.failed = true;
    r.vote.tally.assign(ctx.dataset.space.size(), 0);
    r.warnings.push_back(std::string("sample failed: ") + e.what());
    return r;
  }
  return {};
}

// Every prompt that can be built before any model call: paraphrase requests
// for DAIL, inference prompts on the original text for the rest.
inline std::vector<std::string> plan_prompts(const RunContext& ctx) {
  std::vector<std::string> prompts;
  for (const auto& s : ctx.dataset.test) {
    switch (ctx.config.method) {
      case Method::kDail:
        prompts.push_back(build_paraphrase_prompt(ctx.catalog, ctx.dataset.task_family, ctx.config.n_paraphrases, s.text));
        if (ctx.config.n_paraphrases >= 2) {
          prompts.push_back(render_inference_prompt(ctx.task, ctx.dataset.space, ctx.demos, s.text));
        }
        break;
      case Method::kDailCross: {
        auto it = ctx.cross->by_sample.find(s.id);
        if (ctx.config.n_paraphrases >= 2) {
          prompts.push_back(render_inference_prompt(ctx.task, ctx.dataset.space, ctx.demos, s.text));
        }
        if (it != ctx.cross->by_sample.end()) {
          for (std::size_t i = 0; i < std::min(ctx.config.n_paraphrases, it->second.size()); ++i) {
            prompts.push_back(render_inference_prompt(ctx.task, ctx.dataset.space, ctx.demos, it->second[i]));
          }
        }
        break;
      }
      case Method::kPromptEnsemble:
        for (const auto& v : ctx.variants) {
          prompts.push_back(render_inference_prompt(v, ctx.dataset.space, ctx.demos, s.text));
        }
        break;
      default:
        prompts.push_back(render_inference_prompt(ctx.task, ctx.dataset.space, ctx.demos, s.text));
        break;
    }
  }
  return prompts;
}

struct RunOptions {
  std::size_t concurrency = 4;
  // Completed records are appended here as they finish.
  std::optional<std::filesystem::path> partial_records;
  std::string effective_config;
};

// Runs the configured method over the test split. Records come back in
// dataset order whatever order workers finish in.
inline RunManifest run_experiment(const RunContext& ctx, const RunOptions& options = {}) {
  RunManifest m;
  m.method = ctx.config;
  m.dataset_name = ctx.dataset.name;
  m.task_family = ctx.dataset.task_family;
  m.space = ctx.dataset.space;
  m.provider_id = ctx.provider.id();
  m.model = ctx.model;
  m.demos = ctx.demos;
  m.effective_config = options.effective_config;
  m.cross_source_digest = ctx.cross ? ctx.cross->digest : "";
  {
    std::string canonical;
    for (const auto& l : ctx.dataset.space.labels()) canonical += "label\t" + l + "\n";
    for (const auto* split : {&ctx.dataset.train, &ctx.dataset.test}) {
      for (const auto& s : *split) canonical += s.id + "\t" + s.text + "\t" + s.gold_label + "\n";
      canonical += "--\n";
    }
    m.dataset_digest = sha256_hex(canonical);
  }
  const auto family = std::string(to_string(template_family(ctx.dataset.task_family)));
  const auto hashes = ctx.catalog.hashes();
  const auto keep = [&](const std::string& key) {
    if (auto it = hashes.find(key); it != hashes.end()) m.template_hashes[key] = it->second;
  };
  keep("instruction/" + family);
  if (ctx.config.method == Method::kDail) keep("paraphrase/" + family);
  if (ctx.config.method == Method::kPromptEnsemble) keep("variants/" + fold_case(ctx.dataset.name));

  m.started_at = utc_timestamp();
  const auto before = ctx.provider.stats();

  const auto& test = ctx.dataset.test;
  std::vector<PredictionRecord> records(test.size());
  std::mutex mu;
  std::optional<std::ofstream> partial;
  if (options.partial_records) {
    if (options.partial_records->has_parent_path()) {
      std::filesystem::create_directories(options.partial_records->parent_path());
    }
    partial.emplace(*options.partial_records, std::ios::binary | std::ios::trunc);
  }
  detail::for_each_index(test.size(), options.concurrency, [&](std::size_t i) {
    records[i] = run_sample(test[i], ctx);
    if (partial) {
      std::lock_guard lock(mu);
      *partial << record_to_json(records[i], ctx.dataset.space).dump() << '\n';
      partial->flush();
    }
  });

  m.records = std::move(records);
  m.metrics = compute_metrics(m.records);
  m.finished_at = utc_timestamp();
  const auto after = ctx.provider.stats();
  m.stats = {after.requests - before.requests, after.cache_hits - before.cache_hits,
             after.network_calls - before.network_calls};
  return m;
}

// Paraphrases for every test sample, in dataset order. Samples whose
// generation fails get an entry carrying the error and no paraphrases.
inline std::vector<ParaphraseEntry> paraphrase_dataset(const Dataset& dataset, std::size_t n, Provider& provider,
                                                       const ParaphraseOptions& options,
                                                       const PromptCatalog& catalog = PromptCatalog::embedded(),
                                                       std::size_t concurrency = 4) {
  std::vector<ParaphraseEntry> entries(dataset.test.size());
  detail::for_each_index(dataset.test.size(), concurrency, [&](std::size_t i) {
    const auto& s = dataset.test[i];
    auto& e = entries[i];
    e.sample_id = s.id;
    e.requested_n = n;
    try {
      e.paraphrases = generate_paraphrases(s, dataset.task_family, n, provider, options, catalog).paraphrases;
    } catch (const Error& err) {
      if (aborts_run(err.code())) throw;
      e.error = err.what();
    }
  });
  return entries;
}

inline RunManifest run_experiment(const Dataset& dataset, const MethodConfig& config, Provider& provider,
                                  ModelParams model = {}, const RunOptions& options = {}) {
  const auto ctx = make_context(dataset, provider, config, std::move(model));
  return run_experiment(ctx, options);
}

}  // namespace dail

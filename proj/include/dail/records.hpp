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

// Method configuration, per-sample prediction records, run manifests, and
// their JSON form.
//
// Manifest schema (version 1):
//
//   {
//     "schema_version": 1,
//     "config": {
//       "method": {...MethodConfig...},
//       "dataset": {"name", "task_family", "digest", "label_space": [...]},
//       "provider_id", "model": {"model", "top_p", "max_tokens"},
//       "demonstrations": {"seed", "items": [{"text", "label"}]},
//       "template_hashes": {...}, "cross_source_digest", "effective_config"
//     },
//     "records": [...PredictionRecord...],
//     "metrics": {"total", "correct", "failed", "warnings", "accuracy": {"num","den","value"}},
//     "started_at", "finished_at",
//     "run_stats": {"requests", "cache_hits", "network_calls"}
//   }
//
// Timestamps and run_stats are volatile; everything else is reproducible
// from the config and the response cache.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dail/core.hpp"
#include "dail/datasets.hpp"
#include "dail/digest.hpp"
#include "dail/error.hpp"
#include "dail/provider.hpp"
#include "json.hpp"

namespace dail {

using ojson = nlohmann::ordered_json;

enum class Method { kStandard, kDail, kDailCross, kSelfConsistency, kPromptEnsemble };

constexpr std::string_view to_string(Method m) {
  switch (m) {
    case Method::kStandard: return "standard";
    case Method::kDail: return "dail";
    case Method::kDailCross: return "dail_cross";
    case Method::kSelfConsistency: return "self_consistency";
    case Method::kPromptEnsemble: return "prompt_ensemble";
  }
  return "standard";
}

inline std::optional<Method> parse_method(std::string_view s) {
  for (auto m : {Method::kStandard, Method::kDail, Method::kDailCross, Method::kSelfConsistency,
                 Method::kPromptEnsemble}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

struct MethodConfig {
  Method method = Method::kStandard;
  std::size_t n_paraphrases = 4;
  std::size_t k_samples = 5;
  double sc_temperature = 0.7;
  double inference_temperature = 0.0;
  double paraphrase_temperature = 1.0;
  std::size_t per_label_demos = 1;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> cross_paraphrase_source;

  // DAIL with zero paraphrases is standard ICL.
  MethodConfig normalized() const {
    auto c = *this;
    if (c.method == Method::kDail && c.n_paraphrases == 0) c.method = Method::kStandard;
    return c;
  }

  void validate() const {
    const auto fail = [](const std::string& why) { throw Error(ErrorCode::kInvalidMethodConfig, why); };
    switch (method) {
      case Method::kDail:
      case Method::kDailCross:
        if (n_paraphrases < 1) fail(std::string(to_string(method)) + " needs n_paraphrases >= 1");
        if (method == Method::kDailCross && !cross_paraphrase_source) {
          fail("dail_cross needs a cross paraphrase source file");
        }
        break;
      case Method::kSelfConsistency:
        if (k_samples < 2) fail("self_consistency needs k_samples >= 2");
        if (!(sc_temperature > 0.0)) fail("self_consistency needs sc_temperature > 0");
        break;
      default:
        break;
    }
    if (inference_temperature < 0.0 || paraphrase_temperature < 0.0) fail("negative temperature");
  }

  // "standard", "dail-4", "dail_cross-4", "self_consistency-5", "prompt_ensemble".
  std::string label() const {
    std::string out(to_string(method));
    if (method == Method::kDail || method == Method::kDailCross) out += "-" + std::to_string(n_paraphrases);
    if (method == Method::kSelfConsistency) out += "-" + std::to_string(k_samples);
    return out;
  }

  bool operator==(const MethodConfig&) const = default;
};

struct PredictionRecord {
  std::string sample_id;
  Method method = Method::kStandard;
  std::vector<CandidatePrediction> candidates;
  VoteResult vote;
  std::optional<ConfidenceScore> confidence;  // absent only for failed samples
  std::string gold_label;
  bool correct = false;
  bool failed = false;
  std::string paraphrase_source;  // "self", "cross:<sha256>", or empty
  std::vector<std::string> warnings;

  bool operator==(const PredictionRecord&) const = default;
};

struct Metrics {
  std::size_t total = 0;
  std::size_t correct = 0;
  std::size_t failed = 0;
  std::size_t warnings = 0;  // records carrying at least one warning
  Ratio accuracy{0, 1};

  bool operator==(const Metrics& o) const {
    return total == o.total && correct == o.correct && failed == o.failed && warnings == o.warnings &&
           accuracy.num == o.accuracy.num && accuracy.den == o.accuracy.den;
  }
};

struct RunStats {
  std::uint64_t requests = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t network_calls = 0;
};

struct RunManifest {
  static constexpr int kSchemaVersion = 1;

  MethodConfig method;
  std::string dataset_name;
  TaskFamily task_family = TaskFamily::kSentiment;
  std::string dataset_digest;
  LabelSpace space;
  std::string provider_id;
  ModelParams model;
  DemonstrationSet demos;
  std::map<std::string, std::string> template_hashes;
  std::string cross_source_digest;
  std::string effective_config;

  std::vector<PredictionRecord> records;
  Metrics metrics;

  std::string started_at;
  std::string finished_at;
  RunStats stats;
};

// Metrics as a pure function of records. Failed samples count as incorrect.
inline Metrics compute_metrics(const std::vector<PredictionRecord>& records) {
  Metrics m;
  m.total = records.size();
  for (const auto& r : records) {
    m.correct += r.correct ? 1 : 0;
    m.failed += r.failed ? 1 : 0;
    m.warnings += r.warnings.empty() ? 0 : 1;
  }
  m.accuracy = Ratio{m.correct, std::max<std::size_t>(m.total, 1)};
  return m;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline ojson ratio_to_json(const Ratio& r) {
  ojson j;
  j["num"] = r.num;
  j["den"] = r.den;
  j["value"] = r.value();
  return j;
}

inline Ratio ratio_from_json(const nlohmann::json& j) {
  Ratio r{j.at("num").get<std::uint64_t>(), j.at("den").get<std::uint64_t>()};
  if (r.den == 0) throw Error(ErrorCode::kManifestError, "zero denominator");
  return r;
}

inline ojson label_to_json(const PredictedLabel& l, const LabelSpace& space) {
  return l.in_space() ? ojson(space[l.index()]) : ojson(nullptr);
}

inline PredictedLabel label_from_json(const nlohmann::json& j, const LabelSpace& space) {
  if (j.is_null()) return PredictedLabel::unparseable();
  const auto s = j.get<std::string>();
  auto idx = space.index_of(s);
  if (!idx) throw Error(ErrorCode::kManifestError, "label '" + s + "' not in label space");
  return PredictedLabel::in_space(*idx);
}

inline ojson method_config_to_json(const MethodConfig& c) {
  ojson j;
  j["method"] = to_string(c.method);
  j["label"] = c.label();
  j["n_paraphrases"] = c.n_paraphrases;
  j["k_samples"] = c.k_samples;
  j["sc_temperature"] = c.sc_temperature;
  j["inference_temperature"] = c.inference_temperature;
  j["paraphrase_temperature"] = c.paraphrase_temperature;
  j["per_label_demos"] = c.per_label_demos;
  j["seed"] = c.seed;
  j["cross_paraphrase_source"] =
      c.cross_paraphrase_source ? ojson(c.cross_paraphrase_source->string()) : ojson(nullptr);
  return j;
}

inline MethodConfig method_config_from_json(const nlohmann::json& j) {
  MethodConfig c;
  const auto m = parse_method(j.at("method").get<std::string>());
  if (!m) throw Error(ErrorCode::kManifestError, "unknown method " + j.at("method").dump());
  c.method = *m;
  c.n_paraphrases = j.at("n_paraphrases");
  c.k_samples = j.at("k_samples");
  c.sc_temperature = j.at("sc_temperature");
  c.inference_temperature = j.at("inference_temperature");
  c.paraphrase_temperature = j.at("paraphrase_temperature");
  c.per_label_demos = j.at("per_label_demos");
  c.seed = j.at("seed");
  if (const auto& src = j.at("cross_paraphrase_source"); !src.is_null()) {
    c.cross_paraphrase_source = src.get<std::string>();
  }
  return c;
}

inline ojson record_to_json(const PredictionRecord& r, const LabelSpace& space) {
  ojson j;
  j["sample_id"] = r.sample_id;
  j["method"] = to_string(r.method);
  j["gold_label"] = r.gold_label;
  j["correct"] = r.correct;
  j["failed"] = r.failed;
  j["candidates"] = ojson::array();
  for (const auto& c : r.candidates) {
    ojson cj;
    cj["source"] = to_string(c.source.kind);
    cj["index"] = c.source.index;
    cj["text"] = c.text;
    cj["raw_output"] = c.raw_output;
    cj["label"] = label_to_json(c.label, space);
    j["candidates"].push_back(std::move(cj));
  }
  ojson vote;
  vote["winner"] = label_to_json(r.vote.winner, space);
  ojson tally = ojson::object();
  for (std::size_t i = 0; i < r.vote.tally.size(); ++i) tally[space[i]] = r.vote.tally[i];
  vote["tally"] = std::move(tally);
  vote["unparseable"] = r.vote.unparseable;
  vote["tie_broken"] = r.vote.tie_broken;
  j["vote"] = std::move(vote);
  j["confidence"] = r.confidence ? ratio_to_json(*r.confidence) : ojson(nullptr);
  j["paraphrase_source"] = r.paraphrase_source;
  j["warnings"] = r.warnings;
  return j;
}

inline PredictionRecord record_from_json(const nlohmann::json& j, const LabelSpace& space) {
  PredictionRecord r;
  r.sample_id = j.at("sample_id").get<std::string>();
  const auto m = parse_method(j.at("method").get<std::string>());
  if (!m) throw Error(ErrorCode::kManifestError, "unknown method");
  r.method = *m;
  r.gold_label = j.at("gold_label").get<std::string>();
  r.correct = j.at("correct").get<bool>();
  r.failed = j.at("failed").get<bool>();
  for (const auto& cj : j.at("candidates")) {
    CandidatePrediction c;
    const auto kind = parse_source_kind(cj.at("source").get<std::string>());
    if (!kind) throw Error(ErrorCode::kManifestError, "unknown candidate source");
    c.source = {*kind, cj.at("index").get<std::size_t>()};
    c.text = cj.at("text").get<std::string>();
    c.raw_output = cj.at("raw_output").get<std::string>();
    c.label = label_from_json(cj.at("label"), space);
    r.candidates.push_back(std::move(c));
  }
  const auto& vote = j.at("vote");
  r.vote.winner = label_from_json(vote.at("winner"), space);
  r.vote.tally.assign(space.size(), 0);
  for (const auto& [label, count] : vote.at("tally").items()) {
    auto idx = space.index_of(label);
    if (!idx) throw Error(ErrorCode::kManifestError, "tally label '" + label + "' not in label space");
    r.vote.tally[*idx] = count.get<std::size_t>();
  }
  r.vote.unparseable = vote.at("unparseable").get<std::size_t>();
  r.vote.tie_broken = vote.at("tie_broken").get<bool>();
  if (const auto& c = j.at("confidence"); !c.is_null()) r.confidence = ratio_from_json(c);
  r.paraphrase_source = j.value("paraphrase_source", "");
  r.warnings = j.at("warnings").get<std::vector<std::string>>();

  // Internal consistency.
  if (!r.failed) {
    if (r.vote.total() != r.candidates.size()) {
      throw Error(ErrorCode::kManifestError, "tally does not sum to candidate count");
    }
    if (!r.confidence) throw Error(ErrorCode::kManifestError, "missing confidence");
  }
  const bool should_be_correct = r.vote.winner.in_space() && space[r.vote.winner.index()] == r.gold_label;
  if (r.correct != should_be_correct) throw Error(ErrorCode::kManifestError, "'correct' disagrees with vote");
  return r;
}

inline ojson metrics_to_json(const Metrics& m) {
  ojson j;
  j["total"] = m.total;
  j["correct"] = m.correct;
  j["failed"] = m.failed;
  j["warnings"] = m.warnings;
  j["accuracy"] = ratio_to_json(m.accuracy);
  return j;
}

inline Metrics metrics_from_json(const nlohmann::json& j) {
  Metrics m;
  m.total = j.at("total");
  m.correct = j.at("correct");
  m.failed = j.at("failed");
  m.warnings = j.at("warnings");
  m.accuracy = ratio_from_json(j.at("accuracy"));
  return m;
}

inline ojson manifest_config_to_json(const RunManifest& m) {
  ojson c;
  c["method"] = method_config_to_json(m.method);
  ojson ds;
  ds["name"] = m.dataset_name;
  ds["task_family"] = to_string(m.task_family);
  ds["digest"] = m.dataset_digest;
  ds["label_space"] = m.space.labels();
  c["dataset"] = std::move(ds);
  c["provider_id"] = m.provider_id;
  ojson model;
  model["model"] = m.model.model;
  model["top_p"] = m.model.top_p;
  model["max_tokens"] = m.model.max_tokens;
  c["model"] = std::move(model);
  ojson demos;
  demos["seed"] = m.demos.seed;
  demos["items"] = ojson::array();
  for (const auto& d : m.demos.items) {
    ojson dj;
    dj["text"] = d.text;
    dj["label"] = d.label;
    demos["items"].push_back(std::move(dj));
  }
  c["demonstrations"] = std::move(demos);
  c["template_hashes"] = m.template_hashes;
  c["cross_source_digest"] = m.cross_source_digest;
  c["effective_config"] = m.effective_config;
  return c;
}

inline ojson manifest_to_json(const RunManifest& m) {
  ojson j;
  j["schema_version"] = RunManifest::kSchemaVersion;
  j["config"] = manifest_config_to_json(m);
  j["records"] = ojson::array();
  for (const auto& r : m.records) j["records"].push_back(record_to_json(r, m.space));
  j["metrics"] = metrics_to_json(m.metrics);
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  ojson stats;
  stats["requests"] = m.stats.requests;
  stats["cache_hits"] = m.stats.cache_hits;
  stats["network_calls"] = m.stats.network_calls;
  j["run_stats"] = std::move(stats);
  return j;
}

// Parses and checks a manifest: record structure, method agreement with the
// config, and metrics against a recomputation from the records. Errors name
// the offending record index.
inline RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    if (j.at("schema_version").get<int>() != RunManifest::kSchemaVersion) {
      throw Error(ErrorCode::kManifestError, "unsupported schema_version " + j.at("schema_version").dump());
    }
    const auto& c = j.at("config");
    m.method = method_config_from_json(c.at("method"));
    const auto& ds = c.at("dataset");
    m.dataset_name = ds.at("name");
    m.task_family = parse_task_family(ds.at("task_family").get<std::string>());
    m.dataset_digest = ds.at("digest");
    m.space = LabelSpace(ds.at("label_space").get<std::vector<std::string>>());
    m.provider_id = c.at("provider_id");
    m.model.model = c.at("model").at("model");
    m.model.top_p = c.at("model").at("top_p");
    m.model.max_tokens = c.at("model").at("max_tokens");
    m.demos.seed = c.at("demonstrations").at("seed");
    for (const auto& d : c.at("demonstrations").at("items")) {
      m.demos.items.push_back({d.at("text"), d.at("label")});
    }
    m.template_hashes = c.at("template_hashes").get<std::map<std::string, std::string>>();
    m.cross_source_digest = c.at("cross_source_digest");
    m.effective_config = c.at("effective_config");
    m.metrics = metrics_from_json(j.at("metrics"));
    m.started_at = j.value("started_at", "");
    m.finished_at = j.value("finished_at", "");
    if (j.contains("run_stats")) {
      const auto& s = j.at("run_stats");
      m.stats = {s.at("requests"), s.at("cache_hits"), s.at("network_calls")};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kManifestError, std::string("manifest header: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kManifestError) throw;
    throw Error(ErrorCode::kManifestError, std::string("manifest header: ") + e.what());
  }

  const auto& records = j.at("records");
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto where = "record " + std::to_string(i);
    try {
      auto r = record_from_json(records[i], m.space);
      if (r.method != m.method.method) {
        throw Error(ErrorCode::kManifestError, "method '" + std::string(to_string(r.method)) +
                                                   "' differs from config method");
      }
      m.records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kManifestError, where + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::kManifestError,
                  where + ": " + (e.code() == ErrorCode::kManifestError ? e.detail() : std::string(e.what())));
    }
  }
  if (!(compute_metrics(m.records) == m.metrics)) {
    throw Error(ErrorCode::kManifestError, "stored metrics differ from metrics recomputed from records");
  }
  return m;
}

inline void save_manifest(const RunManifest& m, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp);
    out << manifest_to_json(m).dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

inline RunManifest load_manifest(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kManifestError, path.string() + ": " + e.what());
  }
  try {
    return manifest_from_json(j);
  } catch (const Error& e) {
    throw Error(ErrorCode::kManifestError, path.string() + ": " + e.detail());
  }
}

// Equality of everything reproducible: config, records, metrics. Timestamps
// and run stats are ignored.
inline bool same_content(const RunManifest& a, const RunManifest& b) {
  auto ja = manifest_to_json(a);
  auto jb = manifest_to_json(b);
  for (auto* j : {&ja, &jb}) {
    j->erase("started_at");
    j->erase("finished_at");
    j->erase("run_stats");
  }
  return ja == jb;
}

}  // namespace dail

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

// Classification datasets in the canonical line-delimited JSON layout:
//
//   {"id": "17", "text": "...", "label": "Negative", "split": "test"}
//
// `id` is optional (the 1-based line number is used instead) and `split`
// defaults to "test". A label-order file (one label per line) may be given
// explicitly or placed next to the dataset as `<file>.labels`.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dail/core.hpp"
#include "dail/digest.hpp"
#include "dail/error.hpp"
#include "json.hpp"

namespace dail {

enum class TaskFamily { kSentiment, kEmotion, kQuestion, kNews, kTopic };

constexpr std::string_view to_string(TaskFamily f) {
  switch (f) {
    case TaskFamily::kSentiment: return "sentiment";
    case TaskFamily::kEmotion: return "emotion";
    case TaskFamily::kQuestion: return "question";
    case TaskFamily::kNews: return "news";
    case TaskFamily::kTopic: return "topic";
  }
  return "sentiment";
}

inline TaskFamily parse_task_family(std::string_view s) {
  for (auto f : {TaskFamily::kSentiment, TaskFamily::kEmotion, TaskFamily::kQuestion,
                 TaskFamily::kNews, TaskFamily::kTopic}) {
    if (iequals(to_string(f), s)) return f;
  }
  throw Error(ErrorCode::kUnknownTaskFamily, "unknown task family '" + std::string(s) + "'");
}

struct Sample {
  std::string id;
  std::string text;
  std::string gold_label;

  bool operator==(const Sample&) const = default;
};

struct Dataset {
  std::string name;
  TaskFamily task_family = TaskFamily::kSentiment;
  std::vector<Sample> train;
  std::vector<Sample> test;
  LabelSpace space;

  bool operator==(const Dataset&) const = default;
};

struct Demonstration {
  std::string text;
  std::string label;

  bool operator==(const Demonstration&) const = default;
};

struct DemonstrationSet {
  std::vector<Demonstration> items;
  std::uint64_t seed = 0;

  bool operator==(const DemonstrationSet&) const = default;
};

struct DatasetFormat {
  std::string name;  // defaults to the file stem
  TaskFamily task_family = TaskFamily::kSentiment;
  std::optional<std::filesystem::path> label_file;
  std::string id_field = "id";
  std::string text_field = "text";
  std::string label_field = "label";
  std::string split_field = "split";
  // Raw label -> canonical label, applied before validation (e.g. "0" -> "negative").
  std::map<std::string, std::string> label_map;
};

// Seeded generator whose output is fixed across standard library
// implementations: std::mt19937_64 is fully specified, the distributions are
// not, so bounded draws are done here by rejection.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

namespace detail {

inline std::string json_scalar_to_string(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  return {};
}

inline std::vector<std::string> read_label_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open label file " + path.string());
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (!t.empty()) labels.emplace_back(t);
  }
  return labels;
}

}  // namespace detail

// Distinct labels in first-appearance order, unless `explicit_order` is given.
inline LabelSpace infer_label_space(std::span<const std::string> labels,
                                    const std::optional<std::vector<std::string>>& explicit_order = {}) {
  if (explicit_order) return LabelSpace(*explicit_order);
  std::vector<std::string> distinct;
  for (const auto& l : labels) {
    const bool seen = std::any_of(distinct.begin(), distinct.end(),
                                  [&](const std::string& d) { return iequals(d, l); });
    if (!seen) distinct.push_back(l);
  }
  if (distinct.size() < 2) {
    throw Error(ErrorCode::kSingleLabelDataset,
                distinct.empty() ? "no labelled records" : "every record has label '" + distinct[0] + "'");
  }
  return LabelSpace(std::move(distinct));
}

inline Dataset load_dataset(const std::filesystem::path& path, const DatasetFormat& format = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open dataset " + path.string());

  struct Raw {
    Sample sample;
    bool train = false;
    std::size_t line = 0;
  };
  std::vector<Raw> raws;
  std::set<std::string> train_ids, test_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto where = "line " + std::to_string(line_no);
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kMalformedRecord, where + ": " + e.what());
    }
    if (!rec.is_object()) throw Error(ErrorCode::kMalformedRecord, where + ": not an object");

    Raw raw;
    raw.line = line_no;
    if (auto it = rec.find(format.id_field); it != rec.end()) {
      raw.sample.id = detail::json_scalar_to_string(*it);
      if (raw.sample.id.empty()) throw Error(ErrorCode::kMalformedRecord, where + ": bad id");
    } else {
      raw.sample.id = std::to_string(line_no);
    }
    auto text = rec.find(format.text_field);
    if (text == rec.end() || !text->is_string() || trim(text->get<std::string>()).empty()) {
      throw Error(ErrorCode::kMalformedRecord, where + ": missing or empty '" + format.text_field + "'");
    }
    raw.sample.text = std::string(trim(text->get<std::string>()));
    auto label = rec.find(format.label_field);
    if (label == rec.end()) {
      throw Error(ErrorCode::kMalformedRecord, where + ": missing '" + format.label_field + "'");
    }
    raw.sample.gold_label = std::string(trim(detail::json_scalar_to_string(*label)));
    if (auto m = format.label_map.find(raw.sample.gold_label); m != format.label_map.end()) {
      raw.sample.gold_label = m->second;
    }
    if (raw.sample.gold_label.empty()) {
      throw Error(ErrorCode::kMalformedRecord, where + ": empty label");
    }
    if (auto split = rec.find(format.split_field); split != rec.end()) {
      const auto s = split->is_string() ? split->get<std::string>() : std::string();
      if (s == "train") {
        raw.train = true;
      } else if (s != "test") {
        throw Error(ErrorCode::kMalformedRecord, where + ": split must be 'train' or 'test'");
      }
    }
    auto& ids = raw.train ? train_ids : test_ids;
    if (!ids.insert(raw.sample.id).second) {
      throw Error(ErrorCode::kMalformedRecord, where + ": duplicate id '" + raw.sample.id + "'");
    }
    raws.push_back(std::move(raw));
  }

  std::optional<std::vector<std::string>> explicit_order;
  auto label_file = format.label_file;
  if (!label_file) {
    auto sidecar = path;
    sidecar += ".labels";
    if (std::filesystem::exists(sidecar)) label_file = sidecar;
  }
  if (label_file) explicit_order = detail::read_label_file(*label_file);

  std::vector<std::string> seen;
  seen.reserve(raws.size());
  for (const auto& r : raws) seen.push_back(r.sample.gold_label);

  Dataset ds;
  ds.name = format.name.empty() ? path.stem().string() : format.name;
  ds.task_family = format.task_family;
  ds.space = infer_label_space(seen, explicit_order);
  for (auto& r : raws) {
    const auto idx = ds.space.index_of(r.sample.gold_label);
    if (!idx) {
      throw Error(ErrorCode::kUnknownLabel,
                  "line " + std::to_string(r.line) + ": label '" + r.sample.gold_label + "'");
    }
    r.sample.gold_label = ds.space[*idx];
    (r.train ? ds.train : ds.test).push_back(std::move(r.sample));
  }
  if (ds.test.empty()) throw Error(ErrorCode::kEmptySplit, "no test records in " + path.string());
  return ds;
}

// Writes `ds` in canonical form plus the `<file>.labels` sidecar, so that
// load_dataset(path) reproduces it exactly.
inline void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  const auto emit = [&](const Sample& s, std::string_view split) {
    nlohmann::ordered_json j;
    j["id"] = s.id;
    j["text"] = s.text;
    j["label"] = s.gold_label;
    j["split"] = split;
    out << j.dump() << '\n';
  };
  for (const auto& s : ds.train) emit(s, "train");
  for (const auto& s : ds.test) emit(s, "test");

  auto sidecar = path;
  sidecar += ".labels";
  std::ofstream labels(sidecar, std::ios::binary | std::ios::trunc);
  if (!labels) throw Error(ErrorCode::kIoError, "cannot write " + sidecar.string());
  for (const auto& l : ds.space.labels()) labels << l << '\n';
}

// Picks `per_label` training samples per label uniformly at random, then
// shuffles the picked items into presentation order. Same inputs, same output.
inline DemonstrationSet select_demonstrations(const Dataset& ds, std::size_t per_label,
                                              std::uint64_t seed) {
  DemonstrationSet out;
  out.seed = seed;
  if (per_label == 0) return out;

  SeededRng rng(seed);
  for (const auto& label : ds.space.labels()) {
    std::vector<const Sample*> pool;
    for (const auto& s : ds.train) {
      if (s.gold_label == label) pool.push_back(&s);
    }
    if (pool.size() < per_label) {
      throw Error(ErrorCode::kInsufficientTrainSamples,
                  "label '" + label + "' has " + std::to_string(pool.size()) +
                      " training samples, need " + std::to_string(per_label));
    }
    for (std::size_t i = 0; i < per_label; ++i) {
      std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
      out.items.push_back({pool[i]->text, pool[i]->gold_label});
    }
  }
  rng.shuffle(out.items);
  return out;
}

}  // namespace dail

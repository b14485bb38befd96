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

// Prompt fixtures: paraphrase templates and canonical inference instructions
// per task family, plus the hand-written prompt-ensemble variants per
// dataset. The embedded text is mirrored under fixtures/prompts/ and any
// entry can be replaced from a directory with the same layout:
//
//   <dir>/paraphrase/<family>.txt    one line, contains <Para-Num>
//   <dir>/instruction/<family>.txt   one line
//   <dir>/variants/<dataset>.txt     one variant per line
//
// The topic family reuses the question templates.

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dail/core.hpp"
#include "dail/datasets.hpp"
#include "dail/digest.hpp"
#include "dail/error.hpp"
#include "json.hpp"

namespace dail {

inline constexpr std::string_view kParaNumPlaceholder = "<Para-Num>";
inline constexpr std::string_view kLabelListLead = "please choose from ";

namespace fixtures {

inline constexpr std::string_view kParaphraseSentiment =
    "Please paraphrase this sentence <Para-Num> times without changing the original sentiment:";
inline constexpr std::string_view kParaphraseEmotion =
    "Please paraphrase this sentence <Para-Num> times without changing the original emotion:";
inline constexpr std::string_view kParaphraseQuestion =
    "Please paraphrase this question <Para-Num> times without changing the original semantic:";
inline constexpr std::string_view kParaphraseNews =
    "Please paraphrase this news <Para-Num> times without changing the original semantic:";

inline constexpr std::string_view kInstructionSentiment = "Label the sentiment class of the sentence";
inline constexpr std::string_view kInstructionEmotion = "Label the emotion class of the sentence";
inline constexpr std::string_view kInstructionQuestion = "Label the category of the question";
inline constexpr std::string_view kInstructionNews = "Label the category of the news";

// Wording kept verbatim, grammar included.
inline const std::vector<std::string>& sst5_variants() {
  static const std::vector<std::string> v = {
      "Label the sentiment class of the sentence.",
      "What is the sentiment expressed in this message?",
      "What sentiment does this message express?",
      "How will you feel about the message in terms of its sentiment?",
      "What sentiment does the writer express for the message?",
  };
  return v;
}

inline const std::vector<std::string>& trec_variants() {
  static const std::vector<std::string> v = {
      "Label the categories of the given question.",
      "What is the categories of the given question?",
      "What type of information does this question express?",
      "How will you feel about the question about its category?",
      "What type of information does the writer express for the question?",
  };
  return v;
}

inline const std::vector<std::string>& emotion_variants() {
  static const std::vector<std::string> v = {
      "Label the emotion class of the sentence.",
      "What is the emotion expressed in this message?",
      "What emotion does this message express?",
      "How will you feel about the message in terms of its emotion?",
      "What emotion does the writer express for the message?",
  };
  return v;
}

}  // namespace fixtures

// Family whose templates a family uses.
constexpr TaskFamily template_family(TaskFamily f) {
  return f == TaskFamily::kTopic ? TaskFamily::kQuestion : f;
}

class PromptCatalog {
 public:
  // Embedded fixtures only.
  static PromptCatalog embedded() {
    PromptCatalog c;
    c.paraphrase_[TaskFamily::kSentiment] = fixtures::kParaphraseSentiment;
    c.paraphrase_[TaskFamily::kEmotion] = fixtures::kParaphraseEmotion;
    c.paraphrase_[TaskFamily::kQuestion] = fixtures::kParaphraseQuestion;
    c.paraphrase_[TaskFamily::kNews] = fixtures::kParaphraseNews;
    c.instruction_[TaskFamily::kSentiment] = fixtures::kInstructionSentiment;
    c.instruction_[TaskFamily::kEmotion] = fixtures::kInstructionEmotion;
    c.instruction_[TaskFamily::kQuestion] = fixtures::kInstructionQuestion;
    c.instruction_[TaskFamily::kNews] = fixtures::kInstructionNews;
    c.variants_["sst5"] = fixtures::sst5_variants();
    c.variants_["trec"] = fixtures::trec_variants();
    c.variants_["emotion"] = fixtures::emotion_variants();
    return c;
  }

  // Embedded fixtures with any files found under `dir` taking precedence.
  static PromptCatalog with_overrides(const std::filesystem::path& dir) {
    auto c = embedded();
    namespace fs = std::filesystem;
    for (auto f : {TaskFamily::kSentiment, TaskFamily::kEmotion, TaskFamily::kQuestion,
                   TaskFamily::kNews}) {
      const auto name = std::string(to_string(f)) + ".txt";
      if (auto lines = read_lines(dir / "paraphrase" / name)) {
        if (lines->size() != 1 || lines->front().find(kParaNumPlaceholder) == std::string::npos) {
          throw Error(ErrorCode::kConfigError, "paraphrase template " + name + " must be one line with <Para-Num>");
        }
        c.paraphrase_[f] = lines->front();
      }
      if (auto lines = read_lines(dir / "instruction" / name)) {
        if (lines->size() != 1) throw Error(ErrorCode::kConfigError, "instruction " + name + " must be one line");
        c.instruction_[f] = lines->front();
      }
    }
    if (fs::is_directory(dir / "variants")) {
      for (const auto& entry : fs::directory_iterator(dir / "variants")) {
        if (entry.path().extension() != ".txt") continue;
        if (auto lines = read_lines(entry.path())) {
          c.variants_[fold_case(entry.path().stem().string())] = std::move(*lines);
        }
      }
    }
    return c;
  }

  const std::string& paraphrase_template(TaskFamily f) const {
    return paraphrase_.at(template_family(f));
  }

  const std::string& instruction(TaskFamily f) const { return instruction_.at(template_family(f)); }

  // Prompt variants keyed by case-insensitive dataset name.
  const std::vector<std::string>& variants(std::string_view dataset) const {
    auto it = variants_.find(fold_case(dataset));
    if (it == variants_.end()) {
      throw Error(ErrorCode::kMissingVariantFixture, "no prompt variants for dataset '" + std::string(dataset) + "'");
    }
    return it->second;
  }

  bool has_variants(std::string_view dataset) const { return variants_.count(fold_case(dataset)) > 0; }

  // SHA-256 of each fixture actually in use, keyed "paraphrase/<family>" etc.
  std::map<std::string, std::string> hashes() const {
    std::map<std::string, std::string> out;
    for (const auto& [f, t] : paraphrase_) out["paraphrase/" + std::string(to_string(f))] = sha256_hex(t);
    for (const auto& [f, t] : instruction_) out["instruction/" + std::string(to_string(f))] = sha256_hex(t);
    for (const auto& [d, v] : variants_) {
      std::string joined;
      for (const auto& line : v) joined += line + "\n";
      out["variants/" + d] = sha256_hex(joined);
    }
    return out;
  }

 private:
  static std::optional<std::vector<std::string>> read_lines(const std::filesystem::path& p) {
    if (!std::filesystem::is_regular_file(p)) return std::nullopt;
    std::ifstream in(p, std::ios::binary);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) lines.push_back(line);
    }
    return lines;
  }

  std::map<TaskFamily, std::string> paraphrase_;
  std::map<TaskFamily, std::string> instruction_;
  std::map<std::string, std::vector<std::string>> variants_;
};

}  // namespace dail

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

// Inference prompt construction and free-text -> label normalization.
//
// A rendered prompt is one user message:
//
//   <instruction>, please choose from A, B, C
//   Text: <demo text>
//   Label: <demo label>
//   ...
//   Text: <candidate>
//   Label:
//
// When the instruction already ends a sentence ("...message?"), the label
// list starts a new one: "<instruction> Please choose from A, B, C".

#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "dail/core.hpp"
#include "dail/datasets.hpp"
#include "dail/provider.hpp"
#include "dail/templates.hpp"

namespace dail {

struct TaskPrompt {
  std::string instruction;
  std::size_t variant_id = 0;  // 0 = canonical family instruction

  std::string label_rendering(const LabelSpace& space) const {
    std::string labels;
    for (std::size_t i = 0; i < space.size(); ++i) {
      if (i) labels += ", ";
      labels += space[i];
    }
    const char last = instruction.empty() ? '\0' : instruction.back();
    if (last == '.' || last == '?' || last == '!') {
      std::string lead(kLabelListLead);
      lead[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(lead[0])));
      return " " + lead + labels;
    }
    return ", " + std::string(kLabelListLead) + labels;
  }

  bool operator==(const TaskPrompt&) const = default;
};

inline TaskPrompt canonical_task_prompt(const PromptCatalog& catalog, TaskFamily family) {
  return {catalog.instruction(family), 0};
}

// Variants in fixture order, variant_id numbered from 1.
inline std::vector<TaskPrompt> load_prompt_variants(const PromptCatalog& catalog,
                                                    std::string_view dataset) {
  std::vector<TaskPrompt> out;
  const auto& lines = catalog.variants(dataset);
  for (std::size_t i = 0; i < lines.size(); ++i) out.push_back({lines[i], i + 1});
  return out;
}

inline std::string render_inference_prompt(const TaskPrompt& task, const LabelSpace& space,
                                           const DemonstrationSet& demos,
                                           std::string_view candidate_text) {
  std::string out = task.instruction + task.label_rendering(space);
  for (const auto& d : demos.items) {
    out += "\nText: " + d.text + "\nLabel: " + d.label;
  }
  out += "\nText: ";
  out += candidate_text;
  out += "\nLabel:";
  return out;
}

inline std::vector<Message> build_inference_prompt(const TaskPrompt& task, const LabelSpace& space,
                                                   const DemonstrationSet& demos,
                                                   std::string_view candidate_text) {
  if (trim(candidate_text).empty()) {
    throw Error(ErrorCode::kInvalidRequest, "candidate text is empty");
  }
  if (trim(task.instruction).empty()) {
    throw Error(ErrorCode::kInvalidRequest, "task instruction is empty");
  }
  return {Message{Role::kUser, render_inference_prompt(task, space, demos, candidate_text)}};
}

namespace detail {

inline std::string_view strip_decorations(std::string_view s) {
  constexpr std::string_view kTrailing = ".,!?;:\"'`*)]";
  constexpr std::string_view kLeading = "\"'`*([";
  s = trim(s);
  while (!s.empty() && kTrailing.find(s.back()) != std::string_view::npos) {
    s.remove_suffix(1);
    s = trim(s);
  }
  while (!s.empty() && kLeading.find(s.front()) != std::string_view::npos) {
    s.remove_prefix(1);
    s = trim(s);
  }
  return s;
}

}  // namespace detail

// Matching cascade: (1) exact, ignoring case, surrounding whitespace and
// trailing punctuation; (2) the same after dropping a leading "Label:";
// (3) exactly one label occurring as a substring. Anything else, including
// several substring hits, is Unparseable.
inline PredictedLabel normalize_label(std::string_view raw_output, const LabelSpace& space) {
  auto s = detail::strip_decorations(raw_output);
  if (auto idx = space.index_of(s)) return PredictedLabel::in_space(*idx);

  constexpr std::string_view kPrefix = "label:";
  if (s.size() >= kPrefix.size() && iequals(s.substr(0, kPrefix.size()), kPrefix)) {
    const auto rest = detail::strip_decorations(s.substr(kPrefix.size()));
    if (auto idx = space.index_of(rest)) return PredictedLabel::in_space(*idx);
  }

  const auto folded = fold_case(raw_output);
  std::optional<std::size_t> found;
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (folded.find(fold_case(space[i])) != std::string::npos) {
      if (found) return PredictedLabel::unparseable();
      found = i;
    }
  }
  return found ? PredictedLabel::in_space(*found) : PredictedLabel::unparseable();
}

}  // namespace dail

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

// Self-paraphrase augmentation of a test sample: one request asks the model
// for n rewrites, the reply is split into individual paraphrases.

#pragma once

#include <cctype>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dail/core.hpp"
#include "dail/datasets.hpp"
#include "dail/provider.hpp"
#include "dail/templates.hpp"

namespace dail {

struct ParaphraseSet {
  std::string original_id;
  std::vector<std::string> paraphrases;
  std::size_t requested_n = 0;
  std::string prompt_used;
  std::vector<std::string> warnings;

  bool shortfall() const { return paraphrases.size() < requested_n; }
};

inline std::string build_paraphrase_prompt(const PromptCatalog& catalog, TaskFamily family,
                                           std::size_t n, std::string_view text) {
  if (n == 0) throw Error(ErrorCode::kInvalidRequest, "paraphrase count must be >= 1");
  std::string prompt = catalog.paraphrase_template(family);
  const auto at = prompt.find(kParaNumPlaceholder);
  if (at != std::string::npos) prompt.replace(at, kParaNumPlaceholder.size(), std::to_string(n));
  prompt += '\n';
  prompt += text;
  return prompt;
}

inline std::string build_paraphrase_prompt(TaskFamily family, std::size_t n, std::string_view text) {
  return build_paraphrase_prompt(PromptCatalog::embedded(), family, n, text);
}

namespace detail {

// "12. text", "3) text", "4: text" -> "text"; nullopt if no enumerator.
inline std::optional<std::string_view> strip_enumerator(std::string_view line) {
  line = trim(line);
  std::size_t i = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i == 0 || i + 1 >= line.size()) return std::nullopt;
  if (line[i] != '.' && line[i] != ')' && line[i] != ':') return std::nullopt;
  if (line[i + 1] != ' ' && line[i + 1] != '\t') return std::nullopt;
  return trim(line.substr(i + 2));
}

inline std::string strip_quotes(std::string_view s) {
  s = trim(s);
  const auto wrapped = [&](std::string_view open, std::string_view close) {
    return s.size() >= open.size() + close.size() && s.substr(0, open.size()) == open &&
           s.substr(s.size() - close.size()) == close;
  };
  if (wrapped("\"", "\"") || wrapped("'", "'")) {
    s = trim(s.substr(1, s.size() - 2));
  } else if (wrapped("\xE2\x80\x9C", "\xE2\x80\x9D")) {  // curly double quotes
    s = trim(s.substr(3, s.size() - 6));
  }
  return std::string(s);
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    lines.push_back(text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return lines;
}

}  // namespace detail

// Enumerated lines ("1. ...") when present; otherwise every non-empty line
// that is not a lead-in ending in ':' (bullets stripped). At most
// requested_n items, in order.
inline std::vector<std::string> parse_paraphrase_response(std::string_view response,
                                                          std::size_t requested_n) {
  const auto lines = detail::split_lines(response);
  std::vector<std::string> out;
  for (auto line : lines) {
    if (auto body = detail::strip_enumerator(line)) {
      auto t = detail::strip_quotes(*body);
      if (!t.empty()) out.push_back(std::move(t));
    }
  }
  if (out.empty()) {
    for (auto line : lines) {
      auto t = trim(line);
      if (t.empty() || t.back() == ':') continue;
      for (std::string_view bullet : {"- ", "* ", "\xE2\x80\xA2 "}) {
        if (t.substr(0, bullet.size()) == bullet) {
          t = trim(t.substr(bullet.size()));
          break;
        }
      }
      auto s = detail::strip_quotes(t);
      if (!s.empty()) out.push_back(std::move(s));
    }
  }
  if (out.empty()) throw Error(ErrorCode::kNoParaphrasesFound, "no paraphrases in response");
  if (out.size() > requested_n) out.resize(requested_n);
  return out;
}

struct ParaphraseOptions {
  ModelParams model;
  double temperature = 1.0;
};

// One request for n paraphrases; if fewer than n parse, a second request
// with the next sample_index, keeping the better of the two. A shortfall is
// recorded as a warning rather than padded.
inline ParaphraseSet generate_paraphrases(const Sample& sample, TaskFamily family, std::size_t n,
                                          Provider& provider, const ParaphraseOptions& options,
                                          const PromptCatalog& catalog = PromptCatalog::embedded()) {
  ParaphraseSet set;
  set.original_id = sample.id;
  set.requested_n = n;
  set.prompt_used = build_paraphrase_prompt(catalog, family, n, sample.text);

  for (std::uint32_t attempt = 1; attempt <= 2 && set.paraphrases.size() < n; ++attempt) {
    CompletionRequest req;
    req.model = options.model.model;
    req.top_p = options.model.top_p;
    req.max_tokens = options.model.max_tokens;
    req.temperature = options.temperature;
    req.sample_index = attempt;
    req.messages = {Message{Role::kUser, set.prompt_used}};
    const auto response = provider.complete(req);
    try {
      auto parsed = parse_paraphrase_response(response.text, n);
      if (parsed.size() > set.paraphrases.size()) set.paraphrases = std::move(parsed);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoParaphrasesFound) throw;
    }
  }
  if (set.paraphrases.empty()) {
    throw Error(ErrorCode::kNoParaphrasesFound, "sample '" + sample.id + "': nothing parsed after retry");
  }
  if (set.shortfall()) {
    set.warnings.push_back("paraphrase shortfall: got " + std::to_string(set.paraphrases.size()) + " of " +
                           std::to_string(n));
  }
  return set;
}

}  // namespace dail

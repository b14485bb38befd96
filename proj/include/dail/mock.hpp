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

// Scripted, closed-world backend for offline runs and tests.
//
// Script file layout (JSON):
//
//   {"entries": [
//     {"match": "exact",     "pattern": "<whole prompt>", "response": "..."},
//     {"match": "substring", "pattern": "<fragment>",     "responses": ["A", "B"]}
//   ]}
//
// Matching is against the content of the request's last message. An exact
// match beats any substring match; among substring matches the longest
// pattern wins, then script order. A `responses` sequence serves successive
// sample_index values (0 and 1 both map to the first element); an index past
// the end is a miss.

#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dail/digest.hpp"
#include "dail/error.hpp"
#include "dail/provider.hpp"
#include "json.hpp"

namespace dail {

enum class MatchKind { kExact, kSubstring };

struct ScriptEntry {
  MatchKind kind = MatchKind::kExact;
  std::string pattern;
  std::vector<std::string> responses;

  static ScriptEntry exact(std::string pattern, std::string response) {
    return {MatchKind::kExact, std::move(pattern), {std::move(response)}};
  }
  static ScriptEntry substring(std::string pattern, std::string response) {
    return {MatchKind::kSubstring, std::move(pattern), {std::move(response)}};
  }
  static ScriptEntry sequence(MatchKind kind, std::string pattern, std::vector<std::string> rs) {
    return {kind, std::move(pattern), std::move(rs)};
  }
};

class MockBackend : public Backend {
 public:
  explicit MockBackend(std::vector<ScriptEntry> entries) : entries_(std::move(entries)) {
    std::set<std::pair<MatchKind, std::string>> seen;
    for (const auto& e : entries_) {
      if (e.responses.empty()) {
        throw Error(ErrorCode::kConfigError, "script entry '" + e.pattern + "' has no response");
      }
      if (!seen.emplace(e.kind, e.pattern).second) {
        throw Error(ErrorCode::kDuplicateMatcher, "pattern '" + e.pattern + "' scripted twice");
      }
    }
  }

  std::string id() const override { return "mock"; }

  std::string call(const CompletionRequest& request) override {
    calls_.fetch_add(1);
    const auto& target = request.last_content();
    const ScriptEntry* hit = nullptr;
    for (const auto& e : entries_) {
      if (e.kind == MatchKind::kExact && e.pattern == target) {
        hit = &e;
        break;
      }
    }
    if (!hit) {
      for (const auto& e : entries_) {
        if (e.kind == MatchKind::kSubstring && target.find(e.pattern) != std::string::npos &&
            (!hit || e.pattern.size() > hit->pattern.size())) {
          hit = &e;
        }
      }
    }
    if (!hit) throw Error(ErrorCode::kMockScriptMiss, "no script entry for: " + excerpt(target));
    const std::size_t slot = request.sample_index == 0 ? 0 : request.sample_index - 1;
    if (slot >= hit->responses.size()) {
      throw Error(ErrorCode::kMockScriptMiss,
                  "sample_index " + std::to_string(request.sample_index) + " past scripted sequence for: " +
                      excerpt(target));
    }
    return hit->responses[slot];
  }

  std::uint64_t calls() const { return calls_.load(); }

 private:
  static std::string excerpt(const std::string& s) {
    return s.size() <= 120 ? s : s.substr(0, 117) + "...";
  }

  std::vector<ScriptEntry> entries_;
  std::atomic<std::uint64_t> calls_{0};
};

inline std::shared_ptr<MockBackend> script_mock(std::vector<ScriptEntry> entries) {
  return std::make_shared<MockBackend>(std::move(entries));
}

inline std::vector<ScriptEntry> parse_mock_script(const nlohmann::json& doc) {
  std::vector<ScriptEntry> entries;
  try {
    for (const auto& e : doc.at("entries")) {
      ScriptEntry entry;
      const auto match = e.value("match", std::string("exact"));
      if (match == "exact") {
        entry.kind = MatchKind::kExact;
      } else if (match == "substring") {
        entry.kind = MatchKind::kSubstring;
      } else {
        throw Error(ErrorCode::kConfigError, "unknown match kind '" + match + "'");
      }
      entry.pattern = e.at("pattern").get<std::string>();
      if (e.contains("responses")) {
        entry.responses = e.at("responses").get<std::vector<std::string>>();
      } else {
        entry.responses.push_back(e.at("response").get<std::string>());
      }
      entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kConfigError, std::string("malformed mock script: ") + ex.what());
  }
  return entries;
}

// Accepts a script file, a directory holding `script.json`, or a path whose
// `.json` sibling exists.
inline std::filesystem::path resolve_mock_script(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) return path / "script.json";
  if (!std::filesystem::exists(path)) {
    auto with_ext = path;
    with_ext += ".json";
    if (std::filesystem::exists(with_ext)) return with_ext;
  }
  return path;
}

inline std::shared_ptr<MockBackend> load_mock(const std::filesystem::path& path) {
  const auto file = resolve_mock_script(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(file));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kConfigError, file.string() + ": " + e.what());
  }
  return script_mock(parse_mock_script(doc));
}

inline nlohmann::ordered_json to_json(const std::vector<ScriptEntry>& entries) {
  nlohmann::ordered_json out;
  out["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    nlohmann::ordered_json j;
    j["match"] = e.kind == MatchKind::kExact ? "exact" : "substring";
    j["pattern"] = e.pattern;
    if (e.responses.size() == 1) {
      j["response"] = e.responses.front();
    } else {
      j["responses"] = e.responses;
    }
    out["entries"].push_back(std::move(j));
  }
  return out;
}

}  // namespace dail

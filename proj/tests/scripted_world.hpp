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


// Scripted mock worlds for pipeline-level tests: a synthetic dataset plus a
// mock script whose answers are chosen per (sample, candidate).

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dail/augment.hpp"
#include "dail/mock.hpp"
#include "dail/pipeline.hpp"
#include "test_support.hpp"

namespace dail::testing {

inline std::string paraphrase_text(std::size_t sample, std::size_t j) {
  return "paraphrase " + std::to_string(j) + " of item " + std::to_string(sample);
}

inline std::string enumerate_paraphrases(std::size_t sample, std::size_t count) {
  std::string out = "Here are the paraphrases:\n";
  for (std::size_t j = 1; j <= count; ++j) out += std::to_string(j) + ". " + paraphrase_text(sample, j) + "\n";
  return out;
}

// answer(i, j) is the raw model output for sample i on candidate j, where
// j == 0 is the original text and j >= 1 the j-th paraphrase.
struct ScriptedWorld {
  Dataset dataset;
  std::vector<ScriptEntry> entries;
  std::size_t paraphrases_per_sample = 4;

  ScriptedWorld(Dataset ds, std::function<std::string(std::size_t, std::size_t)> answer,
                std::size_t paraphrases = 4)
      : dataset(std::move(ds)), paraphrases_per_sample(paraphrases) {
    const auto family = std::string(to_string(template_family(dataset.task_family)));
    for (std::size_t i = 0; i < dataset.test.size(); ++i) {
      const auto& text = dataset.test[i].text;
      entries.push_back(ScriptEntry::substring("Text: " + text + "\nLabel:", answer(i, 0)));
      const auto tmpl = PromptCatalog::embedded().paraphrase_template(dataset.task_family);
      const auto lead = tmpl.substr(tmpl.rfind(' ') + 1);  // "sentiment:", "semantic:", ...
      entries.push_back(ScriptEntry::substring(lead + "\n" + text, enumerate_paraphrases(i, paraphrases)));
      for (std::size_t j = 1; j <= paraphrases; ++j) {
        entries.push_back(ScriptEntry::substring("Text: " + paraphrase_text(i, j) + "\nLabel:", answer(i, j)));
      }
    }
  }

  // Replaces the response of the entry whose pattern is `pattern`.
  void override_response(const std::string& pattern, std::vector<std::string> responses) {
    for (auto& e : entries) {
      if (e.pattern == pattern) {
        e.responses = std::move(responses);
        return;
      }
    }
    entries.push_back(ScriptEntry::sequence(MatchKind::kSubstring, pattern, std::move(responses)));
  }

  std::shared_ptr<MockBackend> backend() const { return script_mock(entries); }
};

inline ProviderOptions instant_retries() {
  ProviderOptions o;
  o.sleep = [](std::chrono::milliseconds) {};
  return o;
}

inline MethodConfig config_for(Method method, std::size_t n = 4) {
  MethodConfig c;
  c.method = method;
  c.n_paraphrases = n;
  return c;
}

}  // namespace dail::testing

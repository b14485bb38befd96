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


#include <gtest/gtest.h>

#include <random>

#include "dail/augment.hpp"
#include "dail/mock.hpp"
#include "test_support.hpp"

namespace dail {
namespace {

std::string numbered(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += std::to_string(i + 1) + ". " + items[i] + "\n";
  return out;
}

TEST(ParaphrasePrompt, SubstitutesCountAndAppendsText) {
  EXPECT_EQ(build_paraphrase_prompt(TaskFamily::kSentiment, 4, "It rocks."),
            "Please paraphrase this sentence 4 times without changing the original sentiment:\nIt rocks.");
  EXPECT_EQ(build_paraphrase_prompt(TaskFamily::kTopic, 2, "Why?"),
            "Please paraphrase this question 2 times without changing the original semantic:\nWhy?");
  EXPECT_DAIL_ERROR(build_paraphrase_prompt(TaskFamily::kNews, 0, "x"), ErrorCode::kInvalidRequest);
}

TEST(ParseParaphrases, EnumeratedStyles) {
  EXPECT_EQ(parse_paraphrase_response("Sure:\n1. one\n2) two\n3: \"three\"\n", 4),
            (std::vector<std::string>{"one", "two", "three"}));
  EXPECT_EQ(parse_paraphrase_response("1. a\n2. b\n3. c", 2), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(parse_paraphrase_response("1. \xE2\x80\x9C" "curly" "\xE2\x80\x9D", 1),
            (std::vector<std::string>{"curly"}));
  EXPECT_EQ(parse_paraphrase_response("10. ten", 1), (std::vector<std::string>{"ten"}));
}

TEST(ParseParaphrases, FallsBackToLines) {
  EXPECT_EQ(parse_paraphrase_response("Here they are:\n- first\n* second\n\nthird\n", 5),
            (std::vector<std::string>{"first", "second", "third"}));
  EXPECT_DAIL_ERROR(parse_paraphrase_response("Sure! Here you go:", 3), ErrorCode::kNoParaphrasesFound);
  EXPECT_DAIL_ERROR(parse_paraphrase_response("  \n\n", 3), ErrorCode::kNoParaphrasesFound);
}

TEST(ParseParaphrases, RendersBackExactly) {
  std::mt19937_64 rng(5);
  const std::vector<std::string> words = {"the", "film", "is", "dull,", "bright", "though", "really", "(odd)"};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> items(1 + rng() % 8);
    for (auto& it : items) {
      const auto len = 1 + rng() % 6;
      for (std::size_t w = 0; w < len; ++w) it += (w ? " " : "") + words[rng() % words.size()];
    }
    ASSERT_EQ(parse_paraphrase_response(numbered(items), items.size()), items);
  }
}

class GenerateParaphrases : public ::testing::Test {
 protected:
  Sample sample{"s1", "The plot is thin.", "negative"};
  std::string prompt = build_paraphrase_prompt(TaskFamily::kSentiment, 3, "The plot is thin.");
  ParaphraseOptions options;

  Provider provider(std::vector<std::string> responses) {
    mock_ = script_mock({ScriptEntry::sequence(MatchKind::kExact, prompt, std::move(responses))});
    return Provider(mock_, nullptr);
  }
  std::shared_ptr<MockBackend> mock_;
};

TEST_F(GenerateParaphrases, FullSetInOneCall) {
  auto p = provider({numbered({"a", "b", "c"})});
  const auto set = generate_paraphrases(sample, TaskFamily::kSentiment, 3, p, options);
  EXPECT_EQ(set.paraphrases, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(set.warnings.empty());
  EXPECT_EQ(set.prompt_used, prompt);
  EXPECT_EQ(mock_->calls(), 1u);
}

TEST_F(GenerateParaphrases, ShortfallRetriesOnceAndKeepsBetter) {
  auto p = provider({numbered({"a"}), numbered({"x", "y"})});
  const auto set = generate_paraphrases(sample, TaskFamily::kSentiment, 3, p, options);
  EXPECT_EQ(set.paraphrases, (std::vector<std::string>{"x", "y"}));
  ASSERT_EQ(set.warnings.size(), 1u);
  EXPECT_EQ(set.warnings[0], "paraphrase shortfall: got 2 of 3");
  EXPECT_EQ(mock_->calls(), 2u);
}

TEST_F(GenerateParaphrases, RetryRecoversFromUnparseableFirstReply) {
  auto p = provider({"Sure! Here you go:", numbered({"a", "b", "c"})});
  EXPECT_EQ(generate_paraphrases(sample, TaskFamily::kSentiment, 3, p, options).paraphrases.size(), 3u);
}

TEST_F(GenerateParaphrases, NothingParsedTwice) {
  auto p = provider({"Sure! Here you go:", "Sure:"});
  EXPECT_DAIL_ERROR(generate_paraphrases(sample, TaskFamily::kSentiment, 3, p, options),
                    ErrorCode::kNoParaphrasesFound);
}

}  // namespace
}  // namespace dail

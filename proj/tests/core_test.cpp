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

#include <algorithm>
#include <random>

#include "dail/core.hpp"
#include "dail/error.hpp"
#include "test_support.hpp"

namespace dail {
namespace {

using testing::candidate;
using testing::oracle_vote;
using testing::random_candidates;

std::optional<std::size_t> L(std::size_t i) { return i; }

TEST(Ratio, ComparesByValue) {
  EXPECT_EQ((Ratio{3, 5}), (Ratio{6, 10}));
  EXPECT_LT((Ratio{3, 5}), (Ratio{4, 5}));
  EXPECT_EQ((Ratio{6, 10}).reduced().num, 3u);
  EXPECT_EQ((Ratio{6, 10}).to_string(), "6/10");
  EXPECT_DOUBLE_EQ((Ratio{3, 5}).value(), 0.6);
}

TEST(Ratio, ParsesDecimalsAndFractions) {
  EXPECT_EQ(*parse_ratio("0.6"), (Ratio{3, 5}));
  EXPECT_EQ(*parse_ratio("3/5"), (Ratio{3, 5}));
  EXPECT_EQ(*parse_ratio("1.0"), (Ratio{1, 1}));
  EXPECT_EQ(*parse_ratio("1"), (Ratio{1, 1}));
  EXPECT_FALSE(parse_ratio("abc"));
  EXPECT_FALSE(parse_ratio("1/0"));
  EXPECT_FALSE(parse_ratio(""));
}

TEST(LabelSpace, RejectsBadSpaces) {
  auto code = [](std::vector<std::string> v) {
    try {
      LabelSpace s(v);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIoError;
  };
  EXPECT_EQ(code({"only"}), ErrorCode::kInvalidLabelSpace);
  EXPECT_EQ(code({"a", " "}), ErrorCode::kInvalidLabelSpace);
  EXPECT_EQ(code({"Pos", "pos"}), ErrorCode::kInvalidLabelSpace);
}

TEST(LabelSpace, LookupIgnoresCase) {
  LabelSpace s({"negative", "positive"});
  EXPECT_EQ(s.index_of("POSITIVE"), 1u);
  EXPECT_FALSE(s.index_of("neutral"));
}

TEST(SourceKind, RoundTrips) {
  for (auto k : {SourceKind::kOriginal, SourceKind::kParaphrase, SourceKind::kSampledDecode,
                 SourceKind::kPromptVariant}) {
    EXPECT_EQ(parse_source_kind(to_string(k)), k);
  }
  EXPECT_FALSE(parse_source_kind("other"));
}

TEST(MajorityVote, SimpleMajority) {
  const auto space = testing::numbered_space(3);
  std::vector<CandidatePrediction> cs = {candidate(CandidateSource::original(), L(2)),
                                         candidate(CandidateSource::paraphrase(1), L(1)),
                                         candidate(CandidateSource::paraphrase(2), L(1))};
  const auto v = majority_vote(cs, space);
  EXPECT_EQ(v.winner, PredictedLabel::in_space(1));
  EXPECT_FALSE(v.tie_broken);
  EXPECT_EQ(v.tally, (std::vector<std::size_t>{0, 2, 1}));
  EXPECT_EQ(consistency_score(cs, v.winner), (Ratio{2, 3}));
}

TEST(MajorityVote, TieGoesToOriginalLabel) {
  const auto space = testing::numbered_space(3);
  std::vector<CandidatePrediction> cs = {candidate(CandidateSource::original(), L(2)),
                                         candidate(CandidateSource::paraphrase(1), L(0)),
                                         candidate(CandidateSource::paraphrase(2), L(2)),
                                         candidate(CandidateSource::paraphrase(3), L(0))};
  const auto v = majority_vote(cs, space);
  EXPECT_EQ(v.winner, PredictedLabel::in_space(2));
  EXPECT_TRUE(v.tie_broken);
}

TEST(MajorityVote, TieWithoutOriginalGoesToLowestIndex) {
  const auto space = testing::numbered_space(3);
  std::vector<CandidatePrediction> cs = {candidate(CandidateSource::original(), L(0)),
                                         candidate(CandidateSource::paraphrase(1), L(2)),
                                         candidate(CandidateSource::paraphrase(2), L(1)),
                                         candidate(CandidateSource::paraphrase(3), L(2)),
                                         candidate(CandidateSource::paraphrase(4), L(1))};
  const auto v = majority_vote(cs, space);
  EXPECT_EQ(v.winner, PredictedLabel::in_space(1));
  EXPECT_TRUE(v.tie_broken);
  EXPECT_EQ(consistency_score(cs, v.winner), (Ratio{2, 5}));
}

TEST(MajorityVote, UnparseableNeverWinsButCountsInDenominator) {
  const auto space = testing::numbered_space(2);
  std::vector<CandidatePrediction> cs = {candidate(CandidateSource::original(), std::nullopt),
                                         candidate(CandidateSource::paraphrase(1), std::nullopt),
                                         candidate(CandidateSource::paraphrase(2), std::nullopt),
                                         candidate(CandidateSource::paraphrase(3), L(1))};
  const auto v = majority_vote(cs, space);
  EXPECT_EQ(v.winner, PredictedLabel::in_space(1));
  EXPECT_EQ(v.unparseable, 3u);
  EXPECT_EQ(v.total(), 4u);
  EXPECT_EQ(consistency_score(cs, v.winner), (Ratio{1, 4}));
}

TEST(MajorityVote, AllUnparseable) {
  const auto space = testing::numbered_space(2);
  std::vector<CandidatePrediction> cs = {candidate(CandidateSource::original(), std::nullopt),
                                         candidate(CandidateSource::paraphrase(1), std::nullopt)};
  const auto v = majority_vote(cs, space);
  EXPECT_TRUE(v.winner.is_unparseable());
  EXPECT_FALSE(v.tie_broken);
  EXPECT_EQ(consistency_score(cs, v.winner), (Ratio{2, 2}));
}

TEST(MajorityVote, Errors) {
  const auto space = testing::numbered_space(2);
  std::vector<CandidatePrediction> none;
  try {
    majority_vote(none, space);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyCandidateList);
  }
  std::vector<CandidatePrediction> bad = {candidate(CandidateSource::original(), L(5))};
  try {
    majority_vote(bad, space);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLabelOutOfSpace);
  }
}

TEST(MajorityVote, MatchesBruteForceOracle) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5000; ++trial) {
    const std::size_t k = 2 + trial % 5;
    const auto space = testing::numbered_space(k);
    const auto cs = random_candidates(rng, k);
    const auto v = majority_vote(cs, space);
    const auto o = oracle_vote(cs, k);
    ASSERT_EQ(v.winner.in_space(), o.winner.has_value());
    if (o.winner) ASSERT_EQ(v.winner.index(), *o.winner);
    ASSERT_EQ(v.tie_broken, o.tie);
    ASSERT_EQ(consistency_score(cs, v.winner), (Ratio{o.matching, cs.size()}));
  }
}

TEST(MajorityVote, InvariantUnderPermutation) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const auto space = testing::numbered_space(4);
    auto cs = random_candidates(rng, 4);
    const auto v = majority_vote(cs, space);
    const auto c = consistency_score(cs, v.winner);
    std::shuffle(cs.begin(), cs.end(), rng);
    const auto v2 = majority_vote(cs, space);
    ASSERT_EQ(v, v2);
    ASSERT_EQ(consistency_score(cs, v2.winner), c);
  }
}

TEST(ConsistencyScore, BoundedAndAtLeastPlurality) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 2 + trial % 4;
    const auto space = testing::numbered_space(k);
    const auto cs = random_candidates(rng, k);
    const auto v = majority_vote(cs, space);
    const auto c = consistency_score(cs, v.winner);
    ASSERT_EQ(c.den, cs.size());
    ASSERT_GE(c.num, 1u);
    ASSERT_LE(c.num, c.den);
    if (v.winner.in_space()) {
      // The winner gets at least a 1/k share of the parseable votes.
      const auto parseable = cs.size() - v.unparseable;
      ASSERT_GE(c.num * k, parseable);
    }
  }
}

TEST(ConsistencyScore, UnanimousIsOne) {
  const auto space = testing::numbered_space(2);
  std::vector<CandidatePrediction> cs(5, candidate(CandidateSource::paraphrase(1), L(0)));
  cs[0].source = CandidateSource::original();
  EXPECT_EQ(consistency_score(cs, majority_vote(cs, space).winner), (Ratio{1, 1}));
}

}  // namespace
}  // namespace dail

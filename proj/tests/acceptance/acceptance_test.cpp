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


// Acceptance gate. Prints one PASS/FAIL line per criterion after the
// regular gtest output; exit status is nonzero if any gating criterion fails.

#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "dail/analysis.hpp"
#include "dail/cli.hpp"
#include "scripted_world.hpp"

namespace dail {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using testing::TempDir;

const fs::path kFixtures = DAIL_FIXTURE_DIR;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// 1. Case-study replay
// ---------------------------------------------------------------------------

TEST(Acceptance, Criterion1_CaseStudyReplay) {
  const auto start = Clock::now();
  DatasetFormat fmt;
  fmt.name = "sst5";
  const auto ds = load_dataset(kFixtures / "case_study/reviews.jsonl", fmt);
  ASSERT_EQ(ds.space.size(), 5u);
  const auto& sample = ds.test.at(0);
  ASSERT_EQ(sample.text, "A well acted and well intentioned snoozer.");

  Provider provider(load_mock(kFixtures / "case_study"), nullptr);
  const auto ctx = make_context(ds, provider, testing::config_for(Method::kDail, 4));
  const auto r = run_dail(sample, ctx, 4);

  const std::vector<std::string> texts = {
      "A well acted and well intentioned snoozer.",
      "Although well-performed and well-meaning, it can be quite dull.",
      "It's a yawn-inducing film, but the acting and themes are commendable.",
      "The movie is a bore, despite the admirable acting and good intentions.",
      "While well-acted and with good intentions, the movie is a bit of a snooze fest.",
  };
  const std::vector<std::string> labels = {"Neutral", "Negative", "Neutral", "Negative", "Negative"};
  ASSERT_EQ(r.candidates.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(r.candidates[i].text, texts[i]);
    EXPECT_EQ(r.candidates[i].label.render(ds.space), labels[i]);
  }
  EXPECT_EQ(r.vote.winner.render(ds.space), "Negative");
  ASSERT_TRUE(r.confidence);
  EXPECT_EQ(r.confidence->num, 3u);
  EXPECT_EQ(r.confidence->den, 5u);
  EXPECT_TRUE(r.correct);

  const auto s = run_standard_icl(sample, ctx);
  EXPECT_EQ(s.vote.winner.render(ds.space), "Neutral");
  EXPECT_FALSE(s.correct);
  EXPECT_LT(seconds_since(start), 1.0);
}

// ---------------------------------------------------------------------------
// 2. Vote oracle
// ---------------------------------------------------------------------------

TEST(Acceptance, Criterion2_VoteOracle) {
  std::mt19937_64 rng(20240521);
  std::size_t agree = 0;
  std::size_t with_unparseable = 0, without_original = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 2 + rng() % 3;       // 2..4 labels
    const std::size_t voters = 2 + rng() % 6;  // 2..7 voters
    const bool allow_unparseable = rng() % 2;
    const bool has_original = rng() % 4 != 0;
    std::vector<CandidatePrediction> cs;
    for (std::size_t v = 0; v < voters; ++v) {
      const auto src = (v == 0 && has_original) ? CandidateSource::original() : CandidateSource::paraphrase(v + 1);
      const bool miss = allow_unparseable && rng() % 5 == 0;
      cs.push_back(testing::candidate(src, miss ? std::nullopt : std::optional<std::size_t>(rng() % k)));
    }
    std::shuffle(cs.begin(), cs.end(), rng);
    with_unparseable += std::any_of(cs.begin(), cs.end(), [](const auto& c) { return c.label.is_unparseable(); });
    without_original += has_original ? 0 : 1;

    const auto space = testing::numbered_space(k);
    const auto v = majority_vote(cs, space);
    const auto o = testing::oracle_vote(cs, k);
    const bool same_winner = o.winner ? (v.winner.in_space() && v.winner.index() == *o.winner) : v.winner.is_unparseable();
    const bool same_conf = consistency_score(cs, v.winner) == Ratio{o.matching, cs.size()};
    agree += (same_winner && same_conf && v.tie_broken == o.tie) ? 1 : 0;
  }
  EXPECT_EQ(agree, 1000u);
  EXPECT_GT(with_unparseable, 0u);
  EXPECT_GT(without_original, 0u);
}

// ---------------------------------------------------------------------------
// 3. Confidence domain
// ---------------------------------------------------------------------------

TEST(Acceptance, Criterion3_ConfidenceDomain) {
  std::mt19937_64 rng(3);
  std::vector<std::vector<std::string>> answers(40, std::vector<std::string>(5));
  for (auto& row : answers) {
    for (auto& a : row) a = rng() % 2 ? "positive" : "negative";
  }
  testing::ScriptedWorld w(testing::make_dataset("binary", {"negative", "positive"}, 40),
                           [&](std::size_t i, std::size_t j) { return answers[i][j]; });
  Provider provider(w.backend(), nullptr);
  const auto m = run_experiment(make_context(w.dataset, provider, testing::config_for(Method::kDail, 4)));
  const std::set<Ratio> allowed = {Ratio{3, 5}, Ratio{4, 5}, Ratio{5, 5}};
  std::set<double> seen;
  for (const auto& r : m.records) {
    ASSERT_EQ(r.vote.unparseable, 0u);
    ASSERT_TRUE(r.confidence);
    EXPECT_TRUE(allowed.count(*r.confidence)) << r.confidence->to_string();
    seen.insert(r.confidence->value());
  }
  EXPECT_EQ(seen.size(), 3u);

  const auto five = testing::make_dataset("five", {"a", "b", "c", "d", "e"}, 1);
  const auto bins = confidence_bins(m.records, default_thresholds(five.space.size()));
  EXPECT_EQ(bins.thresholds, (std::vector<Ratio>{{2, 5}, {3, 5}, {4, 5}, {1, 1}}));
  EXPECT_EQ(default_thresholds(2), (std::vector<Ratio>{{3, 5}, {4, 5}, {1, 1}}));
}

// ---------------------------------------------------------------------------
// 4. Degeneracy and equivalence
// ---------------------------------------------------------------------------

TEST(Acceptance, Criterion4_DegenerateSettings) {
  testing::ScriptedWorld w(testing::make_dataset("twenty", {"negative", "positive", "neutral"}, 20),
                           [](std::size_t i, std::size_t j) {
                             static const char* out[] = {"negative", "Positive.", "neutral", "hmm"};
                             return std::string(out[(i * 7 + j) % 4]);
                           });
  const auto records = [&](const MethodConfig& c) {
    Provider provider(w.backend(), nullptr);
    const auto m = run_experiment(make_context(w.dataset, provider, c));
    std::string out;
    for (const auto& r : m.records) out += record_to_json(r, m.space).dump() + "\n";
    return std::make_pair(out, m);
  };
  const auto [standard_bytes, standard] = records(testing::config_for(Method::kStandard));
  const auto [dail0_bytes, dail0] = records(testing::config_for(Method::kDail, 0));
  EXPECT_EQ(standard_bytes, dail0_bytes);
  EXPECT_EQ(standard.records.size(), 20u);

  const auto [dail1_bytes, dail1] = records(testing::config_for(Method::kDail, 1));
  for (const auto& r : dail1.records) {
    ASSERT_EQ(r.candidates.size(), 1u);
    EXPECT_EQ(r.candidates[0].source.kind, SourceKind::kParaphrase);
  }
}

// ---------------------------------------------------------------------------
// 5. Determinism and caching
// ---------------------------------------------------------------------------

TEST(Acceptance, Criterion5_DeterministicCachedRuns) {
  TempDir dir;
  testing::ScriptedWorld w(testing::make_dataset("toy", {"negative", "positive"}, 12),
                           [](std::size_t i, std::size_t j) { return (i + j) % 3 ? "positive" : "negative"; });
  save_dataset(w.dataset, dir / "toy.jsonl");
  testing::write_file(dir / "script.json", to_json(w.entries).dump(2));
  const std::vector<std::string> args = {"--workdir", dir.path().string(), "run", "--dataset", "toy.jsonl",
                                         "--mock-script", "script.json", "--seed", "7", "--cache-dir", "cache",
                                         "--out", "run.json"};
  std::ostringstream out1, out2, err;
  ASSERT_EQ(cli::run_cli(args, out1, err), 0) << err.str();
  const auto first = load_manifest(dir / "run.json");
  ASSERT_EQ(cli::run_cli(args, out2, err), 0) << err.str();
  const auto second = load_manifest(dir / "run.json");

  EXPECT_TRUE(same_content(first, second));
  EXPECT_GT(first.stats.network_calls, 0u);
  EXPECT_EQ(second.stats.network_calls, 0u);
  EXPECT_EQ(second.stats.cache_hits, second.stats.requests);
  EXPECT_NE(out2.str().find("network_calls=0"), std::string::npos) << out2.str();
}

// ---------------------------------------------------------------------------
// 6. Template fidelity
// ---------------------------------------------------------------------------

std::vector<std::string> file_lines(const fs::path& p) {
  std::istringstream in(read_file(p));
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

TEST(Acceptance, Criterion6_TemplateFidelity) {
  const auto catalog = PromptCatalog::embedded();
  const auto prompts = kFixtures / "prompts";
  const std::map<TaskFamily, std::pair<std::string, std::string>> expected = {
      {TaskFamily::kSentiment,
       {"Please paraphrase this sentence 3 times without changing the original sentiment:",
        "Label the sentiment class of the sentence"}},
      {TaskFamily::kEmotion,
       {"Please paraphrase this sentence 3 times without changing the original emotion:",
        "Label the emotion class of the sentence"}},
      {TaskFamily::kQuestion,
       {"Please paraphrase this question 3 times without changing the original semantic:",
        "Label the category of the question"}},
      {TaskFamily::kNews,
       {"Please paraphrase this news 3 times without changing the original semantic:",
        "Label the category of the news"}},
  };
  for (const auto& [family, texts] : expected) {
    const auto name = std::string(to_string(family)) + ".txt";
    EXPECT_EQ(build_paraphrase_prompt(catalog, family, 3, "Input."), texts.first + "\nInput.");
    auto from_file = file_lines(prompts / "paraphrase" / name).at(0);
    from_file.replace(from_file.find("<Para-Num>"), 10, "3");
    EXPECT_EQ(from_file, texts.first);
    EXPECT_EQ(catalog.instruction(family), texts.second);
    EXPECT_EQ(file_lines(prompts / "instruction" / name), std::vector<std::string>{texts.second});
  }

  const std::map<std::string, std::vector<std::string>> variants = {
      {"sst5",
       {"Label the sentiment class of the sentence.", "What is the sentiment expressed in this message?",
        "What sentiment does this message express?", "How will you feel about the message in terms of its sentiment?",
        "What sentiment does the writer express for the message?"}},
      {"trec",
       {"Label the categories of the given question.", "What is the categories of the given question?",
        "What type of information does this question express?",
        "How will you feel about the question about its category?",
        "What type of information does the writer express for the question?"}},
      {"emotion",
       {"Label the emotion class of the sentence.", "What is the emotion expressed in this message?",
        "What emotion does this message express?", "How will you feel about the message in terms of its emotion?",
        "What emotion does the writer express for the message?"}},
  };
  std::size_t count = 0;
  for (const auto& [dataset, lines] : variants) {
    EXPECT_EQ(catalog.variants(dataset), lines);
    EXPECT_EQ(file_lines(prompts / "variants" / (dataset + ".txt")), lines);
    count += lines.size();
  }
  EXPECT_EQ(count, 15u);
  EXPECT_EQ(PromptCatalog::with_overrides(prompts).hashes(), catalog.hashes());
}

// ---------------------------------------------------------------------------
// 7. Calibration fixture
// ---------------------------------------------------------------------------

TEST(Acceptance, Criterion7_CalibrationFixture) {
  const auto start = Clock::now();
  // Three groups of 20 binary samples. Group g has winner support 5, 4, 3 of
  // 5 votes; the first 18, 14, 10 samples of each group vote for gold.
  const std::vector<std::size_t> support = {5, 4, 3};
  const std::vector<std::size_t> correct_per_group = {18, 14, 10};
  const std::vector<std::string> labels = {"negative", "positive"};
  auto ds = testing::make_dataset("calibration", labels, 60);
  const auto gold = [&](std::size_t i) { return i % 2; };
  const auto winner = [&](std::size_t i) {
    const auto g = i / 20;
    return (i % 20) < correct_per_group[g] ? gold(i) : 1 - gold(i);
  };
  testing::ScriptedWorld w(ds, [&](std::size_t i, std::size_t j) {
    return labels[j < support[i / 20] ? winner(i) : 1 - winner(i)];
  });
  Provider provider(w.backend(), nullptr);
  const auto m = run_experiment(make_context(w.dataset, provider, testing::config_for(Method::kDail, 4)));
  EXPECT_EQ(m.metrics.correct, 42u);

  const auto t = default_thresholds(2);
  const auto cumulative = confidence_bins(m.records, t, BinMode::kCumulative);
  const auto exact = confidence_bins(m.records, t, BinMode::kExact);
  const std::vector<Ratio> want_cumulative = {{42, 60}, {32, 40}, {18, 20}};
  const std::vector<Ratio> want_exact = {{10, 20}, {14, 20}, {18, 20}};
  for (std::size_t i = 0; i < 3; ++i) {
    ASSERT_TRUE(cumulative.rows[i].accuracy && exact.rows[i].accuracy);
    EXPECT_EQ(cumulative.rows[i].accuracy->num * want_cumulative[i].den,
              want_cumulative[i].num * cumulative.rows[i].accuracy->den);
    EXPECT_EQ(cumulative.rows[i].sample_count, want_cumulative[i].den);
    EXPECT_EQ(exact.rows[i].accuracy->num, want_exact[i].num);
    EXPECT_EQ(exact.rows[i].sample_count, want_exact[i].den);
  }
  EXPECT_TRUE(cumulative.accuracy_non_decreasing());
  EXPECT_TRUE(exact.accuracy_non_decreasing());
  EXPECT_EQ(bins_to_csv(cumulative), "threshold,sample_count,accuracy\n0.60,60,0.7000\n0.80,40,0.8000\n1.00,20,0.9000\n");
  EXPECT_LT(seconds_since(start), 5.0);
}

// ---------------------------------------------------------------------------
// 8. Live smoke test (optional)
// ---------------------------------------------------------------------------

// Set DAIL_LIVE_ENDPOINT, DAIL_LIVE_MODEL and DAIL_LIVE_DATASET (a TREC-style
// JSONL file with train and test splits); the key comes from OPENAI_API_KEY.
TEST(Acceptance, Criterion8_LiveSmoke) {
  const char* endpoint = std::getenv("DAIL_LIVE_ENDPOINT");
  const char* model = std::getenv("DAIL_LIVE_MODEL");
  const char* dataset = std::getenv("DAIL_LIVE_DATASET");
  if (!endpoint || !model || !dataset) GTEST_SKIP() << "DAIL_LIVE_ENDPOINT/MODEL/DATASET unset";

  TempDir dir;
  DatasetFormat fmt;
  fmt.name = "trec";
  fmt.task_family = TaskFamily::kQuestion;
  auto ds = load_dataset(dataset, fmt);
  if (ds.test.size() > 50) ds.test.resize(50);
  const char* key = std::getenv("OPENAI_API_KEY");
  auto backend = std::make_shared<OpenAiCompatibleBackend>(endpoint, key ? key : "");
  Provider provider(backend, std::make_shared<ResponseCache>(dir / "cache"));
  ModelParams params;
  params.model = model;
  std::vector<RunManifest> runs;
  for (const auto& c : {testing::config_for(Method::kStandard), testing::config_for(Method::kDail, 4)}) {
    runs.push_back(run_experiment(make_context(ds, provider, c, params)));
  }
  const auto table = compare_methods(runs);
  std::cout << comparison_to_text(table);
  std::cout << "direction: dail-4 " << (runs[1].metrics.accuracy >= runs[0].metrics.accuracy ? ">=" : "<")
            << " standard (reported, not asserted)\n";
}

// ---------------------------------------------------------------------------
// Per-criterion report
// ---------------------------------------------------------------------------

struct Criterion {
  const char* test;
  const char* summary;
  bool gating;
};

const Criterion kCriteria[] = {
    {"Criterion1_CaseStudyReplay", "case-study replay: dail-4 Negative @ 3/5, standard Neutral, < 1 s", true},
    {"Criterion2_VoteOracle", "1000 random candidate lists agree with brute-force vote oracle", true},
    {"Criterion3_ConfidenceDomain", "binary dail-4 confidence in {0.6,0.8,1.0}; 5-class default thresholds", true},
    {"Criterion4_DegenerateSettings", "dail-0 records byte-identical to standard; dail-1 single paraphrase", true},
    {"Criterion5_DeterministicCachedRuns", "repeat run: equal manifests, zero network calls", true},
    {"Criterion6_TemplateFidelity", "paraphrase/instruction templates and 15 variants byte-for-byte", true},
    {"Criterion7_CalibrationFixture", "60-sample calibration bins exact and non-decreasing, < 5 s", true},
    {"Criterion8_LiveSmoke", "live smoke test against an OpenAI-compatible endpoint (optional)", false},
};

class CriterionReporter : public ::testing::EmptyTestEventListener {
 public:
  void OnTestEnd(const ::testing::TestInfo& info) override {
    const auto* r = info.result();
    results_[info.name()] = r->Skipped() ? "SKIP" : (r->Passed() ? "PASS" : "FAIL");
    elapsed_[info.name()] = r->elapsed_time();
  }

  int Report() const {
    int failures = 0;
    std::cout << "\nAcceptance criteria\n";
    int n = 1;
    for (const auto& c : kCriteria) {
      auto it = results_.find(c.test);
      std::string status = it == results_.end() ? "FAIL" : it->second;
      if (status == "SKIP" && !c.gating) status = "PASS (skipped, non-gating)";
      if (status == "FAIL" && c.gating) ++failures;
      const auto ms = elapsed_.count(c.test) ? elapsed_.at(c.test) : 0;
      std::cout << "[" << status << "] criterion " << n++ << ": " << c.summary << " (" << ms << " ms)\n";
    }
    return failures;
  }

 private:
  std::map<std::string, std::string> results_;
  std::map<std::string, long long> elapsed_;
};

}  // namespace
}  // namespace dail

int main(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  auto* reporter = new dail::CriterionReporter;
  ::testing::UnitTest::GetInstance()->listeners().Append(reporter);
  const int gtest_status = RUN_ALL_TESTS();
  const int failed = reporter->Report();
  return (gtest_status != 0 || failed != 0) ? 1 : 0;
}

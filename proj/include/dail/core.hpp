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

// Voting and confidence arithmetic plus the label/prediction types every
// other module shares.

#pragma once

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dail/error.hpp"

namespace dail {

// ---------------------------------------------------------------------------
// Small text helpers used across modules.
// ---------------------------------------------------------------------------

inline std::string_view trim(std::string_view s) {
  constexpr std::string_view kSpace = " \t\r\n\f\v";
  const auto first = s.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(kSpace);
  return s.substr(first, last - first + 1);
}

inline std::string fold_case(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && fold_case(a) == fold_case(b);
}

// ---------------------------------------------------------------------------
// Ratio: an exact non-negative rational. Kept unreduced so that a confidence
// of 3 matching votes out of 5 serializes as 3/5; comparison is by value.
// ---------------------------------------------------------------------------

struct Ratio {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  constexpr double value() const {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  }

  constexpr Ratio reduced() const {
    const auto g = std::gcd(num, den);
    return g == 0 ? *this : Ratio{num / g, den / g};
  }

  // Values here are vote and sample counts, far below 2^32, so the
  // cross products cannot overflow.
  friend constexpr std::strong_ordering operator<=>(const Ratio& a, const Ratio& b) {
    return a.num * b.den <=> b.num * a.den;
  }
  friend constexpr bool operator==(const Ratio& a, const Ratio& b) {
    return a.num * b.den == b.num * a.den;
  }

  std::string to_string() const { return std::to_string(num) + "/" + std::to_string(den); }
};

// Parses "0.6", "1", "1.0", ".4" or "3/5" exactly. Returns nullopt on junk.
inline std::optional<Ratio> parse_ratio(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  const auto all_digits = [](std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
  };
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    const auto n = text.substr(0, slash);
    const auto d = text.substr(slash + 1);
    if (n.empty() || d.empty() || !all_digits(n) || !all_digits(d)) return std::nullopt;
    if (n.size() > 9 || d.size() > 9) return std::nullopt;
    const Ratio r{std::stoull(std::string(n)), std::stoull(std::string(d))};
    if (r.den == 0) return std::nullopt;
    return r.reduced();
  }
  const auto dot = text.find('.');
  const auto whole = text.substr(0, dot);
  const auto frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  if (whole.empty() && frac.empty()) return std::nullopt;
  if (!all_digits(whole) || !all_digits(frac)) return std::nullopt;
  if (whole.size() + frac.size() > 15) return std::nullopt;
  std::uint64_t den = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
  const std::uint64_t w = whole.empty() ? 0 : std::stoull(std::string(whole));
  const std::uint64_t f = frac.empty() ? 0 : std::stoull(std::string(frac));
  return Ratio{w * den + f, den}.reduced();
}

// ---------------------------------------------------------------------------
// LabelSpace
// ---------------------------------------------------------------------------

class LabelSpace {
 public:
  LabelSpace() = default;

  explicit LabelSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
    if (labels_.size() < 2) {
      throw Error(ErrorCode::kInvalidLabelSpace, "a label space needs at least 2 labels");
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (trim(labels_[i]).empty()) {
        throw Error(ErrorCode::kInvalidLabelSpace, "empty label at position " + std::to_string(i));
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (iequals(labels_[i], labels_[j])) {
          throw Error(ErrorCode::kInvalidLabelSpace, "duplicate label '" + labels_[i] + "'");
        }
      }
    }
  }

  std::size_t size() const { return labels_.size(); }
  const std::string& operator[](std::size_t i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const { return labels_; }

  // Case-insensitive lookup.
  std::optional<std::size_t> index_of(std::string_view label) const {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (iequals(labels_[i], label)) return i;
    }
    return std::nullopt;
  }

  bool operator==(const LabelSpace&) const = default;

 private:
  std::vector<std::string> labels_;
};

// ---------------------------------------------------------------------------
// Predictions
// ---------------------------------------------------------------------------

// Either an index into a LabelSpace or Unparseable (model output matched no
// label). Default-constructed value is Unparseable.
class PredictedLabel {
 public:
  PredictedLabel() = default;

  static PredictedLabel in_space(std::size_t index) { return PredictedLabel(index); }
  static PredictedLabel unparseable() { return PredictedLabel(); }

  bool is_unparseable() const { return !index_.has_value(); }
  bool in_space() const { return index_.has_value(); }
  std::size_t index() const { return index_.value(); }

  std::string render(const LabelSpace& space) const {
    return index_ ? space[*index_] : std::string("<unparseable>");
  }

  bool operator==(const PredictedLabel&) const = default;

 private:
  explicit PredictedLabel(std::size_t index) : index_(index) {}
  std::optional<std::size_t> index_;
};

enum class SourceKind { kOriginal, kParaphrase, kSampledDecode, kPromptVariant };

constexpr std::string_view to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::kOriginal: return "original";
    case SourceKind::kParaphrase: return "paraphrase";
    case SourceKind::kSampledDecode: return "sampled_decode";
    case SourceKind::kPromptVariant: return "prompt_variant";
  }
  return "original";
}

inline std::optional<SourceKind> parse_source_kind(std::string_view s) {
  for (auto k : {SourceKind::kOriginal, SourceKind::kParaphrase, SourceKind::kSampledDecode,
                 SourceKind::kPromptVariant}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

// Original carries index 0; the other kinds are numbered from 1.
struct CandidateSource {
  SourceKind kind = SourceKind::kOriginal;
  std::size_t index = 0;

  static CandidateSource original() { return {SourceKind::kOriginal, 0}; }
  static CandidateSource paraphrase(std::size_t i) { return {SourceKind::kParaphrase, i}; }
  static CandidateSource sampled_decode(std::size_t i) { return {SourceKind::kSampledDecode, i}; }
  static CandidateSource prompt_variant(std::size_t i) { return {SourceKind::kPromptVariant, i}; }

  bool operator==(const CandidateSource&) const = default;
};

struct CandidatePrediction {
  CandidateSource source;
  std::string text;        // input the model classified
  std::string raw_output;  // what the model said
  PredictedLabel label;

  bool operator==(const CandidatePrediction&) const = default;
};

struct VoteResult {
  PredictedLabel winner;
  std::vector<std::size_t> tally;  // per label-space index
  std::size_t unparseable = 0;
  bool tie_broken = false;

  std::size_t total() const {
    return std::accumulate(tally.begin(), tally.end(), unparseable);
  }

  bool operator==(const VoteResult&) const = default;
};

using ConfidenceScore = Ratio;

// Majority vote over candidate labels. Among labels sharing the maximum
// count, the Original candidate's label wins if it is one of them, otherwise
// the smallest label-space index. Unparseable never beats an in-space label.
inline VoteResult majority_vote(std::span<const CandidatePrediction> candidates,
                                const LabelSpace& space) {
  if (candidates.empty()) {
    throw Error(ErrorCode::kEmptyCandidateList, "majority_vote needs at least one candidate");
  }
  VoteResult result;
  result.tally.assign(space.size(), 0);
  std::optional<std::size_t> original_label;
  for (const auto& c : candidates) {
    if (c.label.is_unparseable()) {
      ++result.unparseable;
      continue;
    }
    const auto idx = c.label.index();
    if (idx >= space.size()) {
      throw Error(ErrorCode::kLabelOutOfSpace,
                  "label index " + std::to_string(idx) + " outside space of size " +
                      std::to_string(space.size()));
    }
    ++result.tally[idx];
    if (c.source.kind == SourceKind::kOriginal) {
      original_label = original_label ? std::min(*original_label, idx) : idx;
    }
  }

  const auto best = *std::max_element(result.tally.begin(), result.tally.end());
  if (best == 0) return result;  // every voter unparseable

  const auto tied = static_cast<std::size_t>(
      std::count(result.tally.begin(), result.tally.end(), best));
  result.tie_broken = tied > 1;
  if (original_label && result.tally[*original_label] == best) {
    result.winner = PredictedLabel::in_space(*original_label);
  } else {
    const auto it = std::find(result.tally.begin(), result.tally.end(), best);
    result.winner = PredictedLabel::in_space(static_cast<std::size_t>(it - result.tally.begin()));
  }
  return result;
}

// Fraction of candidates agreeing with the winner. The denominator counts
// every candidate, unparseable ones included.
inline ConfidenceScore consistency_score(std::span<const CandidatePrediction> candidates,
                                         const PredictedLabel& winner) {
  if (candidates.empty()) {
    throw Error(ErrorCode::kEmptyCandidateList, "consistency_score needs at least one candidate");
  }
  const auto matching = std::count_if(candidates.begin(), candidates.end(),
                                      [&](const auto& c) { return c.label == winner; });
  return Ratio{static_cast<std::uint64_t>(matching), candidates.size()};
}

}  // namespace dail

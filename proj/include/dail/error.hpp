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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dail {

enum class ErrorCode {
  // core
  kEmptyCandidateList,
  kLabelOutOfSpace,
  kInvalidLabelSpace,
  // datasets
  kMalformedRecord,
  kUnknownLabel,
  kEmptySplit,
  kSingleLabelDataset,
  kInsufficientTrainSamples,
  // provider
  kAuthError,
  kRateLimitedExhausted,
  kTransportError,
  kMockScriptMiss,
  kDuplicateMatcher,
  kInvalidRequest,
  // augment / prompting
  kUnknownTaskFamily,
  kNoParaphrasesFound,
  kMissingVariantFixture,
  // pipeline
  kInvalidMethodConfig,
  kMissingParaphrases,
  // analysis
  kEmptyRecordSet,
  kInvalidThresholds,
  kMismatchedTestSets,
  kManifestError,
  kIoError,
  // cli
  kConfigError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyCandidateList: return "EmptyCandidateList";
    case ErrorCode::kLabelOutOfSpace: return "LabelOutOfSpace";
    case ErrorCode::kInvalidLabelSpace: return "InvalidLabelSpace";
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kUnknownLabel: return "UnknownLabel";
    case ErrorCode::kEmptySplit: return "EmptySplit";
    case ErrorCode::kSingleLabelDataset: return "SingleLabelDataset";
    case ErrorCode::kInsufficientTrainSamples: return "InsufficientTrainSamples";
    case ErrorCode::kAuthError: return "AuthError";
    case ErrorCode::kRateLimitedExhausted: return "RateLimitedExhausted";
    case ErrorCode::kTransportError: return "TransportError";
    case ErrorCode::kMockScriptMiss: return "MockScriptMiss";
    case ErrorCode::kDuplicateMatcher: return "DuplicateMatcher";
    case ErrorCode::kInvalidRequest: return "InvalidRequest";
    case ErrorCode::kUnknownTaskFamily: return "UnknownTaskFamily";
    case ErrorCode::kNoParaphrasesFound: return "NoParaphrasesFound";
    case ErrorCode::kMissingVariantFixture: return "MissingVariantFixture";
    case ErrorCode::kInvalidMethodConfig: return "InvalidMethodConfig";
    case ErrorCode::kMissingParaphrases: return "MissingParaphrases";
    case ErrorCode::kEmptyRecordSet: return "EmptyRecordSet";
    case ErrorCode::kInvalidThresholds: return "InvalidThresholds";
    case ErrorCode::kMismatchedTestSets: return "MismatchedTestSets";
    case ErrorCode::kManifestError: return "ManifestError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

// Every failure raised by the library carries a machine-checkable code; the
// message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace dail

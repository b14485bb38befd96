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

// Accuracy, accuracy-vs-confidence curves, method comparison tables, and
// the report writers.

#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dail/core.hpp"
#include "dail/error.hpp"
#include "dail/records.hpp"
#include "json.hpp"

namespace dail {

inline Ratio accuracy(const std::vector<PredictionRecord>& records) {
  if (records.empty()) throw Error(ErrorCode::kEmptyRecordSet, "no records");
  return compute_metrics(records).accuracy;
}

// ---------------------------------------------------------------------------
// Confidence bins
// ---------------------------------------------------------------------------

enum class BinMode {
  kCumulative,  // records with confidence >= threshold
  kExact,       // records with threshold <= confidence < next threshold
};

struct ThresholdRow {
  Ratio threshold;
  std::size_t sample_count = 0;
  std::optional<Ratio> accuracy;  // absent when sample_count == 0
};

struct ConfidenceBinReport {
  BinMode mode = BinMode::kCumulative;
  std::vector<Ratio> thresholds;
  std::vector<ThresholdRow> rows;

  // Accuracy never drops as the threshold rises (rows without samples are
  // skipped).
  bool accuracy_non_decreasing() const {
    std::optional<Ratio> prev;
    for (const auto& row : rows) {
      if (!row.accuracy) continue;
      if (prev && *row.accuracy < *prev) return false;
      prev = row.accuracy;
    }
    return true;
  }
};

// Binary tasks: 0.6, 0.8, 1.0. Anything larger: 0.4, 0.6, 0.8, 1.0.
inline std::vector<Ratio> default_thresholds(std::size_t label_count) {
  if (label_count <= 2) return {Ratio{3, 5}, Ratio{4, 5}, Ratio{1, 1}};
  return {Ratio{2, 5}, Ratio{3, 5}, Ratio{4, 5}, Ratio{1, 1}};
}

inline void validate_thresholds(const std::vector<Ratio>& thresholds) {
  if (thresholds.empty()) throw Error(ErrorCode::kInvalidThresholds, "no thresholds");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    const auto& t = thresholds[i];
    if (t.den == 0 || t.num == 0 || t > Ratio{1, 1}) {
      throw Error(ErrorCode::kInvalidThresholds, "threshold " + t.to_string() + " outside (0,1]");
    }
    if (i > 0 && !(thresholds[i - 1] < t)) {
      throw Error(ErrorCode::kInvalidThresholds, "thresholds must be strictly ascending");
    }
  }
}

inline ConfidenceBinReport confidence_bins(const std::vector<PredictionRecord>& records,
                                           const std::vector<Ratio>& thresholds,
                                           BinMode mode = BinMode::kCumulative) {
  if (records.empty()) throw Error(ErrorCode::kEmptyRecordSet, "no records");
  validate_thresholds(thresholds);
  ConfidenceBinReport report;
  report.mode = mode;
  report.thresholds = thresholds;
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    const auto lo = thresholds[i];
    const auto hi = i + 1 < thresholds.size() ? std::optional<Ratio>(thresholds[i + 1]) : std::nullopt;
    std::size_t count = 0, correct = 0;
    for (const auto& r : records) {
      if (!r.confidence) continue;
      const auto c = *r.confidence;
      const bool in = mode == BinMode::kCumulative ? c >= lo : (c >= lo && (!hi || c < *hi));
      if (!in) continue;
      ++count;
      correct += r.correct ? 1 : 0;
    }
    ThresholdRow row{lo, count, std::nullopt};
    if (count > 0) row.accuracy = Ratio{correct, count};
    report.rows.push_back(row);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Method comparison
// ---------------------------------------------------------------------------

struct ComparisonCell {
  Ratio accuracy;
  std::size_t warnings = 0;
  std::size_t failed = 0;
  bool best = false;
};

struct ComparisonTable {
  std::vector<std::string> datasets;  // columns
  std::vector<std::string> methods;   // rows
  // cells[method][dataset]
  std::vector<std::vector<std::optional<ComparisonCell>>> cells;
};

// Rows are method labels, columns dataset names, both in first-appearance
// order. Manifests naming the same dataset must cover the same test samples
// with the same gold labels. The best accuracy per dataset is flagged (ties
// flag every holder).
inline ComparisonTable compare_methods(const std::vector<RunManifest>& manifests) {
  if (manifests.empty()) throw Error(ErrorCode::kEmptyRecordSet, "no manifests to compare");
  ComparisonTable t;
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> split_of;
  const auto index_in = [](std::vector<std::string>& v, const std::string& s) {
    auto it = std::find(v.begin(), v.end(), s);
    if (it != v.end()) return static_cast<std::size_t>(it - v.begin());
    v.push_back(s);
    return v.size() - 1;
  };
  for (const auto& m : manifests) {
    std::vector<std::pair<std::string, std::string>> split;
    for (const auto& r : m.records) split.emplace_back(r.sample_id, r.gold_label);
    if (auto it = split_of.find(m.dataset_name); it != split_of.end()) {
      if (it->second != split) {
        throw Error(ErrorCode::kMismatchedTestSets,
                    "manifests for dataset '" + m.dataset_name + "' cover different test samples");
      }
    } else {
      split_of.emplace(m.dataset_name, std::move(split));
    }
    const auto col = index_in(t.datasets, m.dataset_name);
    const auto row = index_in(t.methods, m.method.label());
    t.cells.resize(t.methods.size());
    for (auto& r : t.cells) r.resize(t.datasets.size());
    const auto metrics = compute_metrics(m.records);
    t.cells[row][col] = ComparisonCell{metrics.accuracy, metrics.warnings, metrics.failed, false};
  }
  for (std::size_t col = 0; col < t.datasets.size(); ++col) {
    std::optional<Ratio> best;
    for (const auto& row : t.cells) {
      if (row[col] && (!best || row[col]->accuracy > *best)) best = row[col]->accuracy;
    }
    for (auto& row : t.cells) {
      if (row[col] && best && row[col]->accuracy == *best) row[col]->best = true;
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

enum class ReportFormat { kTableText, kDelimited, kStructured };

inline std::string format_decimal(double v, int places = 4) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(places) << v;
  return ss.str();
}

inline ojson bins_to_json(const ConfidenceBinReport& report) {
  ojson j;
  j["mode"] = report.mode == BinMode::kCumulative ? "cumulative" : "exact";
  j["rows"] = ojson::array();
  for (const auto& row : report.rows) {
    ojson rj;
    rj["threshold"] = row.threshold.value();
    rj["threshold_exact"] = row.threshold.to_string();
    rj["sample_count"] = row.sample_count;
    rj["accuracy"] = row.accuracy ? ojson(row.accuracy->value()) : ojson(nullptr);
    rj["accuracy_exact"] = row.accuracy ? ojson(row.accuracy->to_string()) : ojson(nullptr);
    j["rows"].push_back(std::move(rj));
  }
  return j;
}

inline std::string bins_to_csv(const ConfidenceBinReport& report) {
  std::string out = "threshold,sample_count,accuracy\n";
  for (const auto& row : report.rows) {
    out += format_decimal(row.threshold.value(), 2) + "," + std::to_string(row.sample_count) + "," +
           (row.accuracy ? format_decimal(row.accuracy->value()) : std::string()) + "\n";
  }
  return out;
}

inline std::string bins_to_text(const ConfidenceBinReport& report) {
  std::ostringstream ss;
  ss << (report.mode == BinMode::kCumulative ? "confidence >= t" : "t <= confidence < next") << "\n";
  ss << std::left << std::setw(12) << "threshold" << std::setw(10) << "samples" << "accuracy\n";
  for (const auto& row : report.rows) {
    ss << std::left << std::setw(12) << format_decimal(row.threshold.value(), 2) << std::setw(10)
       << row.sample_count << (row.accuracy ? format_decimal(row.accuracy->value()) : "n/a") << "\n";
  }
  return ss.str();
}

// Structured metrics for one run: accuracy, counts, and the bin report.
inline ojson metrics_report_json(const RunManifest& m, const ConfidenceBinReport& bins) {
  ojson j;
  j["report_version"] = 1;
  j["dataset"] = m.dataset_name;
  j["method"] = m.method.label();
  j["metrics"] = metrics_to_json(m.metrics);
  j["confidence_bins"] = bins_to_json(bins);
  return j;
}

inline std::string comparison_to_csv(const ComparisonTable& t) {
  std::string out = "method";
  for (const auto& d : t.datasets) out += "," + d + "," + d + "_best," + d + "_warnings";
  out += "\n";
  for (std::size_t r = 0; r < t.methods.size(); ++r) {
    out += t.methods[r];
    for (std::size_t c = 0; c < t.datasets.size(); ++c) {
      const auto& cell = t.cells[r][c];
      if (cell) {
        out += "," + format_decimal(cell->accuracy.value()) + "," + (cell->best ? "1" : "0") + "," +
               std::to_string(cell->warnings);
      } else {
        out += ",,,";
      }
    }
    out += "\n";
  }
  return out;
}

inline std::string comparison_to_text(const ComparisonTable& t) {
  std::ostringstream ss;
  ss << std::left << std::setw(24) << "method";
  for (const auto& d : t.datasets) ss << std::setw(18) << d;
  ss << "\n";
  for (std::size_t r = 0; r < t.methods.size(); ++r) {
    ss << std::left << std::setw(24) << t.methods[r];
    for (std::size_t c = 0; c < t.datasets.size(); ++c) {
      const auto& cell = t.cells[r][c];
      std::string s = "-";
      if (cell) {
        s = format_decimal(cell->accuracy.value() * 100.0, 1) + (cell->best ? "*" : "");
        if (cell->warnings) s += " (w" + std::to_string(cell->warnings) + ")";
      }
      ss << std::setw(18) << s;
    }
    ss << "\n";
  }
  ss << "* best per dataset; (wN) records with warnings\n";
  return ss.str();
}

inline ojson comparison_to_json(const ComparisonTable& t) {
  ojson j;
  j["report_version"] = 1;
  j["datasets"] = t.datasets;
  j["rows"] = ojson::array();
  for (std::size_t r = 0; r < t.methods.size(); ++r) {
    ojson row;
    row["method"] = t.methods[r];
    ojson cells = ojson::object();
    for (std::size_t c = 0; c < t.datasets.size(); ++c) {
      const auto& cell = t.cells[r][c];
      if (!cell) {
        cells[t.datasets[c]] = nullptr;
        continue;
      }
      ojson cj;
      cj["accuracy"] = ratio_to_json(cell->accuracy);
      cj["best"] = cell->best;
      cj["warnings"] = cell->warnings;
      cj["failed"] = cell->failed;
      cells[t.datasets[c]] = std::move(cj);
    }
    row["cells"] = std::move(cells);
    j["rows"].push_back(std::move(row));
  }
  return j;
}

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

}  // namespace detail

// Writes <stem>.metrics.json / <stem>.bins.csv / <stem>.summary.txt for the
// requested formats and returns the paths written.
inline std::vector<std::filesystem::path> emit_report(const RunManifest& m, const ConfidenceBinReport& bins,
                                                      const std::filesystem::path& dir, const std::string& stem,
                                                      const std::vector<ReportFormat>& formats) {
  std::vector<std::filesystem::path> written;
  for (auto f : formats) {
    std::filesystem::path p;
    switch (f) {
      case ReportFormat::kStructured:
        p = dir / (stem + ".metrics.json");
        detail::write_text_file(p, metrics_report_json(m, bins).dump(2) + "\n");
        break;
      case ReportFormat::kDelimited:
        p = dir / (stem + ".bins.csv");
        detail::write_text_file(p, bins_to_csv(bins));
        break;
      case ReportFormat::kTableText: {
        p = dir / (stem + ".summary.txt");
        std::string text = "dataset: " + m.dataset_name + "\nmethod: " + m.method.label() +
                           "\naccuracy: " + format_decimal(m.metrics.accuracy.value()) + " (" +
                           std::to_string(m.metrics.correct) + "/" + std::to_string(m.metrics.total) +
                           ")\nrecords with warnings: " + std::to_string(m.metrics.warnings) +
                           "\nfailed: " + std::to_string(m.metrics.failed) + "\n\n" + bins_to_text(bins);
        detail::write_text_file(p, text);
        break;
      }
    }
    written.push_back(p);
  }
  return written;
}

inline std::vector<std::filesystem::path> emit_report(const ComparisonTable& t, const std::filesystem::path& dir,
                                                      const std::vector<ReportFormat>& formats) {
  std::vector<std::filesystem::path> written;
  for (auto f : formats) {
    std::filesystem::path p;
    switch (f) {
      case ReportFormat::kStructured:
        p = dir / "comparison.json";
        detail::write_text_file(p, comparison_to_json(t).dump(2) + "\n");
        break;
      case ReportFormat::kDelimited:
        p = dir / "comparison.csv";
        detail::write_text_file(p, comparison_to_csv(t));
        break;
      case ReportFormat::kTableText:
        p = dir / "comparison.txt";
        detail::write_text_file(p, comparison_to_text(t));
        break;
    }
    written.push_back(p);
  }
  return written;
}

}  // namespace dail

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

// Command-line driver: run, analyze, paraphrase, cache.
//
// Exit codes: 0 success, 1 configuration error, 2 run aborted,
// 3 analysis error. --config reads a TOML/INI file whose [run], [analyze]
// and [paraphrase] sections hold the subcommand options; flags win. The
// provider credential is read only from the environment variable named by
// --api-key-env.

#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dail/analysis.hpp"
#include "dail/datasets.hpp"
#include "dail/http_backend.hpp"
#include "dail/mock.hpp"
#include "dail/pipeline.hpp"
#include "dail/provider.hpp"
#include "dail/records.hpp"
#include "dail/templates.hpp"

namespace dail::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitAborted = 2;
inline constexpr int kExitAnalysis = 3;

struct DatasetArgs {
  std::string path;
  std::string name;
  std::string task = "sentiment";
  std::string labels;
};

struct ProviderArgs {
  std::string kind = "mock";
  std::string mock_script;
  std::string endpoint;
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  double top_p = 1.0;
  std::uint32_t max_tokens = 256;
  std::string cache_dir = ".dail-cache";
  std::size_t concurrency = 4;
  double rate_limit = 0.0;
};

struct RunArgs {
  DatasetArgs dataset;
  ProviderArgs provider;
  std::string method = "dail";
  std::size_t n = 4;
  std::size_t k = 5;
  double sc_temperature = 0.7;
  double temperature = 0.0;
  double paraphrase_temperature = 1.0;
  std::size_t demos = 1;
  std::uint64_t seed = 0;
  std::string cross_source;
  std::string prompts_dir;
  std::string out;
  bool dry_run = false;
  std::size_t repeats = 1;
};

struct AnalyzeArgs {
  std::vector<std::string> manifests;
  std::vector<std::string> thresholds;
  bool exact_bins = false;
  std::string out_dir = "reports";
  std::vector<std::string> formats = {"text", "csv", "json"};
};

struct ParaphraseArgs {
  DatasetArgs dataset;
  ProviderArgs provider;
  std::size_t n = 4;
  double temperature = 1.0;
  std::string prompts_dir;
  std::string out;
};

struct CacheArgs {
  std::string action;
  std::string cache_dir = ".dail-cache";
};

class Driver {
 public:
  Driver(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int main(int argc, const char* const* argv) {
    CLI::App app{"In-context classification harness with self-paraphrase voting"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    app.add_option("--workdir", workdir_, "Base directory for every relative path")->capture_default_str();
    app.set_config("--config", "", "Config file (TOML/INI) with [run], [analyze], [paraphrase] sections; flags override it");

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Evaluate one method on a dataset");
    run_cmd->fallthrough();
    add_dataset_options(run_cmd, run.dataset);
    add_provider_options(run_cmd, run.provider);
    run_cmd->add_option("--method", run.method, "standard|dail|dail_cross|self_consistency|prompt_ensemble")
        ->check(CLI::IsMember({"standard", "dail", "dail_cross", "self_consistency", "prompt_ensemble"}));
    run_cmd->add_option("--n", run.n, "Paraphrases per sample (dail, dail_cross)");
    run_cmd->add_option("--k", run.k, "Sampled decodes per sample (self_consistency)");
    run_cmd->add_option("--sc-temperature", run.sc_temperature, "Sampling temperature for self_consistency");
    run_cmd->add_option("--temperature", run.temperature, "Inference temperature");
    run_cmd->add_option("--paraphrase-temperature", run.paraphrase_temperature, "Paraphrase temperature");
    run_cmd->add_option("--demos", run.demos, "Demonstrations per label");
    run_cmd->add_option("--seed", run.seed, "Demonstration sampling seed");
    run_cmd->add_option("--cross-source", run.cross_source, "Paraphrase file for dail_cross");
    run_cmd->add_option("--prompts-dir", run.prompts_dir, "Directory overriding prompt fixtures");
    run_cmd->add_option("--out", run.out, "Manifest path (default runs/<dataset>-<method>.json)");
    run_cmd->add_flag("--dry-run", run.dry_run, "Validate and build prompts without calling the provider");
    run_cmd->add_option("--repeats", run.repeats, "Independent repeats, each with its own cache")
        ->check(CLI::PositiveNumber);

    AnalyzeArgs analyze;
    auto* analyze_cmd = app.add_subcommand("analyze", "Accuracy, confidence bins and method comparison");
    analyze_cmd->fallthrough();
    analyze_cmd->add_option("manifests", analyze.manifests, "Manifest files")->required();
    analyze_cmd->add_option("--thresholds", analyze.thresholds, "Confidence thresholds, e.g. 0.6 0.8 1.0");
    analyze_cmd->add_flag("--exact-bins", analyze.exact_bins, "Per-bin instead of cumulative accuracy");
    analyze_cmd->add_option("--out-dir", analyze.out_dir, "Report directory");
    analyze_cmd->add_option("--format", analyze.formats, "text, csv, json")
        ->check(CLI::IsMember({"text", "csv", "json"}));

    ParaphraseArgs para;
    auto* para_cmd = app.add_subcommand("paraphrase", "Write paraphrases for every test sample");
    para_cmd->fallthrough();
    add_dataset_options(para_cmd, para.dataset);
    add_provider_options(para_cmd, para.provider);
    para_cmd->add_option("--n", para.n, "Paraphrases per sample")->check(CLI::PositiveNumber);
    para_cmd->add_option("--temperature", para.temperature, "Paraphrase temperature");
    para_cmd->add_option("--prompts-dir", para.prompts_dir, "Directory overriding prompt fixtures");
    para_cmd->add_option("--out", para.out, "Output file")->required();

    CacheArgs cache;
    auto* cache_cmd = app.add_subcommand("cache", "Inspect or clear a response cache");
    cache_cmd->add_option("action", cache.action, "inspect|clear")
        ->required()
        ->check(CLI::IsMember({"inspect", "clear"}));
    cache_cmd->add_option("--cache-dir", cache.cache_dir, "Cache directory");

    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
      out_ << app.help();
      return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
      out_ << app.help("", CLI::AppFormatMode::All);
      return kExitOk;
    } catch (const CLI::ParseError& e) {
      err_ << "config error: " << e.what() << "\n";
      return kExitConfig;
    }

    if (run_cmd->parsed()) return cmd_run(run, run_cmd->config_to_str(true, false));
    if (analyze_cmd->parsed()) return cmd_analyze(analyze);
    if (para_cmd->parsed()) return cmd_paraphrase(para);
    return cmd_cache(cache);
  }

  int main(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("dail");
    for (const auto& a : args) argv.push_back(a.c_str());
    return main(static_cast<int>(argv.size()), argv.data());
  }

 private:
  static void add_dataset_options(CLI::App* cmd, DatasetArgs& a) {
    cmd->add_option("--dataset", a.path, "Dataset file (line-delimited JSON)")->required();
    cmd->add_option("--name", a.name, "Dataset name (default: file stem)");
    cmd->add_option("--task", a.task, "sentiment|emotion|question|news|topic")
        ->check(CLI::IsMember({"sentiment", "emotion", "question", "news", "topic"}));
    cmd->add_option("--labels", a.labels, "Label-order file, one label per line");
  }

  static void add_provider_options(CLI::App* cmd, ProviderArgs& a) {
    cmd->add_option("--provider", a.kind, "mock|openai")->check(CLI::IsMember({"mock", "openai"}));
    cmd->add_option("--mock-script", a.mock_script, "Mock script file or directory");
    cmd->add_option("--endpoint", a.endpoint, "OpenAI-compatible base URL, e.g. https://host/v1");
    cmd->add_option("--model", a.model, "Model name");
    cmd->add_option("--api-key-env", a.api_key_env, "Environment variable holding the credential");
    cmd->add_option("--top-p", a.top_p, "Nucleus sampling mass");
    cmd->add_option("--max-tokens", a.max_tokens, "Completion token cap");
    cmd->add_option("--cache-dir", a.cache_dir, "Response cache directory");
    cmd->add_option("--concurrency", a.concurrency, "Concurrent samples / in-flight requests")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--rate-limit", a.rate_limit, "Requests per minute, 0 = unlimited");
  }

  std::filesystem::path resolve(const std::string& p) const {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : std::filesystem::path(workdir_) / path;
  }

  Dataset load(const DatasetArgs& a) const {
    DatasetFormat fmt;
    fmt.name = a.name;
    fmt.task_family = parse_task_family(a.task);
    if (!a.labels.empty()) fmt.label_file = resolve(a.labels);
    return load_dataset(resolve(a.path), fmt);
  }

  PromptCatalog catalog(const std::string& prompts_dir) const {
    return prompts_dir.empty() ? PromptCatalog::embedded() : PromptCatalog::with_overrides(resolve(prompts_dir));
  }

  ModelParams model_params(const ProviderArgs& a) const {
    ModelParams m;
    if (!a.model.empty()) m.model = a.model;
    m.top_p = a.top_p;
    m.max_tokens = a.max_tokens;
    return m;
  }

  std::unique_ptr<Provider> make_provider(const ProviderArgs& a, const std::filesystem::path& cache_dir) const {
    std::shared_ptr<Backend> backend;
    if (a.kind == "mock") {
      if (a.mock_script.empty()) throw Error(ErrorCode::kConfigError, "--provider mock needs --mock-script");
      backend = load_mock(resolve(a.mock_script));
    } else {
      if (a.endpoint.empty()) throw Error(ErrorCode::kConfigError, "--provider openai needs --endpoint");
      if (a.model.empty()) throw Error(ErrorCode::kConfigError, "--provider openai needs --model");
      const char* key = std::getenv(a.api_key_env.c_str());
      if (!key || !*key) {
        err_ << "warning: $" << a.api_key_env << " is unset; sending requests without a credential\n";
      }
      backend = std::make_shared<OpenAiCompatibleBackend>(a.endpoint, key ? key : "");
    }
    ProviderOptions opts;
    opts.max_in_flight = a.concurrency;
    opts.requests_per_minute = a.rate_limit;
    return std::make_unique<Provider>(backend, std::make_shared<ResponseCache>(cache_dir), opts);
  }

  static MethodConfig method_config(const RunArgs& a, const std::filesystem::path& cross) {
    MethodConfig c;
    c.method = *parse_method(a.method);
    c.n_paraphrases = a.n;
    c.k_samples = a.k;
    c.sc_temperature = a.sc_temperature;
    c.inference_temperature = a.temperature;
    c.paraphrase_temperature = a.paraphrase_temperature;
    c.per_label_demos = a.demos;
    c.seed = a.seed;
    if (!a.cross_source.empty()) c.cross_paraphrase_source = cross;
    return c;
  }

  int cmd_run(const RunArgs& a, const std::string& effective_config) {
    // Configuration: everything here is checked before any provider call.
    Dataset dataset;
    MethodConfig config;
    std::optional<RunContext> probe;
    std::unique_ptr<Provider> provider;
    PromptCatalog prompts;
    try {
      config = method_config(a, resolve(a.cross_source));
      config.normalized().validate();
      dataset = load(a.dataset);
      prompts = catalog(a.prompts_dir);
      provider = make_provider(a.provider, resolve(a.provider.cache_dir));
      probe.emplace(make_context(dataset, *provider, config, model_params(a.provider), prompts));
    } catch (const Error& e) {
      err_ << "config error: " << e.what() << "\n";
      return kExitConfig;
    }

    if (a.dry_run) {
      const auto prompts_built = plan_prompts(*probe).size();
      out_ << "dry-run method=" << probe->config.label() << " dataset=" << dataset.name
           << " samples=" << dataset.test.size() << " demonstrations=" << probe->demos.items.size()
           << " prompts=" << prompts_built << " provider_calls=" << provider->stats().network_calls << "\n";
      return kExitOk;
    }

    const auto label = probe->config.label();
    const auto out_path = a.out.empty() ? resolve("runs/" + dataset.name + "-" + label + ".json") : resolve(a.out);
    probe.reset();
    provider.reset();

    std::vector<double> accuracies;
    for (std::size_t r = 1; r <= a.repeats; ++r) {
      auto cache_dir = resolve(a.provider.cache_dir);
      auto manifest_path = out_path;
      if (a.repeats > 1) {
        cache_dir /= "repeat-" + std::to_string(r);
        manifest_path.replace_filename(out_path.stem().string() + "-r" + std::to_string(r) + ".json");
      }
      RunManifest manifest;
      try {
        provider = make_provider(a.provider, cache_dir);
        const auto ctx = make_context(dataset, *provider, config, model_params(a.provider), prompts);
        RunOptions opts;
        opts.concurrency = a.provider.concurrency;
        opts.effective_config = effective_config;
        opts.partial_records = manifest_path.string() + ".partial.jsonl";
        manifest = run_experiment(ctx, opts);
        save_manifest(manifest, manifest_path);
        std::filesystem::remove(*opts.partial_records);
      } catch (const Error& e) {
        err_ << "run aborted: " << e.what() << "\n";
        return kExitAborted;
      } catch (const std::exception& e) {
        err_ << "run aborted: " << e.what() << "\n";
        return kExitAborted;
      }
      print_summary(manifest, manifest_path);
      accuracies.push_back(manifest.metrics.accuracy.value());
    }

    if (a.repeats > 1) {
      double mean = 0.0;
      for (double v : accuracies) mean += v;
      mean /= static_cast<double>(accuracies.size());
      ojson j;
      j["method"] = label;
      j["dataset"] = dataset.name;
      j["repeats"] = a.repeats;
      j["accuracies"] = accuracies;
      j["mean_accuracy"] = mean;
      auto summary = out_path;
      summary.replace_filename(out_path.stem().string() + ".repeats.json");
      try {
        detail::write_text_file(summary, j.dump(2) + "\n");
      } catch (const Error& e) {
        err_ << "run aborted: " << e.what() << "\n";
        return kExitAborted;
      }
      out_ << "repeats=" << a.repeats << " mean_accuracy=" << format_decimal(mean, 2) << "\n";
    }
    return kExitOk;
  }

  void print_summary(const RunManifest& m, const std::filesystem::path& path) {
    const auto& s = m.stats;
    const auto pct = s.requests == 0 ? 100.0 : 100.0 * static_cast<double>(s.cache_hits) / static_cast<double>(s.requests);
    out_ << "method=" << m.method.label() << " dataset=" << m.dataset_name << " samples=" << m.metrics.total
         << " accuracy=" << format_decimal(m.metrics.accuracy.value(), 2) << " warnings=" << m.metrics.warnings
         << " failed=" << m.metrics.failed << " cache_hits=" << s.cache_hits << "/" << s.requests << " ("
         << format_decimal(pct, 0) << "%) network_calls=" << s.network_calls << " manifest=" << path.string()
         << "\n";
  }

  int cmd_analyze(const AnalyzeArgs& a) {
    std::vector<RunManifest> manifests;
    std::optional<std::vector<Ratio>> thresholds;
    std::vector<ReportFormat> formats;
    try {
      if (!a.thresholds.empty()) {
        thresholds.emplace();
        for (const auto& t : a.thresholds) {
          auto r = parse_ratio(t);
          if (!r) throw Error(ErrorCode::kInvalidThresholds, "cannot parse threshold '" + t + "'");
          thresholds->push_back(*r);
        }
        validate_thresholds(*thresholds);
      }
      for (const auto& f : a.formats) {
        formats.push_back(f == "text" ? ReportFormat::kTableText
                                      : f == "csv" ? ReportFormat::kDelimited : ReportFormat::kStructured);
      }
      for (const auto& p : a.manifests) manifests.push_back(load_manifest(resolve(p)));

      const auto out_dir = resolve(a.out_dir);
      const auto mode = a.exact_bins ? BinMode::kExact : BinMode::kCumulative;
      for (std::size_t i = 0; i < manifests.size(); ++i) {
        const auto& m = manifests[i];
        const auto t = thresholds ? *thresholds : default_thresholds(m.space.size());
        const auto bins = confidence_bins(m.records, t, mode);
        const auto stem = std::filesystem::path(a.manifests[i]).stem().string();
        emit_report(m, bins, out_dir, stem, formats);
        out_ << stem << ": accuracy=" << format_decimal(m.metrics.accuracy.value(), 4) << "\n" << bins_to_text(bins);
      }
      const auto table = compare_methods(manifests);
      emit_report(table, out_dir, formats);
      out_ << comparison_to_text(table);
    } catch (const Error& e) {
      err_ << "analysis error: " << e.what() << "\n";
      return kExitAnalysis;
    }
    return kExitOk;
  }

  int cmd_paraphrase(const ParaphraseArgs& a) {
    Dataset dataset;
    std::unique_ptr<Provider> provider;
    PromptCatalog prompts;
    try {
      dataset = load(a.dataset);
      prompts = catalog(a.prompts_dir);
      provider = make_provider(a.provider, resolve(a.provider.cache_dir));
    } catch (const Error& e) {
      err_ << "config error: " << e.what() << "\n";
      return kExitConfig;
    }
    try {
      ParaphraseOptions opts{model_params(a.provider), a.temperature};
      const auto entries = paraphrase_dataset(dataset, a.n, *provider, opts, prompts, a.provider.concurrency);
      std::string body;
      std::size_t flagged = 0;
      for (const auto& e : entries) {
        body += paraphrase_entry_line(e) + "\n";
        if (e.error || e.paraphrases.size() < e.requested_n) ++flagged;
      }
      detail::write_text_file(resolve(a.out), body);
      out_ << "paraphrased samples=" << entries.size() << " flagged=" << flagged << " out=" << resolve(a.out).string()
           << "\n";
    } catch (const Error& e) {
      err_ << "run aborted: " << e.what() << "\n";
      return kExitAborted;
    }
    return kExitOk;
  }

  int cmd_cache(const CacheArgs& a) {
    try {
      ResponseCache cache(resolve(a.cache_dir));
      if (a.action == "clear") {
        const auto n = cache.size();
        cache.clear();
        out_ << "cleared " << n << " entries from " << resolve(a.cache_dir).string() << "\n";
        return kExitOk;
      }
      out_ << "entries=" << cache.size() << " skipped_lines=" << cache.skipped_lines() << "\n";
      for (const auto& [provider, n] : cache.counts_by_provider()) out_ << "  " << provider << ": " << n << "\n";
    } catch (const std::exception& e) {
      err_ << "config error: " << e.what() << "\n";
      return kExitConfig;
    }
    return kExitOk;
  }

  std::ostream& out_;
  std::ostream& err_;
  std::string workdir_ = ".";
};

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return Driver(out, err).main(argc, argv);
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  return Driver(out, err).main(args);
}

}  // namespace dail::cli

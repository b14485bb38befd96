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

// Chat-completion client front end: request/response types, the cache key,
// the on-disk response cache, a token-bucket rate limiter, and Provider,
// which wraps any Backend with caching, retries, and an in-flight limit.

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "dail/core.hpp"
#include "dail/digest.hpp"
#include "dail/error.hpp"
#include "json.hpp"

namespace dail {

enum class Role { kSystem, kUser, kAssistant };

constexpr std::string_view to_string(Role r) {
  switch (r) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "user";
}

struct Message {
  Role role = Role::kUser;
  std::string content;

  bool operator==(const Message&) const = default;
};

struct CompletionRequest {
  std::string model;
  std::vector<Message> messages;
  double temperature = 0.0;
  double top_p = 1.0;
  std::uint32_t max_tokens = 256;
  // Distinguishes repeated stochastic draws of the same prompt.
  std::uint32_t sample_index = 0;

  void validate() const {
    if (messages.empty()) throw Error(ErrorCode::kInvalidRequest, "no messages");
    if (messages.front().role == Role::kAssistant) {
      throw Error(ErrorCode::kInvalidRequest, "first message must be system or user");
    }
    if (temperature < 0.0) throw Error(ErrorCode::kInvalidRequest, "temperature < 0");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(ErrorCode::kInvalidRequest, "top_p outside (0,1]");
  }

  const std::string& last_content() const { return messages.back().content; }
};

// Model-side knobs shared by every request a run issues.
struct ModelParams {
  std::string model = "mock-model";
  double top_p = 1.0;
  std::uint32_t max_tokens = 256;
};

struct CompletionResponse {
  std::string text;
  bool from_cache = false;
  std::int64_t latency_ms = 0;
  std::string provider_id;
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

// Canonical serialization: nlohmann::json objects keep keys sorted, message
// content goes in byte-for-byte.
inline std::string canonical_request(std::string_view provider_id, const CompletionRequest& req) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : req.messages) {
    messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  const nlohmann::json j = {
      {"provider_id", provider_id}, {"model", req.model},       {"messages", messages},
      {"temperature", req.temperature}, {"top_p", req.top_p},   {"max_tokens", req.max_tokens},
      {"sample_index", req.sample_index},
  };
  return j.dump();
}

struct CacheKey {
  std::string digest;

  static CacheKey of(std::string_view provider_id, const CompletionRequest& req) {
    return {sha256_hex(canonical_request(provider_id, req))};
  }

  bool operator==(const CacheKey&) const = default;
};

// ---------------------------------------------------------------------------
// ResponseCache
// ---------------------------------------------------------------------------

struct CacheRecord {
  std::string key;
  std::string text;
  std::string provider_id;
  std::string timestamp;
};

// Key -> response store. With a directory it is backed by an append-only
// `responses.jsonl`; a torn trailing line from an interrupted write is
// skipped on load.
class ResponseCache {
 public:
  static constexpr const char* kFileName = "responses.jsonl";

  ResponseCache() = default;

  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(*dir_);
    std::ifstream in(file());
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        CacheRecord r{j.at("key"), j.at("text"), j.value("provider_id", ""), j.value("timestamp", "")};
        entries_[r.key] = std::move(r);
      } catch (const nlohmann::json::exception&) {
        ++skipped_;
      }
    }
  }

  std::optional<CacheRecord> get(const CacheKey& key) const {
    std::lock_guard lock(mu_);
    if (auto it = entries_.find(key.digest); it != entries_.end()) return it->second;
    return std::nullopt;
  }

  void put(CacheRecord record) {
    std::lock_guard lock(mu_);
    if (dir_) {
      std::ofstream out(file(), std::ios::app | std::ios::binary);
      if (!out) throw Error(ErrorCode::kIoError, "cannot append to " + file().string());
      nlohmann::ordered_json j;
      j["key"] = record.key;
      j["text"] = record.text;
      j["provider_id"] = record.provider_id;
      j["timestamp"] = record.timestamp;
      out << j.dump() << '\n';
      out.flush();
    }
    entries_[record.key] = std::move(record);
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

  std::size_t skipped_lines() const { return skipped_; }

  std::map<std::string, std::size_t> counts_by_provider() const {
    std::lock_guard lock(mu_);
    std::map<std::string, std::size_t> out;
    for (const auto& [_, r] : entries_) ++out[r.provider_id];
    return out;
  }

  void clear() {
    std::lock_guard lock(mu_);
    entries_.clear();
    if (dir_) std::filesystem::remove(file());
  }

  const std::optional<std::filesystem::path>& directory() const { return dir_; }

 private:
  std::filesystem::path file() const { return *dir_ / kFileName; }

  std::optional<std::filesystem::path> dir_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, CacheRecord> entries_;
  std::size_t skipped_ = 0;
};

// ---------------------------------------------------------------------------
// RateLimiter: token bucket refilled at requests_per_minute, capacity `burst`.
// A rate of 0 disables limiting.
// ---------------------------------------------------------------------------

class RateLimiter {
 public:
  using Clock = std::chrono::steady_clock;

  explicit RateLimiter(double requests_per_minute = 0.0, double burst = 1.0)
      : rate_per_sec_(requests_per_minute / 60.0),
        capacity_(std::max(1.0, burst)),
        tokens_(capacity_),
        last_(Clock::now()) {}

  void acquire() {
    if (rate_per_sec_ <= 0.0) return;
    std::unique_lock lock(mu_);
    for (;;) {
      const auto now = Clock::now();
      tokens_ = std::min(capacity_,
                         tokens_ + std::chrono::duration<double>(now - last_).count() * rate_per_sec_);
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      const auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_per_sec_);
      lock.unlock();
      std::this_thread::sleep_for(wait);
      lock.lock();
    }
  }

 private:
  double rate_per_sec_;
  double capacity_;
  double tokens_;
  Clock::time_point last_;
  std::mutex mu_;
};

// Counting gate for concurrent outbound calls.
class InFlightGate {
 public:
  explicit InFlightGate(std::size_t limit) : free_(std::max<std::size_t>(1, limit)) {}

  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return free_ > 0; });
    --free_;
  }
  void release() {
    {
      std::lock_guard lock(mu_);
      ++free_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t free_;
};

// ---------------------------------------------------------------------------
// Backends
// ---------------------------------------------------------------------------

enum class TransientKind { kThrottled, kServerError, kTransport };

// A failure worth retrying. Anything else a backend throws is final.
class TransientError : public std::runtime_error {
 public:
  TransientError(TransientKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  TransientKind kind() const { return kind_; }

 private:
  TransientKind kind_;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;
  // One network round trip. Throws TransientError or dail::Error.
  virtual std::string call(const CompletionRequest& request) = 0;
};

struct ProviderOptions {
  std::size_t max_in_flight = 4;
  double requests_per_minute = 0.0;
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{500};
  double backoff_factor = 2.0;
  // Replaced in tests to avoid real sleeps.
  std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  };
};

struct ProviderStats {
  std::uint64_t requests = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t network_calls = 0;
};

// Backend + cache + retries. complete() is safe to call concurrently;
// concurrent identical requests share one network call.
class Provider {
 public:
  Provider(std::shared_ptr<Backend> backend, std::shared_ptr<ResponseCache> cache,
           ProviderOptions options = {})
      : backend_(std::move(backend)),
        cache_(cache ? std::move(cache) : std::make_shared<ResponseCache>()),
        options_(std::move(options)),
        limiter_(options_.requests_per_minute),
        gate_(options_.max_in_flight),
        id_(backend_->id()) {}

  const std::string& id() const { return id_; }

  CompletionResponse complete(const CompletionRequest& request) {
    request.validate();
    requests_.fetch_add(1);
    const auto key = CacheKey::of(id_, request);

    std::promise<std::string> promise;
    std::shared_future<std::string> pending;
    bool owner = false;
    {
      std::lock_guard lock(mu_);
      if (auto hit = cache_->get(key)) {
        cache_hits_.fetch_add(1);
        return {hit->text, true, 0, id_};
      }
      if (auto it = pending_.find(key.digest); it != pending_.end()) {
        pending = it->second;
      } else {
        pending = promise.get_future().share();
        pending_.emplace(key.digest, pending);
        owner = true;
      }
    }
    if (!owner) {
      auto text = pending.get();
      cache_hits_.fetch_add(1);
      return {std::move(text), true, 0, id_};
    }

    const auto start = std::chrono::steady_clock::now();
    try {
      auto text = call_with_retries(request);
      cache_->put({key.digest, text, id_, utc_timestamp()});
      promise.set_value(text);
      erase_pending(key);
      const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - start)
                          .count();
      return {std::move(text), false, ms, id_};
    } catch (...) {
      promise.set_exception(std::current_exception());
      erase_pending(key);
      throw;
    }
  }

  ProviderStats stats() const {
    return {requests_.load(), cache_hits_.load(), network_calls_.load()};
  }

  ResponseCache& cache() { return *cache_; }

 private:
  void erase_pending(const CacheKey& key) {
    std::lock_guard lock(mu_);
    pending_.erase(key.digest);
  }

  std::string call_with_retries(const CompletionRequest& request) {
    auto backoff = options_.initial_backoff;
    std::optional<TransientKind> last;
    std::string last_what;
    for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
      limiter_.acquire();
      gate_.acquire();
      network_calls_.fetch_add(1);
      try {
        auto text = backend_->call(request);
        gate_.release();
        return text;
      } catch (const TransientError& e) {
        gate_.release();
        last = e.kind();
        last_what = e.what();
      } catch (...) {
        gate_.release();
        throw;
      }
      if (attempt < options_.max_attempts) {
        options_.sleep(backoff);
        backoff = std::chrono::milliseconds(
            static_cast<std::int64_t>(static_cast<double>(backoff.count()) * options_.backoff_factor));
      }
    }
    const auto detail = std::to_string(options_.max_attempts) + " attempts failed, last: " + last_what;
    if (last == TransientKind::kTransport) throw Error(ErrorCode::kTransportError, detail);
    throw Error(ErrorCode::kRateLimitedExhausted, detail);
  }

  std::shared_ptr<Backend> backend_;
  std::shared_ptr<ResponseCache> cache_;
  ProviderOptions options_;
  RateLimiter limiter_;
  InFlightGate gate_;
  std::string id_;

  std::mutex mu_;
  std::unordered_map<std::string, std::shared_future<std::string>> pending_;
  std::atomic<std::uint64_t> requests_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
  std::atomic<std::uint64_t> network_calls_{0};
};

}  // namespace dail

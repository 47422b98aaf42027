// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Per-option log probabilities from a chat-completions endpoint or from the
// synthetic posterior, behind a query cache.

#ifndef FAIRPOST_GATEWAY_H_
#define FAIRPOST_GATEWAY_H_

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fairpost/bundle.h"
#include "fairpost/datahub.h"
#include "fairpost/promptkit.h"
#include "json.hpp"

namespace fairpost::gateway {

struct GatewayConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o";
  int max_in_flight = 4;
  int retry_budget = 5;
  double backoff_base_seconds = 1.0;
  double backoff_factor = 2.0;
  double backoff_max_seconds = 60.0;
  double timeout_seconds = 60.0;
  int top_logprobs = 20;
  double fill_value = -50.0;
  std::string cache_path;  // empty keeps the cache in memory
  std::string api_key_env = "OPENAI_API_KEY";

  void Validate() const;
  static GatewayConfig FromJson(const nlohmann::json& j);
};

// Token text -> log probability, as returned for the first output token.
using TokenLogprobs = std::map<std::string, double>;

class TransportError : public Error {
 public:
  TransportError(const std::string& message, bool retryable, int status = 0)
      : Error(ErrorKind::kTransport, message),
        retryable_(retryable),
        status_(status) {}
  bool retryable() const { return retryable_; }
  int status() const { return status_; }

 private:
  bool retryable_;
  int status_;
};

struct CacheEntry {
  std::string query_id;
  std::string model;
  std::string prompt_hash;
  TokenLogprobs logprobs;
  std::string created_at;
};

// Append-only JSON Lines journal. Lines that fail to parse (for example a
// line truncated by a crash) are skipped on load.
class LogitCache {
 public:
  explicit LogitCache(std::string path = "");

  std::optional<CacheEntry> Lookup(const std::string& query_id) const;
  void Store(const CacheEntry& entry);
  size_t size() const;
  int skipped_lines() const { return skipped_lines_; }

 private:
  std::string path_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, CacheEntry> entries_;
  int skipped_lines_ = 0;
};

struct BackendRequest {
  const promptkit::PlannedQuery& query;
  const promptkit::PromptTemplate& tmpl;
  const datahub::Example& example;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // Returns the first-token top alternatives. Throws TransportError for
  // network or HTTP failures and a capability error when the response
  // carries no log probabilities.
  virtual TokenLogprobs Complete(const BackendRequest& request) = 0;
};

// OpenAI-compatible chat completions. Reads the API key from the
// environment at construction and throws a config error when it is unset.
class OpenAIBackend : public Backend {
 public:
  explicit OpenAIBackend(const GatewayConfig& config);
  TokenLogprobs Complete(const BackendRequest& request) override;

  static nlohmann::json RequestBody(const GatewayConfig& config,
                                    const std::string& prompt);
  // Extracts choices[0].logprobs.content[0] top alternatives.
  static TokenLogprobs ParseResponse(const std::string& body);

 private:
  GatewayConfig config_;
  std::string api_key_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;
};

// Exact synthetic log posteriors plus seeded Gaussian noise.
class OracleBackend : public Backend {
 public:
  OracleBackend(datahub::SyntheticPosterior posterior, double noise_scale,
                uint64_t seed);
  TokenLogprobs Complete(const BackendRequest& request) override;

  // Noise-free log probabilities over the targets of a query kind.
  std::vector<double> ExactTargets(const datahub::Example& example,
                                   promptkit::TargetKind kind,
                                   std::optional<int> condition,
                                   int indicator) const;

 private:
  datahub::SyntheticPosterior posterior_;
  double noise_scale_;
  uint64_t seed_;
};

// True when the token, stripped of surrounding whitespace, equals the
// letter. Duplicated matches keep the larger log probability.
std::map<char, double> MatchLetters(const TokenLogprobs& tokens,
                                    const std::vector<promptkit::Option>& options);

// Dense vector in option order with absent letters set to fill_value.
std::vector<double> FillMissing(const std::map<char, double>& raw,
                                const std::vector<promptkit::Option>& options,
                                double fill_value);

// Places one query's option values into the bundle slot for its kind.
void AssignToBundle(const promptkit::ElicitationPlan& plan,
                    const promptkit::PlannedQuery& query,
                    const std::vector<double>& by_option,
                    double fill_value, LogitBundle* bundle);

struct GatewayStats {
  std::atomic<int> network_calls{0};
  std::atomic<int> cache_hits{0};
  std::atomic<int> retries{0};
};

struct Failure {
  std::string example_id;
  std::string query_id;
  ErrorKind kind;
  std::string message;
};

struct FailureReport {
  std::vector<Failure> failures;
  // Queries whose response matched none of the option letters.
  std::vector<std::string> unmatched;
  bool ok() const { return failures.empty(); }
  nlohmann::json ToJson() const;
};

struct CollectResult {
  // Examples with a failed query are left out.
  std::vector<LogitBundle> bundles;
  FailureReport report;
};

class Gateway {
 public:
  Gateway(GatewayConfig config, std::unique_ptr<Backend> backend);

  // Matched option letters for one query; consults and fills the cache.
  std::map<char, double> Fetch(const promptkit::PlannedQuery& query,
                               const promptkit::PromptTemplate& tmpl,
                               const datahub::Example& example);

  CollectResult Collect(const promptkit::ElicitationPlan& plan,
                        const std::vector<datahub::Example>& examples);

  const GatewayStats& stats() const { return stats_; }
  const LogitCache& cache() const { return cache_; }
  const GatewayConfig& config() const { return config_; }
  // Replaces the sleep used between retries (tests run without waiting).
  void set_sleeper(std::function<void(double)> sleeper) {
    sleeper_ = std::move(sleeper);
  }

 private:
  TokenLogprobs CompleteWithRetry(const BackendRequest& request);

  GatewayConfig config_;
  std::unique_ptr<Backend> backend_;
  LogitCache cache_;
  GatewayStats stats_;
  std::function<void(double)> sleeper_;
};

// Bundle for one synthetic example under `plan`, straight from the oracle.
LogitBundle OracleLogits(const datahub::SyntheticPosterior& posterior,
                         const datahub::Example& example,
                         const promptkit::ElicitationPlan& plan,
                         double noise_scale, uint64_t seed,
                         double fill_value = -50.0);

std::string UtcTimestamp();

}  // namespace fairpost::gateway

#endif  // FAIRPOST_GATEWAY_H_

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

#include "fairpost/gateway.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <random>
#include <thread>

#include "httplib.h"

namespace fairpost::gateway {
namespace {

using nlohmann::json;
using promptkit::Option;
using promptkit::PlannedQuery;
using promptkit::PromptTemplate;
using promptkit::Strategy;
using promptkit::TargetKind;

// Oracle log probabilities are floored so an impossible cell stays finite.
constexpr double kOracleFloor = -100.0;

std::string_view Trim(std::string_view s) {
  const auto ws = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
           c == '\v';
  };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

json EntryToJson(const CacheEntry& e) {
  json lp = json::object();
  for (const auto& [token, v] : e.logprobs) lp[token] = v;
  return {{"query_id", e.query_id},     {"model", e.model},
          {"prompt_hash", e.prompt_hash}, {"logprobs", lp},
          {"created_at", e.created_at}};
}

int TargetCount(TargetKind kind, int k, int g) {
  switch (kind) {
    case TargetKind::kY:
    case TargetKind::kYGivenA:
      return k;
    case TargetKind::kA:
    case TargetKind::kAGivenY:
      return g;
    case TargetKind::kAYJoint:
      return g * k;
    case TargetKind::kAIndicator:
      return 2;
  }
  return 0;
}

}  // namespace

void GatewayConfig::Validate() const {
  if (endpoint.empty()) throw ConfigError("gateway.endpoint is empty");
  if (model.empty()) throw ConfigError("gateway.model is empty");
  if (max_in_flight < 1) throw ConfigError("gateway.max_in_flight must be >= 1");
  if (retry_budget < 0) throw ConfigError("gateway.retry_budget must be >= 0");
  if (backoff_base_seconds < 0 || backoff_factor < 1 || backoff_max_seconds < 0)
    throw ConfigError("gateway backoff schedule is invalid");
  if (top_logprobs < 1 || top_logprobs > 20)
    throw ConfigError("gateway.top_logprobs must be in [1, 20]");
  if (!std::isfinite(fill_value) || fill_value > -20.0)
    throw ConfigError("gateway.fill_value must be finite and <= -20");
}

GatewayConfig GatewayConfig::FromJson(const json& j) {
  GatewayConfig c;
  try {
    c.endpoint = j.value("endpoint", c.endpoint);
    c.model = j.value("model", c.model);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    c.retry_budget = j.value("retry_budget", c.retry_budget);
    c.backoff_base_seconds = j.value("backoff_base_seconds", c.backoff_base_seconds);
    c.backoff_factor = j.value("backoff_factor", c.backoff_factor);
    c.backoff_max_seconds = j.value("backoff_max_seconds", c.backoff_max_seconds);
    c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
    c.top_logprobs = j.value("top_logprobs", c.top_logprobs);
    c.fill_value = j.value("fill_value", c.fill_value);
    c.cache_path = j.value("cache_path", c.cache_path);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("gateway config: ") + e.what());
  }
  c.Validate();
  return c;
}

// ---------------------------------------------------------------- cache

LogitCache::LogitCache(std::string path) : path_(std::move(path)) {
  if (path_.empty()) return;
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      CacheEntry e;
      e.query_id = j.at("query_id").get<std::string>();
      e.model = j.at("model").get<std::string>();
      e.prompt_hash = j.at("prompt_hash").get<std::string>();
      for (const auto& [token, v] : j.at("logprobs").items())
        e.logprobs[token] = v.get<double>();
      e.created_at = j.value("created_at", std::string());
      entries_[e.query_id] = std::move(e);
    } catch (const json::exception&) {
      ++skipped_lines_;
    }
  }
}

std::optional<CacheEntry> LogitCache::Lookup(const std::string& query_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = entries_.find(query_id);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void LogitCache::Store(const CacheEntry& entry) {
  std::lock_guard<std::mutex> lock(mu_);
  if (!path_.empty()) {
    // One write per line, flushed before the entry becomes visible, so a
    // crash leaves at most one partial trailing line.
    const std::string line = EntryToJson(entry).dump() + "\n";
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw DataError("cannot append to cache " + path_);
    out.write(line.data(), line.size());
    out.flush();
    if (!out) throw DataError("cache write failed: " + path_);
  }
  entries_[entry.query_id] = entry;
}

size_t LogitCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_.size();
}

// ---------------------------------------------------------------- backends

OpenAIBackend::OpenAIBackend(const GatewayConfig& config) : config_(config) {
  const char* key = std::getenv(config.api_key_env.c_str());
  if (key == nullptr || *key == '\0')
    throw ConfigError("environment variable " + config.api_key_env +
                      " is not set; it must hold the API key");
  api_key_ = key;
  const std::string& url = config.endpoint;
  const size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("gateway.endpoint must be an absolute URL: " + url);
  const size_t path_start = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

json OpenAIBackend::RequestBody(const GatewayConfig& config,
                                const std::string& prompt) {
  return {{"model", config.model},
          {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
          {"max_tokens", 1},
          {"temperature", 0},
          {"logprobs", true},
          {"top_logprobs", config.top_logprobs}};
}

TokenLogprobs OpenAIBackend::ParseResponse(const std::string& body) {
  static const char* kHint =
      "; this endpoint does not expose token log probabilities (sampling "
      "or verbal elicitation would be needed and is not supported)";
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed response body: ") + e.what(),
                         false);
  }
  const json* content = nullptr;
  try {
    const json& lp = j.at("choices").at(0).at("logprobs");
    if (!lp.is_null() && lp.contains("content") && lp["content"].is_array() &&
        !lp["content"].empty())
      content = &lp["content"][0];
  } catch (const json::exception&) {
  }
  if (content == nullptr || !content->contains("top_logprobs"))
    throw Error(ErrorKind::kCapability,
                std::string("response carries no logprob data") + kHint);
  TokenLogprobs out;
  try {
    auto add = [&](const json& alt) {
      const std::string token = alt.at("token").get<std::string>();
      const double v = alt.at("logprob").get<double>();
      auto it = out.find(token);
      if (it == out.end() || v > it->second) out[token] = v;
    };
    for (const json& alt : content->at("top_logprobs")) add(alt);
    if (content->contains("token") && content->contains("logprob")) add(*content);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kCapability,
                std::string("unreadable logprob entry: ") + e.what());
  }
  return out;
}

TokenLogprobs OpenAIBackend::Complete(const BackendRequest& request) {
  httplib::Client client(origin_);
  const auto secs = std::chrono::duration<double>(config_.timeout_seconds);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(secs);
  client.set_connection_timeout(micros.count() / 1000000,
                                micros.count() % 1000000);
  client.set_read_timeout(micros.count() / 1000000, micros.count() % 1000000);
  httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};
  const std::string body = RequestBody(config_, request.query.prompt).dump();
  auto res = client.Post(path_, headers, body, "application/json");
  if (!res)
    throw TransportError("request to " + config_.endpoint + " failed: " +
                             httplib::to_string(res.error()),
                         true);
  if (res->status == 429 || res->status >= 500)
    throw TransportError("HTTP " + std::to_string(res->status), true,
                         res->status);
  if (res->status != 200)
    throw TransportError("HTTP " + std::to_string(res->status) + ": " +
                             res->body.substr(0, 200),
                         false, res->status);
  return ParseResponse(res->body);
}

OracleBackend::OracleBackend(datahub::SyntheticPosterior posterior,
                             double noise_scale, uint64_t seed)
    : posterior_(std::move(posterior)), noise_scale_(noise_scale), seed_(seed) {}

std::vector<double> OracleBackend::ExactTargets(const datahub::Example& example,
                                                TargetKind kind,
                                                std::optional<int> condition,
                                                int indicator) const {
  const datahub::SyntheticSpec& spec = posterior_.spec();
  const int k = spec.num_classes, cells = spec.num_group_cells();
  const std::vector<double> lj =
      posterior_.LogJoint(datahub::FeatureVector(example, spec.dim));
  auto at = [&](int cell, int c) { return lj[cell * k + c]; };
  std::vector<double> out;
  std::vector<double> buf;
  switch (kind) {
    case TargetKind::kAYJoint:
      return lj;
    case TargetKind::kY:
      for (int c = 0; c < k; ++c) {
        buf.clear();
        for (int a = 0; a < cells; ++a) buf.push_back(at(a, c));
        out.push_back(LogSumExp(buf));
      }
      return out;
    case TargetKind::kA:
      for (int a = 0; a < cells; ++a) {
        buf.assign(lj.begin() + a * k, lj.begin() + (a + 1) * k);
        out.push_back(LogSumExp(buf));
      }
      return out;
    case TargetKind::kAGivenY: {
      const int c = condition.value();
      for (int a = 0; a < cells; ++a) out.push_back(at(a, c));
      const double lse = LogSumExp(out);
      for (double& v : out) v -= lse;
      return out;
    }
    case TargetKind::kYGivenA: {
      const int a = condition.value();
      for (int c = 0; c < k; ++c) out.push_back(at(a, c));
      const double lse = LogSumExp(out);
      for (double& v : out) v -= lse;
      return out;
    }
    case TargetKind::kAIndicator: {
      std::vector<double> in, not_in;
      for (int mask = 0; mask < cells; ++mask)
        for (int c = 0; c < k; ++c)
          (((mask >> indicator) & 1) ? in : not_in).push_back(at(mask, c));
      return {LogSumExp(not_in), LogSumExp(in)};
    }
  }
  return out;
}

TokenLogprobs OracleBackend::Complete(const BackendRequest& request) {
  std::vector<double> targets =
      ExactTargets(request.example, request.query.kind,
                   request.query.condition_index, request.tmpl.indicator());
  std::mt19937_64 rng(DeriveSeed(seed_, request.example.id + "/" +
                                            request.query.query_id));
  std::normal_distribution<double> noise(0.0, 1.0);
  TokenLogprobs out;
  for (const Option& o : request.tmpl.options()) {
    double v = targets.at(o.target);
    if (noise_scale_ > 0) v += noise_scale_ * noise(rng);
    out[std::string(1, o.letter)] = std::max(v, kOracleFloor);
  }
  return out;
}

// ---------------------------------------------------------------- matching

std::map<char, double> MatchLetters(const TokenLogprobs& tokens,
                                    const std::vector<Option>& options) {
  std::map<char, double> out;
  for (const auto& [token, v] : tokens) {
    const std::string_view t = Trim(token);
    if (t.size() != 1) continue;
    for (const Option& o : options) {
      if (t[0] != o.letter) continue;
      auto it = out.find(o.letter);
      if (it == out.end() || v > it->second) out[o.letter] = v;
    }
  }
  return out;
}

std::vector<double> FillMissing(const std::map<char, double>& raw,
                                const std::vector<Option>& options,
                                double fill_value) {
  if (options.empty()) throw ConfigError("no answer options");
  std::vector<double> out;
  out.reserve(options.size());
  for (const Option& o : options) {
    auto it = raw.find(o.letter);
    out.push_back(it == raw.end() ? fill_value : it->second);
  }
  return out;
}

void AssignToBundle(const promptkit::ElicitationPlan& plan,
                    const PlannedQuery& query,
                    const std::vector<double>& by_option, double fill_value,
                    LogitBundle* b) {
  const int k = plan.num_classes, g = plan.num_groups;
  const PromptTemplate& tmpl = plan.templates.at(query.template_index);
  std::vector<double> v(TargetCount(tmpl.kind(), k, g), fill_value);
  for (size_t i = 0; i < tmpl.options().size(); ++i) {
    const int target = tmpl.options()[i].target;
    if (target < static_cast<int>(v.size())) v[target] = by_option.at(i);
  }
  switch (tmpl.kind()) {
    case TargetKind::kY:
      b->q_y = std::move(v);
      break;
    case TargetKind::kA:
      b->q_a = std::move(v);
      break;
    case TargetKind::kAYJoint:
      b->q_ay = std::move(v);
      break;
    case TargetKind::kAGivenY:
      if (!b->q_a_given_y) b->q_a_given_y.emplace(k);
      (*b->q_a_given_y).at(query.condition_index.value()) = std::move(v);
      break;
    case TargetKind::kYGivenA:
      if (!b->q_y_given_a) b->q_y_given_a.emplace(g);
      (*b->q_y_given_a).at(query.condition_index.value()) = std::move(v);
      break;
    case TargetKind::kAIndicator:
      if (!b->q_a_ind) b->q_a_ind.emplace(g);
      (*b->q_a_ind).at(tmpl.indicator()) = {v[0], v[1]};
      break;
  }
}

json FailureReport::ToJson() const {
  json f = json::array();
  for (const Failure& x : failures)
    f.push_back({{"example_id", x.example_id},
                 {"query_id", x.query_id},
                 {"kind", ErrorKindName(x.kind)},
                 {"message", x.message}});
  return {{"failures", f}, {"unmatched", unmatched}};
}

std::string UtcTimestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------- gateway

Gateway::Gateway(GatewayConfig config, std::unique_ptr<Backend> backend)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      cache_(config_.cache_path),
      sleeper_([](double s) {
        std::this_thread::sleep_for(std::chrono::duration<double>(s));
      }) {
  config_.Validate();
}

TokenLogprobs Gateway::CompleteWithRetry(const BackendRequest& request) {
  for (int attempt = 0;; ++attempt) {
    try {
      ++stats_.network_calls;
      return backend_->Complete(request);
    } catch (const TransportError& e) {
      if (!e.retryable() || attempt >= config_.retry_budget) {
        if (e.retryable())
          throw TransportError(std::string(e.what()) + " (retry budget of " +
                                   std::to_string(config_.retry_budget) +
                                   " exhausted)",
                               false, e.status());
        throw;
      }
      ++stats_.retries;
      sleeper_(std::min(config_.backoff_max_seconds,
                        config_.backoff_base_seconds *
                            std::pow(config_.backoff_factor, attempt)));
    }
  }
}

std::map<char, double> Gateway::Fetch(const PlannedQuery& query,
                                      const PromptTemplate& tmpl,
                                      const datahub::Example& example) {
  const std::string prompt_hash = Sha256Hex(query.prompt);
  std::optional<CacheEntry> hit = cache_.Lookup(query.query_id);
  if (hit && hit->model == config_.model && hit->prompt_hash == prompt_hash) {
    ++stats_.cache_hits;
    return MatchLetters(hit->logprobs, tmpl.options());
  }
  CacheEntry e;
  e.query_id = query.query_id;
  e.model = config_.model;
  e.prompt_hash = prompt_hash;
  e.logprobs = CompleteWithRetry({query, tmpl, example});
  e.created_at = UtcTimestamp();
  cache_.Store(e);
  return MatchLetters(e.logprobs, tmpl.options());
}

CollectResult Gateway::Collect(const promptkit::ElicitationPlan& plan,
                               const std::vector<datahub::Example>& examples) {
  plan.Validate();
  struct Task {
    size_t example;
    PlannedQuery query;
    std::map<char, double> letters;
    std::optional<Failure> failure;
  };
  std::vector<Task> tasks;
  for (size_t i = 0; i < examples.size(); ++i)
    for (PlannedQuery& q : promptkit::PlanQueries(plan, examples[i]))
      tasks.push_back({i, std::move(q), {}, std::nullopt});

  std::atomic<size_t> next{0};
  std::atomic<bool> abort{false};
  auto worker = [&] {
    for (;;) {
      if (abort.load()) return;
      const size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      Task& task = tasks[t];
      const datahub::Example& ex = examples[task.example];
      try {
        task.letters =
            Fetch(task.query, plan.templates.at(task.query.template_index), ex);
      } catch (const Error& e) {
        task.failure = Failure{ex.id, task.query.query_id, e.kind(), e.what()};
        // A capability failure repeats for every query; stop early.
        if (e.kind() == ErrorKind::kCapability) abort.store(true);
      } catch (const std::exception& e) {
        task.failure =
            Failure{ex.id, task.query.query_id, ErrorKind::kData, e.what()};
      }
    }
  };
  const int threads =
      std::max(1, std::min<int>(config_.max_in_flight, tasks.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  CollectResult result;
  std::vector<LogitBundle> bundles(examples.size());
  std::vector<bool> failed(examples.size(), false);
  for (size_t i = 0; i < examples.size(); ++i) {
    bundles[i].example_id = examples[i].id;
    bundles[i].strategy = plan.strategy;
    bundles[i].swapped = plan.swapped;
    bundles[i].provenance.model = config_.model;
    bundles[i].provenance.timestamp = UtcTimestamp();
  }
  for (size_t t = 0; t < tasks.size(); ++t) {
    Task& task = tasks[t];
    if (task.failure || t >= next.load()) {
      if (!task.failure)
        task.failure = Failure{examples[task.example].id, task.query.query_id,
                               ErrorKind::kCapability,
                               "not attempted after a capability failure"};
      failed[task.example] = true;
      result.report.failures.push_back(*task.failure);
      continue;
    }
    const PromptTemplate& tmpl = plan.templates.at(task.query.template_index);
    if (task.letters.empty()) result.report.unmatched.push_back(task.query.query_id);
    LogitBundle& b = bundles[task.example];
    b.provenance.prompt_hashes.push_back(Sha256Hex(task.query.prompt));
    AssignToBundle(plan, task.query,
                   FillMissing(task.letters, tmpl.options(), config_.fill_value),
                   config_.fill_value, &b);
  }
  for (size_t i = 0; i < examples.size(); ++i)
    if (!failed[i]) result.bundles.push_back(std::move(bundles[i]));
  return result;
}

LogitBundle OracleLogits(const datahub::SyntheticPosterior& posterior,
                         const datahub::Example& example,
                         const promptkit::ElicitationPlan& plan,
                         double noise_scale, uint64_t seed, double fill_value) {
  OracleBackend backend(posterior, noise_scale, seed);
  LogitBundle b;
  b.example_id = example.id;
  b.strategy = plan.strategy;
  b.swapped = plan.swapped;
  b.provenance.model = "oracle";
  for (const PlannedQuery& q : promptkit::PlanQueries(plan, example)) {
    const PromptTemplate& tmpl = plan.templates.at(q.template_index);
    const TokenLogprobs raw = backend.Complete({q, tmpl, example});
    b.provenance.prompt_hashes.push_back(Sha256Hex(q.prompt));
    AssignToBundle(plan, q,
                   FillMissing(MatchLetters(raw, tmpl.options()),
                               tmpl.options(), fill_value),
                   fill_value, &b);
  }
  return b;
}

}  // namespace fairpost::gateway

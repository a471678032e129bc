#pragma once

// Uniform completion interface over two backends: a live HTTP
// chat-completion endpoint and a deterministic record/replay fixture store.
// Every request has a canonical content hash so recorded exchanges can be
// replayed by key, independent of call order.

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "skg/error.hpp"
#include "skg/http.hpp"
#include "skg/util.hpp"

namespace skg {

inline constexpr const char* kApiKeyEnvVar = "SKG_LLM_API_KEY";

struct LlmRequest {
  std::string model;
  double temperature = 0.0;  // [0, 2]
  std::string system;
  std::string user;
  size_t max_output_tokens = 2048;
};

enum class FinishReason { Normal, Truncated, Filtered };

inline const char* finish_reason_name(FinishReason r) {
  switch (r) {
    case FinishReason::Normal: return "normal";
    case FinishReason::Truncated: return "truncated";
    case FinishReason::Filtered: return "filtered";
  }
  return "normal";
}

inline FinishReason finish_reason_from(const std::string& s) {
  if (s == "truncated") return FinishReason::Truncated;
  if (s == "filtered") return FinishReason::Filtered;
  return FinishReason::Normal;
}

struct TokenUsage {
  size_t prompt_tokens = 0;
  size_t completion_tokens = 0;
};

struct LlmResponse {
  std::string content;
  FinishReason finish_reason = FinishReason::Normal;
  std::optional<TokenUsage> usage;
};

struct LlmExchange {
  std::string request_hash;  // 64 hex digits, recomputable from request
  LlmRequest request;
  LlmResponse response;
  std::string recorded_at;  // ISO-8601
};

inline void validate_request(const LlmRequest& req) {
  if (trim(req.system).empty() || trim(req.user).empty())
    fail(Errc::BadRunConfig, "request system and user text must be non-empty");
  if (req.temperature < 0.0 || req.temperature > 2.0)
    fail(Errc::BadRunConfig, "temperature out of range [0,2]");
}

// Canonical serialization: fixed field order, UTF-8, no insignificant
// whitespace, temperature at fixed 3-decimal precision. SHA-256 over that.
inline std::string request_hash(const LlmRequest& req) {
  nlohmann::ordered_json j;
  j["model"] = req.model;
  j["temperature"] = format_fixed(req.temperature, 3);
  j["system"] = req.system;
  j["user"] = req.user;
  j["max_output_tokens"] = req.max_output_tokens;
  return sha256_hex(j.dump());
}

inline nlohmann::ordered_json exchange_to_json(const LlmExchange& ex) {
  nlohmann::ordered_json j;
  j["request_hash"] = ex.request_hash;
  j["request"] = {{"model", ex.request.model},
                  {"temperature", ex.request.temperature},
                  {"system", ex.request.system},
                  {"user", ex.request.user},
                  {"max_output_tokens", ex.request.max_output_tokens}};
  j["response"]["content"] = ex.response.content;
  j["response"]["finish_reason"] = finish_reason_name(ex.response.finish_reason);
  if (ex.response.usage) {
    j["response"]["usage"] = {{"prompt_tokens", ex.response.usage->prompt_tokens},
                              {"completion_tokens", ex.response.usage->completion_tokens}};
  } else {
    j["response"]["usage"] = nullptr;
  }
  j["recorded_at"] = ex.recorded_at;
  return j;
}

inline LlmExchange exchange_from_json(const nlohmann::json& j) {
  LlmExchange ex;
  ex.request_hash = j.at("request_hash").get<std::string>();
  const auto& rq = j.at("request");
  ex.request.model = rq.at("model").get<std::string>();
  ex.request.temperature = rq.at("temperature").get<double>();
  ex.request.system = rq.at("system").get<std::string>();
  ex.request.user = rq.at("user").get<std::string>();
  ex.request.max_output_tokens = rq.at("max_output_tokens").get<size_t>();
  const auto& rs = j.at("response");
  ex.response.content = rs.at("content").get<std::string>();
  ex.response.finish_reason = finish_reason_from(rs.at("finish_reason").get<std::string>());
  if (rs.contains("usage") && !rs.at("usage").is_null()) {
    TokenUsage u;
    u.prompt_tokens = rs.at("usage").value("prompt_tokens", size_t{0});
    u.completion_tokens = rs.at("usage").value("completion_tokens", size_t{0});
    ex.response.usage = u;
  }
  ex.recorded_at = j.value("recorded_at", std::string{});
  return ex;
}

// Append-only JSON-lines store of exchanges keyed by request hash.
// Duplicate hashes resolve last-write-wins on load; record serializes
// appends so concurrent recorders cannot interleave lines.
class FixtureStore {
public:
  FixtureStore() = default;
  FixtureStore(const FixtureStore&) = delete;
  FixtureStore& operator=(const FixtureStore&) = delete;

  static std::shared_ptr<FixtureStore> load(const std::string& path) {
    auto store = std::make_shared<FixtureStore>();
    store->path_ = path;
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::StorageError, "cannot open fixture store: " + path);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded())
        fail(Errc::StorageError, "fixture store " + path + " line " + std::to_string(lineno) +
                                     " is not valid JSON");
      LlmExchange ex = exchange_from_json(j);
      if (ex.request_hash != request_hash(ex.request))
        fail(Errc::StorageError, "fixture store " + path + " line " + std::to_string(lineno) +
                                     " hash does not match its request (corrupt entry)");
      store->entries_[ex.request_hash] = std::move(ex);
    }
    return store;
  }

  void attach(const std::string& path) { path_ = path; }

  std::optional<LlmExchange> find(const std::string& hash) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(hash);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  LlmExchange record(const LlmRequest& req, const LlmResponse& resp,
                     const std::string& recorded_at = "") {
    LlmExchange ex;
    ex.request_hash = request_hash(req);
    ex.request = req;
    ex.response = resp;
    ex.recorded_at = recorded_at;
    std::lock_guard lock(mutex_);
    if (!path_.empty()) {
      std::ofstream out(path_, std::ios::binary | std::ios::app);
      if (!out) fail(Errc::StorageError, "cannot append to fixture store: " + path_);
      out << exchange_to_json(ex).dump() << "\n";
      if (!out) fail(Errc::StorageError, "append failed: " + path_);
    }
    entries_[ex.request_hash] = ex;
    return entries_[ex.request_hash];
  }

  size_t size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }

  std::vector<std::string> hashes() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [h, _] : entries_) out.push_back(h);
    return out;
  }

private:
  mutable std::mutex mutex_;
  std::map<std::string, LlmExchange> entries_;
  std::string path_;
};

class LlmBackend {
public:
  virtual ~LlmBackend() = default;
  virtual LlmResponse complete(const LlmRequest& req) = 0;
};

// Replay: keyed lookup into a fixture store; independent of call order and
// concurrency schedule.
class ReplayBackend : public LlmBackend {
public:
  explicit ReplayBackend(std::shared_ptr<FixtureStore> store) : store_(std::move(store)) {}

  LlmResponse complete(const LlmRequest& req) override {
    validate_request(req);
    std::string hash = request_hash(req);
    auto hit = store_->find(hash);
    if (!hit) {
      fail(Errc::FixtureMiss,
           "no fixture for request " + hash + " user=\"" + req.user.substr(0, 80) + "\"");
    }
    if (hit->response.finish_reason == FinishReason::Truncated)
      fail(Errc::TruncatedOutput, "recorded response was truncated for request " + hash);
    return hit->response;
  }

private:
  std::shared_ptr<FixtureStore> store_;
};

struct LiveConfig {
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string api_key_env = kApiKeyEnvVar;
  size_t max_retries = 3;                 // transient-failure retries after the first attempt
  std::chrono::milliseconds base_delay{250};  // exponential backoff base, jittered
  std::chrono::milliseconds timeout{60000};
  size_t max_in_flight = 4;
};

// Live HTTP chat-completion backend with retry on transient failures.
class LiveBackend : public LlmBackend {
public:
  explicit LiveBackend(LiveConfig config) : config_(std::move(config)), rng_(std::random_device{}()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (!key || !*key)
      fail(Errc::BadRunConfig, "credential env var " + config_.api_key_env + " is not set");
    api_key_ = key;
  }

  LlmResponse complete(const LlmRequest& req) override {
    validate_request(req);
    InFlightGuard guard(*this);

    nlohmann::ordered_json body;
    body["model"] = req.model;
    body["temperature"] = req.temperature;
    body["max_tokens"] = req.max_output_tokens;
    body["messages"] = nlohmann::ordered_json::array(
        {{{"role", "system"}, {"content", req.system}}, {{"role", "user"}, {"content", req.user}}});
    std::string payload = body.dump();

    size_t attempts = 0;
    bool rate_limited = false;
    std::string last_error;
    while (attempts <= config_.max_retries) {
      ++attempts;
      auto outcome = post_once(payload);
      if (outcome.ok) return parse_response(outcome.body);
      rate_limited = outcome.rate_limited;
      last_error = outcome.error;
      if (!outcome.retryable || attempts > config_.max_retries) break;
      sleep_backoff(attempts);
    }
    if (rate_limited)
      fail(Errc::RateLimited, "rate limited after " + std::to_string(attempts) + " attempts");
    fail(Errc::TransportError,
         "completion failed after " + std::to_string(attempts) + " attempts: " + last_error);
  }

private:
  struct PostOutcome {
    bool ok = false;
    bool retryable = false;
    bool rate_limited = false;
    std::string body;
    std::string error;
  };

  PostOutcome post_once(const std::string& payload) {
    PostOutcome out;
    httplib::Client cli(config_.base_url);
    cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.timeout));
    cli.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.timeout));
    httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};
    auto res = cli.Post(config_.path, headers, payload, "application/json");
    if (!res) {
      out.retryable = true;
      out.error = httplib::to_string(res.error());
      return out;
    }
    if (res->status == 429) {
      out.retryable = true;
      out.rate_limited = true;
      out.error = "HTTP 429";
      return out;
    }
    if (res->status >= 500) {
      out.retryable = true;
      out.error = "HTTP " + std::to_string(res->status);
      return out;
    }
    if (res->status < 200 || res->status >= 300) {
      out.error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
      return out;
    }
    out.ok = true;
    out.body = res->body;
    return out;
  }

  LlmResponse parse_response(const std::string& body) {
    nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || j["choices"].empty())
      fail(Errc::TransportError, "malformed completion response: " + body.substr(0, 200));
    const auto& choice = j["choices"][0];
    LlmResponse resp;
    resp.content = choice.at("message").value("content", std::string{});
    std::string fr = choice.value("finish_reason", std::string{"stop"});
    if (fr == "length") resp.finish_reason = FinishReason::Truncated;
    else if (fr == "content_filter") resp.finish_reason = FinishReason::Filtered;
    else resp.finish_reason = FinishReason::Normal;
    if (j.contains("usage") && j["usage"].is_object()) {
      TokenUsage u;
      u.prompt_tokens = j["usage"].value("prompt_tokens", size_t{0});
      u.completion_tokens = j["usage"].value("completion_tokens", size_t{0});
      resp.usage = u;
    }
    return resp;
  }

  void sleep_backoff(size_t attempt) {
    auto base = config_.base_delay.count() * (1LL << (attempt - 1));
    std::uniform_real_distribution<double> jitter(0.5, 1.5);
    double ms;
    {
      std::lock_guard lock(rng_mutex_);
      ms = static_cast<double>(base) * jitter(rng_);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<long long>(ms)));
  }

  // bounded in-flight requests without busy-waiting
  class InFlightGuard {
  public:
    explicit InFlightGuard(LiveBackend& b) : b_(b) {
      std::unique_lock lock(b_.slots_mutex_);
      b_.slots_cv_.wait(lock, [&] { return b_.in_flight_ < b_.config_.max_in_flight; });
      ++b_.in_flight_;
    }
    ~InFlightGuard() {
      {
        std::lock_guard lock(b_.slots_mutex_);
        --b_.in_flight_;
      }
      b_.slots_cv_.notify_one();
    }

  private:
    LiveBackend& b_;
  };

  LiveConfig config_;
  std::string api_key_;
  std::mutex rng_mutex_;
  std::mt19937 rng_;
  std::mutex slots_mutex_;
  std::condition_variable slots_cv_;
  size_t in_flight_ = 0;
};

// Wraps another backend and records every exchange into a fixture store.
class RecordingBackend : public LlmBackend {
public:
  RecordingBackend(LlmBackend& inner, std::shared_ptr<FixtureStore> store,
                   std::string recorded_at = "")
      : inner_(inner), store_(std::move(store)), recorded_at_(std::move(recorded_at)) {}

  LlmResponse complete(const LlmRequest& req) override {
    LlmResponse resp = inner_.complete(req);
    store_->record(req, resp, recorded_at_);
    return resp;
  }

private:
  LlmBackend& inner_;
  std::shared_ptr<FixtureStore> store_;
  std::string recorded_at_;
};

}  // namespace skg

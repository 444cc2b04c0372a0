// CPPHTTPLIB_OPENSSL_SUPPORT comes from the build so every consumer of
// httplib.h sees the same configuration.
#include "httplib.h"

#include "anonrisk/llm.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <mutex>
#include <thread>

#include "json.hpp"

#include "anonrisk/util.hpp"

namespace anonrisk::llm {

CacheMiss::CacheMiss(std::string digest_in, std::string key_hint_in)
    : LlmError("no cached transcript for request " + digest_in +
               (key_hint_in.empty() ? "" : " (" + key_hint_in + ")")),
      digest(std::move(digest_in)),
      key_hint(std::move(key_hint_in)) {}

std::string_view role_name(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  throw LlmError("unknown chat role");
}

Role role_from_name(std::string_view name) {
  if (name == "system") return Role::system;
  if (name == "user") return Role::user;
  if (name == "assistant") return Role::assistant;
  throw LlmError("unknown chat role: " + std::string(name));
}

ChatRequest make_request(const RequestSettings& settings, std::vector<Message> messages) {
  ChatRequest request;
  request.model = settings.model;
  request.temperature = settings.temperature;
  request.max_tokens = settings.max_tokens;
  request.messages = std::move(messages);
  return request;
}

std::string canonical_form(const ChatRequest& request) {
  nlohmann::json doc;
  doc["model"] = request.model;
  doc["temperature"] = request.temperature;
  if (request.max_tokens.has_value()) {
    doc["max_tokens"] = *request.max_tokens;
  } else {
    doc["max_tokens"] = nullptr;
  }
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& message : request.messages) {
    messages.push_back({{"role", std::string(role_name(message.role))},
                        {"content", message.content}});
  }
  doc["messages"] = std::move(messages);
  // nlohmann::json objects iterate in key order, so dump() is deterministic.
  return doc.dump();
}

std::string request_digest(const ChatRequest& request) {
  return util::sha256_hex(canonical_form(request));
}

// ---------------------------------------------------------------------------
// TranscriptCache

TranscriptCache::TranscriptCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path TranscriptCache::path_for(const std::string& digest) const {
  return dir_ / (digest + ".json");
}

bool TranscriptCache::has(const std::string& digest) const {
  return std::filesystem::exists(path_for(digest));
}

std::optional<ChatResponse> TranscriptCache::get(const std::string& digest) const {
  auto path = path_for(digest);
  if (!std::filesystem::exists(path)) return std::nullopt;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(util::read_text_file(path));
  } catch (const std::exception& e) {
    throw LlmError("corrupt transcript " + path.string() + ": " + e.what());
  }
  ChatResponse response;
  response.content = doc.at("response").at("content").get<std::string>();
  response.from_cache = true;
  return response;
}

void TranscriptCache::put(const std::string& digest, const ChatRequest& request,
                          const ChatResponse& response) const {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char stamp[32];
  std::tm tm_utc{};
  gmtime_r(&tt, &tm_utc);
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);

  nlohmann::json doc;
  doc["request_digest"] = digest;
  doc["request"] = nlohmann::json::parse(canonical_form(request));
  doc["response"] = {{"content", response.content}};
  doc["timestamp"] = stamp;
  doc["model"] = request.model;
  util::write_text_file_atomic(path_for(digest), doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// HttpCompleter

namespace {

struct RateLimiter {
  explicit RateLimiter(int requests_per_minute) {
    if (requests_per_minute > 0) {
      interval = std::chrono::milliseconds(60000 / requests_per_minute);
    }
  }

  void wait() {
    if (interval.count() == 0) return;
    std::unique_lock<std::mutex> lock(mutex);
    auto now = std::chrono::steady_clock::now();
    if (next_allowed > now) {
      auto delay = next_allowed - now;
      next_allowed += interval;
      lock.unlock();
      std::this_thread::sleep_for(delay);
      return;
    }
    next_allowed = now + interval;
  }

  std::chrono::milliseconds interval{0};
  std::mutex mutex;
  std::chrono::steady_clock::time_point next_allowed{};
};

// Splits "https://host:port" into scheme-qualified origin for httplib.
bool looks_https(const std::string& base_url) {
  return base_url.rfind("https://", 0) == 0;
}

}  // namespace

struct HttpCompleter::Impl {
  explicit Impl(HttpOptions opts) : options(std::move(opts)), limiter(options.requests_per_minute) {}

  HttpOptions options;
  RateLimiter limiter;
};

HttpCompleter::HttpCompleter(HttpOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {
  if (impl_->options.base_url.empty()) {
    throw LlmError("live mode needs a base_url");
  }
}

HttpCompleter::~HttpCompleter() = default;

ChatResponse HttpCompleter::complete(const ChatRequest& request, const std::string&) {
  nlohmann::json body;
  body["model"] = request.model;
  body["temperature"] = request.temperature;
  if (request.max_tokens.has_value()) body["max_tokens"] = *request.max_tokens;
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& message : request.messages) {
    messages.push_back({{"role", std::string(role_name(message.role))},
                        {"content", message.content}});
  }
  body["messages"] = std::move(messages);
  const std::string payload = body.dump();

  const auto& opts = impl_->options;
  const RetryPolicy& retry = opts.retry;
  double backoff_ms = retry.initial_backoff_ms;
  std::string last_error;

  for (int attempt = 1; attempt <= retry.max_attempts; ++attempt) {
    impl_->limiter.wait();

    httplib::Client client(opts.base_url);
    client.set_connection_timeout(opts.timeout_seconds, 0);
    client.set_read_timeout(opts.timeout_seconds, 0);
    if (looks_https(opts.base_url)) client.enable_server_certificate_verification(true);

    httplib::Headers headers;
    if (!opts.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + opts.api_key);
    }
    auto res = client.Post("/v1/chat/completions", headers, payload, "application/json");

    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
    } else if (res->status == 429 || res->status >= 500) {
      last_error = "server returned status " + std::to_string(res->status);
    } else if (res->status != 200) {
      throw LlmError("chat endpoint returned status " + std::to_string(res->status) + ": " +
                     res->body);
    } else {
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(res->body);
        ChatResponse response;
        response.content =
            doc.at("choices").at(0).at("message").at("content").get<std::string>();
        return response;
      } catch (const nlohmann::json::exception& e) {
        throw LlmError(std::string("malformed chat completion payload: ") + e.what());
      }
    }

    if (attempt < retry.max_attempts) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(static_cast<long long>(backoff_ms)));
      backoff_ms *= retry.multiplier;
    }
  }
  throw LlmError("chat request failed after " + std::to_string(retry.max_attempts) +
                 " attempts; last error: " + last_error);
}

// ---------------------------------------------------------------------------
// MockOracle

MockOracle MockOracle::from_json_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw LlmError(std::string("mock table is not valid JSON: ") + e.what());
  }
  MockOracle oracle;
  if (doc.contains("default")) oracle.default_ = doc.at("default").get<std::string>();
  if (doc.contains("answers")) {
    for (auto it = doc.at("answers").begin(); it != doc.at("answers").end(); ++it) {
      oracle.answers_[it.key()] = it.value().get<std::string>();
    }
  }
  return oracle;
}

MockOracle MockOracle::load(const std::filesystem::path& path) {
  return from_json_text(util::read_text_file(path));
}

void MockOracle::set_answer(const std::string& key, std::string answer) {
  answers_[key] = std::move(answer);
}

ChatResponse MockOracle::complete(const ChatRequest& request, const std::string& key_hint) {
  ChatResponse response;
  auto it = answers_.find(key_hint);
  if (it != answers_.end()) {
    response.content = it->second;
    return response;
  }
  auto slash = key_hint.rfind('/');
  if (slash != std::string::npos) {
    it = answers_.find(key_hint.substr(slash + 1));
    if (it != answers_.end()) {
      response.content = it->second;
      return response;
    }
  }
  it = answers_.find(request_digest(request));
  if (it != answers_.end()) {
    response.content = it->second;
    return response;
  }
  response.content = default_;
  return response;
}

// ---------------------------------------------------------------------------
// CachingCompleter

CachingCompleter::CachingCompleter(TranscriptCache cache, std::unique_ptr<Completer> inner)
    : cache_(std::move(cache)), inner_(std::move(inner)) {}

ChatResponse CachingCompleter::complete(const ChatRequest& request,
                                        const std::string& key_hint) {
  const std::string digest = request_digest(request);
  if (auto cached = cache_.get(digest)) return *cached;
  if (inner_ == nullptr) throw CacheMiss(digest, key_hint);
  ChatResponse response = inner_->complete(request, key_hint);
  cache_.put(digest, request, response);
  return response;
}

// ---------------------------------------------------------------------------
// configuration

std::string_view mode_name(Mode mode) {
  switch (mode) {
    case Mode::live: return "live";
    case Mode::replay: return "replay";
    case Mode::mock: return "mock";
  }
  throw LlmError("unknown mode");
}

Mode mode_from_name(std::string_view name) {
  if (name == "live") return Mode::live;
  if (name == "replay") return Mode::replay;
  if (name == "mock") return Mode::mock;
  throw LlmError("unknown mode: " + std::string(name) + " (expected live, replay or mock)");
}

std::unique_ptr<Completer> make_completer(const LlmConfig& config, bool seed_cache) {
  switch (config.mode) {
    case Mode::live: {
      if (config.cache_dir.empty()) throw LlmError("live mode needs cache_dir");
      HttpOptions opts;
      opts.base_url = config.base_url;
      opts.timeout_seconds = config.timeout_seconds;
      opts.requests_per_minute = config.requests_per_minute;
      opts.retry = config.retry;
      if (!config.api_key_env.empty()) {
        if (const char* key = std::getenv(config.api_key_env.c_str())) {
          opts.api_key = key;
        }
      }
      return std::make_unique<CachingCompleter>(TranscriptCache(config.cache_dir),
                                                std::make_unique<HttpCompleter>(std::move(opts)));
    }
    case Mode::replay: {
      if (config.cache_dir.empty()) throw LlmError("replay mode needs cache_dir");
      return std::make_unique<CachingCompleter>(TranscriptCache(config.cache_dir), nullptr);
    }
    case Mode::mock: {
      if (config.mock_table.empty()) throw LlmError("mock mode needs mock_table");
      auto oracle = std::make_unique<MockOracle>(MockOracle::load(config.mock_table));
      if (seed_cache) {
        if (config.cache_dir.empty()) throw LlmError("seeding the cache needs cache_dir");
        return std::make_unique<CachingCompleter>(TranscriptCache(config.cache_dir),
                                                  std::move(oracle));
      }
      return oracle;
    }
  }
  throw LlmError("unknown mode");
}

}  // namespace anonrisk::llm

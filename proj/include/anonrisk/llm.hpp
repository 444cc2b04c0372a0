#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace anonrisk::llm {

struct LlmError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised in replay mode when a request was never recorded.
struct CacheMiss : LlmError {
  CacheMiss(std::string digest, std::string key_hint);
  std::string digest;
  std::string key_hint;
};

enum class Role { system, user, assistant };

std::string_view role_name(Role role);
Role role_from_name(std::string_view name);

struct Message {
  Role role = Role::user;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<Message> messages;
  double temperature = 0.0;
  std::optional<int> max_tokens;
};

// Model identity applied to every request a pipeline stage builds.
struct RequestSettings {
  std::string model = "gpt-4";
  double temperature = 0.0;
  std::optional<int> max_tokens;
};

ChatRequest make_request(const RequestSettings& settings, std::vector<Message> messages);

struct ChatResponse {
  std::string content;
  bool from_cache = false;
};

// Deterministic serialisation of everything that identifies a request; equal
// requests digest equally regardless of construction order.
std::string canonical_form(const ChatRequest& request);
std::string request_digest(const ChatRequest& request);

// One JSON file per request digest under a directory. Writes go through a
// temp file and rename, so parallel workers never expose partial files.
class TranscriptCache {
 public:
  explicit TranscriptCache(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path path_for(const std::string& digest) const;
  bool has(const std::string& digest) const;
  std::optional<ChatResponse> get(const std::string& digest) const;
  void put(const std::string& digest, const ChatRequest& request,
           const ChatResponse& response) const;

 private:
  std::filesystem::path dir_;
};

// A chat model endpoint. `key_hint` names what the call is for (for example
// "intrude1/watson_03"); transports ignore it, the mock uses it to pick a
// scripted answer.
class Completer {
 public:
  virtual ~Completer() = default;
  virtual ChatResponse complete(const ChatRequest& request, const std::string& key_hint) = 0;
};

struct RetryPolicy {
  int max_attempts = 3;
  int initial_backoff_ms = 250;
  double multiplier = 2.0;
};

struct HttpOptions {
  std::string base_url;  // e.g. "http://127.0.0.1:8089" or "https://api.example.com"
  std::string api_key;
  int timeout_seconds = 60;
  int requests_per_minute = 0;  // 0 = unthrottled
  RetryPolicy retry;
};

// POSTs OpenAI-style chat completions to <base_url>/v1/chat/completions.
// Retries transport errors, 429 and 5xx with exponential backoff; honours a
// requests-per-minute budget across threads.
class HttpCompleter : public Completer {
 public:
  explicit HttpCompleter(HttpOptions options);
  ~HttpCompleter() override;
  ChatResponse complete(const ChatRequest& request, const std::string& key_hint) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Scripted answers for offline runs. Lookup order: full key hint, then the
// part after the last '/', then the request digest, then the default answer.
class MockOracle : public Completer {
 public:
  MockOracle() = default;
  static MockOracle load(const std::filesystem::path& path);
  static MockOracle from_json_text(const std::string& text);

  void set_answer(const std::string& key, std::string answer);
  void set_default(std::string answer) { default_ = std::move(answer); }

  ChatResponse complete(const ChatRequest& request, const std::string& key_hint) override;

 private:
  std::map<std::string, std::string> answers_;
  std::string default_ = "UNKNOWN";
};

// Consults the transcript cache first. On a miss it defers to the inner
// completer and records the exchange; with no inner completer (replay mode)
// a miss throws CacheMiss.
class CachingCompleter : public Completer {
 public:
  CachingCompleter(TranscriptCache cache, std::unique_ptr<Completer> inner);
  ChatResponse complete(const ChatRequest& request, const std::string& key_hint) override;

 private:
  TranscriptCache cache_;
  std::unique_ptr<Completer> inner_;
};

enum class Mode { live, replay, mock };

std::string_view mode_name(Mode mode);
Mode mode_from_name(std::string_view name);

struct LlmConfig {
  Mode mode = Mode::replay;
  std::string model = "gpt-4";
  double temperature = 0.0;
  std::optional<int> max_tokens;
  std::filesystem::path cache_dir;       // required for live and replay
  std::filesystem::path mock_table;      // required for mock
  std::string base_url;                  // live only
  std::string api_key_env = "LLM_API_KEY";
  int timeout_seconds = 60;
  int requests_per_minute = 0;
  RetryPolicy retry;
};

// Builds the completer stack for the configured mode. With `seed_cache` a
// mock completer also records its answers into the transcript cache so later
// replay runs can work offline from the same files.
std::unique_ptr<Completer> make_completer(const LlmConfig& config, bool seed_cache = false);

}  // namespace anonrisk::llm

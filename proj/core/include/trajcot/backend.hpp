#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajcot/http_transport.hpp"

namespace trajcot {

struct ChatMessage {
  std::string role;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct CompletionRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 1024;

  /// The OpenAI-compatible request body.
  nlohmann::json to_json() const;
  static CompletionRequest from_json(const nlohmann::json& j);

  /// SHA-256 of the canonical serialization of every field above.
  std::string request_id() const;

  /// Content of the last user message (empty when there is none).
  std::string_view prompt() const;

  bool operator==(const CompletionRequest&) const = default;
};

struct Completion {
  std::string text;
  int attempts = 1;
  bool from_cache = false;
};

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  /// Must be safe to call from several threads at once.
  virtual Completion complete(const CompletionRequest& request) = 0;
  virtual std::string describe() const = 0;
};

enum class CacheMode { Off, Record, Replay, ReplayStrict };

std::string_view to_string(CacheMode m);
CacheMode parse_cache_mode(std::string_view text);

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds backoff_base{500};

  /// Delay before attempt `attempt + 1`, i.e. base * 2^(attempt - 1).
  std::chrono::milliseconds delay_after(int attempt) const;
};

struct BackendConfig {
  std::string endpoint = "http://localhost:8000/v1";
  std::string model = "mistral-7b-instruct";
  std::string auth_env = "OPENAI_API_KEY";  // name of the variable, never the secret
  std::chrono::milliseconds timeout{120000};
  RetryPolicy retry;
  std::size_t parallelism = 4;
  CacheMode cache_mode = CacheMode::Off;
  std::filesystem::path cache_path;
  double temperature = 0.0;
  int max_tokens = 1024;

  /// Throws ValidationError on inconsistent settings.
  void validate() const;

  static BackendConfig load(const std::filesystem::path& path);
};

void to_json(nlohmann::json& j, const BackendConfig& c);
void from_json(const nlohmann::json& j, BackendConfig& c);

/// Full URL of the chat-completions route for an endpoint base:
/// `http://h:8000` and `http://h:8000/v1` both map to
/// `http://h:8000/v1/chat/completions`.
std::string chat_completions_url(std::string_view endpoint);

/// Live client for `POST /v1/chat/completions`. Retries transport errors and
/// 5xx responses with exponential backoff; everything else is surfaced.
class OpenAiChatBackend : public CompletionBackend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;
  using RetryLogger = std::function<void(int attempt, const std::string& reason)>;

  explicit OpenAiChatBackend(BackendConfig config,
                             std::unique_ptr<HttpTransport> transport = nullptr,
                             Sleeper sleeper = nullptr);

  Completion complete(const CompletionRequest& request) override;
  std::string describe() const override;

  void set_retry_logger(RetryLogger logger) { retry_logger_ = std::move(logger); }

 private:
  BackendConfig config_;
  std::string url_;
  std::unique_ptr<HttpTransport> transport_;
  Sleeper sleeper_;
  RetryLogger retry_logger_;
};

/// Extracts choices[0].message.content. Throws BackendError when absent.
std::string parse_chat_response(std::string_view body);

/// One line of the JSON-lines cache file.
struct CacheEntry {
  std::string request_id;
  CompletionRequest request;
  std::string response;
  std::string timestamp;
};

/// Content-addressed record/replay wrapper.
///
/// Record: hits are served from the cache, misses go to `inner` and are
/// appended. Replay: hits from the cache, misses go to `inner` (if any)
/// without being stored. ReplayStrict: misses raise CacheMissError and
/// `inner` is never consulted.
class CachedBackend : public CompletionBackend {
 public:
  CachedBackend(std::shared_ptr<CompletionBackend> inner, CacheMode mode,
                std::filesystem::path path);

  Completion complete(const CompletionRequest& request) override;
  std::string describe() const override;

  CacheMode mode() const { return mode_; }
  std::size_t size() const;
  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }
  /// Model names seen in the cache file.
  std::set<std::string> recorded_models() const;

 private:
  void append(const CacheEntry& entry);

  std::shared_ptr<CompletionBackend> inner_;
  CacheMode mode_;
  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, CacheEntry> entries_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

std::vector<CacheEntry> load_cache_file(const std::filesystem::path& path);

}  // namespace trajcot

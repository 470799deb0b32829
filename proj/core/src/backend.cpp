#include "trajcot/backend.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

#include "trajcot/civil_time.hpp"
#include "trajcot/error.hpp"
#include "trajcot/hash.hpp"

namespace trajcot {

std::string_view to_string(CacheMode m) {
  switch (m) {
    case CacheMode::Off: return "off";
    case CacheMode::Record: return "record";
    case CacheMode::Replay: return "replay";
    case CacheMode::ReplayStrict: return "replay_strict";
  }
  return "?";
}

CacheMode parse_cache_mode(std::string_view text) {
  if (text == "off") return CacheMode::Off;
  if (text == "record") return CacheMode::Record;
  if (text == "replay") return CacheMode::Replay;
  if (text == "replay_strict") return CacheMode::ReplayStrict;
  throw ValidationError("unknown cache mode '" + std::string(text) + "'");
}

// ---- request -------------------------------------------------------------

nlohmann::json CompletionRequest::to_json() const {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return nlohmann::json{{"model", model},
                        {"messages", std::move(msgs)},
                        {"temperature", temperature},
                        {"max_tokens", max_tokens}};
}

CompletionRequest CompletionRequest::from_json(const nlohmann::json& j) {
  CompletionRequest r;
  r.model = j.at("model").get<std::string>();
  for (const auto& m : j.at("messages")) {
    r.messages.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
  }
  r.temperature = j.value("temperature", 0.0);
  r.max_tokens = j.value("max_tokens", 1024);
  return r;
}

std::string CompletionRequest::request_id() const {
  // nlohmann::json objects serialize with sorted keys, so dump() is canonical.
  return sha256_hex(to_json().dump());
}

std::string_view CompletionRequest::prompt() const {
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == "user") return it->content;
  }
  return {};
}

// ---- config --------------------------------------------------------------

std::chrono::milliseconds RetryPolicy::delay_after(int attempt) const {
  if (attempt < 1) attempt = 1;
  const int shift = std::min(attempt - 1, 20);
  return backoff_base * (1LL << shift);
}

void BackendConfig::validate() const {
  if (model.empty()) throw ValidationError("backend model must not be empty");
  if (retry.max_attempts < 1) throw ValidationError("retry max_attempts must be >= 1");
  if (retry.backoff_base.count() < 0) throw ValidationError("backoff base must be >= 0");
  if (parallelism < 1) throw ValidationError("parallelism must be >= 1");
  if (max_tokens < 1) throw ValidationError("max_tokens must be >= 1");
  if (cache_mode != CacheMode::Off && cache_path.empty()) {
    throw ValidationError("cache mode " + std::string(to_string(cache_mode)) +
                          " needs a cache_path");
  }
  if (cache_mode != CacheMode::ReplayStrict && endpoint.empty()) {
    throw ValidationError("backend endpoint must not be empty");
  }
}

BackendConfig BackendConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open backend config " + path.string());
  try {
    nlohmann::json j;
    in >> j;
    auto c = j.get<BackendConfig>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid backend config " + path.string() + ": " + e.what());
  }
}

void to_json(nlohmann::json& j, const BackendConfig& c) {
  j = nlohmann::json{{"endpoint", c.endpoint},
                     {"model", c.model},
                     {"auth_env", c.auth_env},
                     {"timeout_ms", c.timeout.count()},
                     {"max_attempts", c.retry.max_attempts},
                     {"backoff_base_ms", c.retry.backoff_base.count()},
                     {"parallelism", c.parallelism},
                     {"cache_mode", to_string(c.cache_mode)},
                     {"cache_path", c.cache_path.string()},
                     {"temperature", c.temperature},
                     {"max_tokens", c.max_tokens}};
}

void from_json(const nlohmann::json& j, BackendConfig& c) {
  c = BackendConfig{};
  c.endpoint = j.value("endpoint", c.endpoint);
  c.model = j.value("model", c.model);
  c.auth_env = j.value("auth_env", c.auth_env);
  c.timeout = std::chrono::milliseconds(j.value("timeout_ms", c.timeout.count()));
  c.retry.max_attempts = j.value("max_attempts", c.retry.max_attempts);
  c.retry.backoff_base =
      std::chrono::milliseconds(j.value("backoff_base_ms", c.retry.backoff_base.count()));
  c.parallelism = j.value("parallelism", c.parallelism);
  c.cache_mode = parse_cache_mode(j.value("cache_mode", std::string("off")));
  c.cache_path = j.value("cache_path", std::string{});
  c.temperature = j.value("temperature", c.temperature);
  c.max_tokens = j.value("max_tokens", c.max_tokens);
}

std::string chat_completions_url(std::string_view endpoint) {
  std::string url(endpoint);
  while (!url.empty() && url.back() == '/') url.pop_back();
  const auto ends_with = [&](std::string_view suffix) {
    return url.size() >= suffix.size() && url.compare(url.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with("/chat/completions")) return url;
  if (ends_with("/v1")) return url + "/chat/completions";
  return url + "/v1/chat/completions";
}

// ---- live client ---------------------------------------------------------

std::string parse_chat_response(std::string_view body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw BackendError("chat completion response is not JSON");
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw BackendError("chat completion content is not a string");
    return content.get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw BackendError("chat completion response lacks choices[0].message.content");
  }
}

OpenAiChatBackend::OpenAiChatBackend(BackendConfig config, std::unique_ptr<HttpTransport> transport,
                                     Sleeper sleeper)
    : config_(std::move(config)),
      url_(chat_completions_url(config_.endpoint)),
      transport_(transport ? std::move(transport) : make_default_transport()),
      sleeper_(sleeper ? std::move(sleeper)
                       : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })) {}

std::string OpenAiChatBackend::describe() const { return "openai-chat:" + config_.model + "@" + url_; }

Completion OpenAiChatBackend::complete(const CompletionRequest& request) {
  std::map<std::string, std::string> headers;
  if (!config_.auth_env.empty()) {
    if (const char* token = std::getenv(config_.auth_env.c_str()); token && *token) {
      headers["Authorization"] = std::string("Bearer ") + token;
    }
  }
  const std::string body = request.to_json().dump();
  std::string last_error;
  for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    if (attempt > 1) sleeper_(config_.retry.delay_after(attempt - 1));
    HttpResponse response;
    try {
      response = transport_->post(url_, body, headers, config_.timeout);
    } catch (const NetworkForbiddenError&) {
      throw;
    } catch (const TransportError& e) {
      last_error = e.what();
      if (retry_logger_) retry_logger_(attempt, last_error);
      continue;
    }
    if (response.status >= 500) {
      last_error = "HTTP " + std::to_string(response.status);
      if (retry_logger_) retry_logger_(attempt, last_error);
      continue;
    }
    if (response.status < 200 || response.status >= 300) {
      throw BackendError("chat completion failed with HTTP " + std::to_string(response.status) +
                         ": " + response.body.substr(0, 200));
    }
    return Completion{parse_chat_response(response.body), attempt, false};
  }
  throw BackendError("chat completion failed after " + std::to_string(config_.retry.max_attempts) +
                     " attempts: " + last_error);
}

// ---- cache ---------------------------------------------------------------

std::vector<CacheEntry> load_cache_file(const std::filesystem::path& path) {
  std::vector<CacheEntry> out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      CacheEntry e;
      e.request = CompletionRequest::from_json(j.at("request"));
      e.request_id = j.at("request_id").get<std::string>();
      e.response = j.at("response").get<std::string>();
      e.timestamp = j.value("timestamp", std::string{});
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(path.string(), line_no, "<cache line>", ex.what());
    }
  }
  return out;
}

CachedBackend::CachedBackend(std::shared_ptr<CompletionBackend> inner, CacheMode mode,
                             std::filesystem::path path)
    : inner_(std::move(inner)), mode_(mode), path_(std::move(path)) {
  if (mode_ == CacheMode::Off) return;
  if (path_.empty()) throw ValidationError("cache mode needs a cache file path");
  if ((mode_ == CacheMode::Replay || mode_ == CacheMode::ReplayStrict) &&
      !std::filesystem::exists(path_)) {
    throw ValidationError("replay cache " + path_.string() + " does not exist");
  }
  for (auto& e : load_cache_file(path_)) {
    const std::string id = e.request_id;
    entries_.try_emplace(id, std::move(e));
  }
}

std::string CachedBackend::describe() const {
  return "cache(" + std::string(to_string(mode_)) + "):" + (inner_ ? inner_->describe() : "none");
}

std::size_t CachedBackend::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::set<std::string> CachedBackend::recorded_models() const {
  std::shared_lock lock(mutex_);
  std::set<std::string> out;
  for (const auto& [id, e] : entries_) out.insert(e.request.model);
  return out;
}

void CachedBackend::append(const CacheEntry& entry) {
  // Called with the unique lock held.
  if (!path_.parent_path().empty()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw BackendError("cannot append to cache " + path_.string());
  const nlohmann::json j{{"request_id", entry.request_id},
                         {"request", entry.request.to_json()},
                         {"response", entry.response},
                         {"timestamp", entry.timestamp}};
  out << j.dump() << "\n";
}

Completion CachedBackend::complete(const CompletionRequest& request) {
  if (mode_ == CacheMode::Off) {
    if (!inner_) throw BackendError("no backend configured");
    return inner_->complete(request);
  }
  const std::string id = request.request_id();
  {
    std::shared_lock lock(mutex_);
    if (const auto it = entries_.find(id); it != entries_.end()) {
      ++hits_;
      return Completion{it->second.response, 0, true};
    }
  }
  ++misses_;
  if (mode_ == CacheMode::ReplayStrict || !inner_) throw CacheMissError(id);

  Completion c = inner_->complete(request);
  if (mode_ == CacheMode::Record) {
    const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    CacheEntry entry{id, request, c.text, format_rfc3339(now)};
    std::unique_lock lock(mutex_);
    if (entries_.try_emplace(id, entry).second) append(entry);
  }
  return c;
}

}  // namespace trajcot

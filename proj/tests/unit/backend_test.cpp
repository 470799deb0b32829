#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include <httplib.h>

#include "trajcot/backend.hpp"
#include "trajcot/error.hpp"
#include "trajcot/http_transport.hpp"
#include "test_support.hpp"

using namespace trajcot;

namespace {

CompletionRequest sample_request(std::string prompt = "hello") {
  CompletionRequest r;
  r.model = "m1";
  r.messages = {{"system", "sys"}, {"user", std::move(prompt)}};
  r.temperature = 0.0;
  r.max_tokens = 64;
  return r;
}

std::string chat_body(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

/// Serves a scripted list of responses and records what it was sent.
class FakeTransport : public HttpTransport {
 public:
  explicit FakeTransport(std::vector<HttpResponse> script) : script_(std::move(script)) {}
  std::vector<std::string> bodies;
  std::vector<std::map<std::string, std::string>> headers;
  std::vector<std::string> urls;
  std::size_t transport_failures = 0;

 protected:
  HttpResponse do_post(const std::string& url, const std::string& body,
                       const std::map<std::string, std::string>& h,
                       std::chrono::milliseconds) override {
    urls.push_back(url);
    bodies.push_back(body);
    headers.push_back(h);
    if (transport_failures > 0) {
      --transport_failures;
      throw TransportError("connection reset");
    }
    const auto r = script_.at(next_);
    if (next_ + 1 < script_.size()) ++next_;
    return r;
  }

 private:
  std::vector<HttpResponse> script_;
  std::size_t next_ = 0;
};

/// Counts calls; answers with the prompt reversed.
class EchoBackend : public CompletionBackend {
 public:
  std::atomic<int> calls{0};
  Completion complete(const CompletionRequest& r) override {
    ++calls;
    std::string p(r.prompt());
    return {std::string(p.rbegin(), p.rend()), 1, false};
  }
  std::string describe() const override { return "echo"; }
};

BackendConfig fast_config() {
  BackendConfig c;
  c.endpoint = "http://fake:1/v1";
  c.model = "m1";
  c.auth_env = "";
  c.retry.max_attempts = 4;
  c.retry.backoff_base = std::chrono::milliseconds(100);
  return c;
}

}  // namespace

TEST(CompletionRequest, IdIsStableAndSensitive) {
  const auto a = sample_request();
  EXPECT_EQ(a.request_id(), sample_request().request_id());
  EXPECT_EQ(a.request_id().size(), 64u);

  auto b = sample_request("hellp");
  EXPECT_NE(a.request_id(), b.request_id());
  auto c = a;
  c.max_tokens = 65;
  EXPECT_NE(a.request_id(), c.request_id());
  auto d = a;
  d.model = "m2";
  EXPECT_NE(a.request_id(), d.request_id());
  auto e = a;
  e.temperature = 0.5;
  EXPECT_NE(a.request_id(), e.request_id());
  auto f = a;
  f.messages[0].role = "user";
  EXPECT_NE(a.request_id(), f.request_id());
}

TEST(CompletionRequest, IdChangesWithEveryPromptByte) {
  const auto base = sample_request("The quick brown fox");
  const auto id = base.request_id();
  const std::string prompt(base.prompt());
  for (std::size_t i = 0; i < prompt.size(); ++i) {
    auto copy = prompt;
    copy[i] = static_cast<char>(copy[i] ^ 1);
    EXPECT_NE(sample_request(copy).request_id(), id) << i;
  }
}

TEST(CompletionRequest, JsonRoundTrip) {
  const auto r = sample_request("x \"quoted\" \n line");
  EXPECT_EQ(CompletionRequest::from_json(r.to_json()), r);
  EXPECT_EQ(r.prompt(), "x \"quoted\" \n line");
}

TEST(RetryPolicy, ExponentialDelays) {
  RetryPolicy p;
  p.backoff_base = std::chrono::milliseconds(500);
  EXPECT_EQ(p.delay_after(1).count(), 500);
  EXPECT_EQ(p.delay_after(2).count(), 1000);
  EXPECT_EQ(p.delay_after(3).count(), 2000);
}

TEST(BackendConfig, ValidatesAndRoundTrips) {
  BackendConfig c = fast_config();
  EXPECT_NO_THROW(c.validate());
  c.cache_mode = CacheMode::Record;
  EXPECT_THROW(c.validate(), ValidationError);
  c.cache_path = "cache.jsonl";
  EXPECT_NO_THROW(c.validate());
  const nlohmann::json j = c;
  const auto back = j.get<BackendConfig>();
  EXPECT_EQ(back.endpoint, c.endpoint);
  EXPECT_EQ(back.cache_mode, CacheMode::Record);
  EXPECT_EQ(back.retry.backoff_base.count(), 100);
  EXPECT_THROW(parse_cache_mode("sometimes"), ValidationError);

  trajcot::testing::TempDir dir("cfg");
  trajcot::testing::write_file(dir / "bad.json", "{\"max_attempts\": 0}");
  EXPECT_THROW(BackendConfig::load(dir / "bad.json"), ValidationError);
  trajcot::testing::write_file(dir / "broken.json", "{");
  EXPECT_THROW(BackendConfig::load(dir / "broken.json"), ValidationError);
}

TEST(ChatCompletionsUrl, NormalizesEndpoint) {
  EXPECT_EQ(chat_completions_url("http://h:8000"), "http://h:8000/v1/chat/completions");
  EXPECT_EQ(chat_completions_url("http://h:8000/v1/"), "http://h:8000/v1/chat/completions");
  EXPECT_EQ(chat_completions_url("http://h/v1/chat/completions"), "http://h/v1/chat/completions");
}

TEST(ParseChatResponse, ExtractsContent) {
  EXPECT_EQ(parse_chat_response(chat_body("hi")), "hi");
  EXPECT_THROW(parse_chat_response("not json"), BackendError);
  EXPECT_THROW(parse_chat_response("{\"choices\": []}"), BackendError);
}

TEST(OpenAiChatBackend, RetriesServerErrorsThenSucceeds) {
  auto transport = std::make_unique<FakeTransport>(
      std::vector<HttpResponse>{{503, "busy"}, {500, "oops"}, {200, chat_body("answer")}});
  auto* raw = transport.get();
  std::vector<long long> sleeps;
  OpenAiChatBackend backend(fast_config(), std::move(transport),
                            [&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); });
  std::vector<std::pair<int, std::string>> logged;
  backend.set_retry_logger([&](int attempt, const std::string& why) { logged.emplace_back(attempt, why); });

  const auto c = backend.complete(sample_request());
  EXPECT_EQ(c.text, "answer");
  EXPECT_EQ(c.attempts, 3);
  EXPECT_EQ(sleeps, (std::vector<long long>{100, 200}));
  ASSERT_EQ(logged.size(), 2u);
  EXPECT_EQ(logged[0].first, 1);
  EXPECT_NE(logged[0].second.find("503"), std::string::npos);
  ASSERT_EQ(raw->bodies.size(), 3u);
  EXPECT_EQ(raw->urls[0], "http://fake:1/v1/chat/completions");
  EXPECT_EQ(nlohmann::json::parse(raw->bodies[0]), sample_request().to_json());
}

TEST(OpenAiChatBackend, ClientErrorsAreNotRetried) {
  auto transport = std::make_unique<FakeTransport>(std::vector<HttpResponse>{{400, "bad request"}});
  auto* raw = transport.get();
  int sleeps = 0;
  OpenAiChatBackend backend(fast_config(), std::move(transport), [&](auto) { ++sleeps; });
  EXPECT_THROW(backend.complete(sample_request()), BackendError);
  EXPECT_EQ(raw->bodies.size(), 1u);
  EXPECT_EQ(sleeps, 0);
}

TEST(OpenAiChatBackend, GivesUpAfterMaxAttempts) {
  auto transport = std::make_unique<FakeTransport>(std::vector<HttpResponse>{{502, ""}});
  auto* raw = transport.get();
  raw->transport_failures = 2;
  OpenAiChatBackend backend(fast_config(), std::move(transport), [](auto) {});
  try {
    backend.complete(sample_request());
    FAIL() << "expected BackendError";
  } catch (const BackendError& e) {
    EXPECT_NE(std::string(e.what()).find("after 4 attempts"), std::string::npos);
  }
  EXPECT_EQ(raw->bodies.size(), 4u);
}

TEST(OpenAiChatBackend, SendsBearerTokenFromNamedVariable) {
  ::setenv("TRAJCOT_TEST_TOKEN", "s3cret", 1);
  auto cfg = fast_config();
  cfg.auth_env = "TRAJCOT_TEST_TOKEN";
  auto transport = std::make_unique<FakeTransport>(std::vector<HttpResponse>{{200, chat_body("ok")}});
  auto* raw = transport.get();
  OpenAiChatBackend backend(cfg, std::move(transport), [](auto) {});
  backend.complete(sample_request());
  EXPECT_EQ(raw->headers[0].at("Authorization"), "Bearer s3cret");
  EXPECT_EQ(backend.describe().find("s3cret"), std::string::npos);
  ::unsetenv("TRAJCOT_TEST_TOKEN");
}

TEST(OpenAiChatBackend, TalksToLoopbackServer) {
  httplib::Server server;
  std::string seen_body;
  std::string seen_path;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen_body = req.body;
    seen_path = req.path;
    res.set_content(chat_body("PREDICTION: Middle"), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto cfg = fast_config();
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port);
  cfg.timeout = std::chrono::milliseconds(5000);
  OpenAiChatBackend backend(cfg);
  const auto before = network_call_count();
  const auto c = backend.complete(sample_request());
  server.stop();
  thread.join();

  EXPECT_EQ(c.text, "PREDICTION: Middle");
  EXPECT_EQ(seen_path, "/v1/chat/completions");
  const auto body = nlohmann::json::parse(seen_body);
  EXPECT_EQ(body.at("model"), "m1");
  EXPECT_EQ(body.at("max_tokens"), 64);
  EXPECT_EQ(body.at("messages").at(1).at("content"), "hello");
  EXPECT_EQ(network_call_count(), before + 1);
}

TEST(OpenAiChatBackend, RefusedConnectionIsTransportFailure) {
  auto cfg = fast_config();
  cfg.endpoint = "http://127.0.0.1:1";
  cfg.retry.max_attempts = 2;
  cfg.timeout = std::chrono::milliseconds(1000);
  int sleeps = 0;
  OpenAiChatBackend backend(cfg, nullptr, [&](auto) { ++sleeps; });
  EXPECT_THROW(backend.complete(sample_request()), BackendError);
  EXPECT_EQ(sleeps, 1);
}

TEST(NetworkGuard, BlocksAndCounts) {
  auto transport = std::make_unique<FakeTransport>(std::vector<HttpResponse>{{200, chat_body("ok")}});
  auto* raw = transport.get();
  OpenAiChatBackend backend(fast_config(), std::move(transport), [](auto) {});
  EXPECT_FALSE(NetworkGuard::active());
  {
    NetworkGuard guard;
    EXPECT_TRUE(NetworkGuard::active());
    const auto before = network_call_count();
    EXPECT_THROW(backend.complete(sample_request()), NetworkForbiddenError);
    EXPECT_EQ(guard.blocked_calls(), 1u);
    EXPECT_EQ(network_call_count(), before + 1);
    EXPECT_TRUE(raw->bodies.empty());
  }
  EXPECT_FALSE(NetworkGuard::active());
  EXPECT_EQ(backend.complete(sample_request()).text, "ok");
}

TEST(CachedBackend, RecordThenStrictReplay) {
  trajcot::testing::TempDir dir("cache");
  const auto path = dir / "cache.jsonl";
  auto echo = std::make_shared<EchoBackend>();
  {
    CachedBackend rec(echo, CacheMode::Record, path);
    EXPECT_EQ(rec.complete(sample_request("abc")).text, "cba");
    EXPECT_EQ(rec.complete(sample_request("xyz")).text, "zyx");
    const auto again = rec.complete(sample_request("abc"));
    EXPECT_TRUE(again.from_cache);
    EXPECT_EQ(echo->calls.load(), 2);
    EXPECT_EQ(rec.size(), 2u);
  }
  const auto entries = load_cache_file(path);
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[0].request_id, sample_request("abc").request_id());
  EXPECT_EQ(entries[0].request, sample_request("abc"));

  CachedBackend strict(nullptr, CacheMode::ReplayStrict, path);
  EXPECT_EQ(strict.recorded_models(), (std::set<std::string>{"m1"}));
  NetworkGuard guard;
  const auto c = strict.complete(sample_request("xyz"));
  EXPECT_EQ(c.text, "zyx");
  EXPECT_TRUE(c.from_cache);
  EXPECT_THROW(strict.complete(sample_request("new")), CacheMissError);
  EXPECT_EQ(strict.hits(), 1u);
  EXPECT_EQ(strict.misses(), 1u);
  EXPECT_EQ(guard.blocked_calls(), 0u);
}

TEST(CachedBackend, LenientReplayFallsThroughWithoutStoring) {
  trajcot::testing::TempDir dir("cache");
  const auto path = dir / "cache.jsonl";
  auto echo = std::make_shared<EchoBackend>();
  { CachedBackend rec(echo, CacheMode::Record, path); rec.complete(sample_request("abc")); }
  const auto size_before = std::filesystem::file_size(path);
  CachedBackend replay(echo, CacheMode::Replay, path);
  EXPECT_EQ(replay.complete(sample_request("pq")).text, "qp");
  EXPECT_EQ(std::filesystem::file_size(path), size_before);
  EXPECT_THROW(CachedBackend(nullptr, CacheMode::ReplayStrict, dir / "absent.jsonl"), ValidationError);
}

TEST(CachedBackend, CorruptLineIsParseError) {
  trajcot::testing::TempDir dir("cache");
  trajcot::testing::write_file(dir / "c.jsonl", "{\"request_id\":\"x\"}\n");
  EXPECT_THROW(load_cache_file(dir / "c.jsonl"), ParseError);
}

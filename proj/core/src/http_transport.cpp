#include "trajcot/http_transport.hpp"

#include <atomic>

#include <httplib.h>

namespace trajcot {
namespace {

std::atomic<int> g_guard_depth{0};
std::atomic<std::size_t> g_calls{0};
std::atomic<std::size_t> g_blocked{0};

/// Splits `scheme://host[:port]/path` into origin and path.
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto path_start =
      url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttplibTransport : public HttpTransport {
 protected:
  HttpResponse do_post(const std::string& url, const std::string& body,
                       const std::map<std::string, std::string>& headers,
                       std::chrono::milliseconds timeout) override {
    const auto [origin, path] = split_url(url);
    httplib::Client client(origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto result = client.Post(path, h, body, "application/json");
    if (!result) {
      throw TransportError("POST " + url + " failed: " + httplib::to_string(result.error()));
    }
    return HttpResponse{result->status, result->body};
  }
};

}  // namespace

HttpResponse HttpTransport::post(const std::string& url, const std::string& body,
                                 const std::map<std::string, std::string>& headers,
                                 std::chrono::milliseconds timeout) {
  g_calls.fetch_add(1);
  if (g_guard_depth.load() > 0) {
    g_blocked.fetch_add(1);
    throw NetworkForbiddenError("network access is forbidden here (POST " + url + ")");
  }
  return do_post(url, body, headers, timeout);
}

std::unique_ptr<HttpTransport> make_default_transport() {
  return std::make_unique<HttplibTransport>();
}

NetworkGuard::NetworkGuard() : blocked_at_start_(g_blocked.load()) { g_guard_depth.fetch_add(1); }

NetworkGuard::~NetworkGuard() { g_guard_depth.fetch_sub(1); }

std::size_t NetworkGuard::blocked_calls() const { return g_blocked.load() - blocked_at_start_; }

bool NetworkGuard::active() { return g_guard_depth.load() > 0; }

std::size_t network_call_count() { return g_calls.load(); }

}  // namespace trajcot

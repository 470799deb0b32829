#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <string>

#include "trajcot/error.hpp"

namespace trajcot {

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Connection-level failure (refused, reset, timeout). Retryable.
class TransportError : public BackendError {
 public:
  using BackendError::BackendError;
  const char* kind() const noexcept override { return "transport"; }
};

/// Minimal POST-only HTTP client seam. Every request, real or fake, passes
/// through post(), which enforces NetworkGuard and counts calls.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;

  HttpResponse post(const std::string& url, const std::string& body,
                    const std::map<std::string, std::string>& headers,
                    std::chrono::milliseconds timeout);

 protected:
  virtual HttpResponse do_post(const std::string& url, const std::string& body,
                               const std::map<std::string, std::string>& headers,
                               std::chrono::milliseconds timeout) = 0;
};

/// cpp-httplib backed transport (http and https).
std::unique_ptr<HttpTransport> make_default_transport();

/// While at least one guard is alive, HttpTransport::post throws
/// NetworkForbiddenError instead of touching the network.
class NetworkGuard {
 public:
  NetworkGuard();
  ~NetworkGuard();
  NetworkGuard(const NetworkGuard&) = delete;
  NetworkGuard& operator=(const NetworkGuard&) = delete;

  /// Calls blocked since this guard was created.
  std::size_t blocked_calls() const;

  static bool active();

 private:
  std::size_t blocked_at_start_;
};

/// Process-wide count of HttpTransport::post invocations, blocked or not.
std::size_t network_call_count();

}  // namespace trajcot

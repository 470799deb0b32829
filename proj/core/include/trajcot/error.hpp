#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace trajcot {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  /// Short machine-readable category, used by the CLI's JSON diagnostics.
  virtual const char* kind() const noexcept { return "error"; }
};

/// A malformed input row. `line` is 1-based and counts the header.
class ParseError : public Error {
 public:
  ParseError(std::string file, std::size_t line, std::string field, const std::string& what);
  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }
  const char* kind() const noexcept override { return "parse"; }

 private:
  std::string file_;
  std::size_t line_;
  std::string field_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "validation"; }
};

class TemplateError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "template"; }
};

class BudgetError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "budget"; }
};

class BackendError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "backend"; }
};

class CacheMissError : public BackendError {
 public:
  explicit CacheMissError(std::string request_id);
  const std::string& request_id() const noexcept { return request_id_; }
  const char* kind() const noexcept override { return "cache_miss"; }

 private:
  std::string request_id_;
};

/// Raised when a transport is used while a NetworkGuard forbids it.
class NetworkForbiddenError : public BackendError {
 public:
  using BackendError::BackendError;
  const char* kind() const noexcept override { return "network_forbidden"; }
};

class MockError : public BackendError {
 public:
  using BackendError::BackendError;
  const char* kind() const noexcept override { return "mock"; }
};

}  // namespace trajcot

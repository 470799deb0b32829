#include "trajcot/error.hpp"

namespace trajcot {

ParseError::ParseError(std::string file, std::size_t line, std::string field,
                       const std::string& what)
    : Error(file + ":" + std::to_string(line) + ": field '" + field + "': " + what),
      file_(std::move(file)),
      line_(line),
      field_(std::move(field)) {}

CacheMissError::CacheMissError(std::string request_id)
    : BackendError("replay cache miss for request " + request_id),
      request_id_(std::move(request_id)) {}

}  // namespace trajcot

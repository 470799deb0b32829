#pragma once

#include <optional>
#include <string_view>
#include <vector>

// Default prompt templates and synonym tables compiled into the library.
namespace trajcot::resources {

/// Looks up an embedded resource by its path relative to core/resources,
/// e.g. "templates/s1.tmpl".
std::optional<std::string_view> find(std::string_view name);

std::vector<std::string_view> names();

}  // namespace trajcot::resources

#pragma once

#include <string_view>
#include <vector>

// Read-only access to the files under data/, embedded at build time.
namespace selftrain::resources {

/// Throws Error(io_error) when `name` (path relative to data/) is unknown.
std::string_view get(std::string_view name);

bool contains(std::string_view name);

std::vector<std::string_view> names();

}  // namespace selftrain::resources

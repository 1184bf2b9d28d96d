#pragma once

#include <string>

namespace shearq {

/// Writes content to path via a temporary sibling and a rename, creating
/// parent directories as needed.
void atomic_write(const std::string& path, const std::string& content);

/// Reads a whole file; throws std::runtime_error when it cannot be opened.
std::string read_file(const std::string& path);

}  // namespace shearq

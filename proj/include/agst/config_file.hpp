#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace agst {

/// Reads a flat `key = value` file. Blank lines and lines starting with '#'
/// are ignored. Throws UsageError with a file:line prefix on malformed lines.
std::vector<std::pair<std::string, std::string>> read_key_value_file(const std::filesystem::path& path);

}  // namespace agst

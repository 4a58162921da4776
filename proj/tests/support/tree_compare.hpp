#pragma once

#include <filesystem>
#include <string>

namespace support {

/// Empty when both directory trees hold the same relative paths with
/// byte-identical contents; otherwise a description of the first difference.
std::string tree_difference(const std::filesystem::path& a, const std::filesystem::path& b);

/// Fresh empty directory under the system temp path.
std::filesystem::path fresh_temp_dir(const std::string& name);

}  // namespace support

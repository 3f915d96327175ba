#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace flor::detail {

std::string read_file(const std::filesystem::path& path);

// Write to a sibling temp file, fsync, rename over the target, fsync the directory.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

} // namespace flor::detail

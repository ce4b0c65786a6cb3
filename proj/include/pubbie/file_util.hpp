#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace pubbie {

// Both throw pubbie::Error(IO_ERROR). write_file replaces the target
// atomically (temp file + rename).
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view data);

}  // namespace pubbie

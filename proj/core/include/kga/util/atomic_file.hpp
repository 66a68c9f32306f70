#pragma once

#include <filesystem>
#include <string_view>

namespace kga::util {

/// Writes `contents` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partial file. Creates parent directories.
/// Throws std::runtime_error if the directory is not writable.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace kga::util

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace reqqa::io {

std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename, so readers never observe a
/// half-written file.
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace reqqa::io

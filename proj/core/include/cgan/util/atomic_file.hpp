#pragma once

#include <filesystem>
#include <string_view>

namespace cgan::util {

/// Writes `contents` to a temporary sibling of `path`, then renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace cgan::util

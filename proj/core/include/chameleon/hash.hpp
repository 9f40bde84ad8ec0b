#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace chameleon::hash {

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view data);

/// Lowercase hex SHA-256 of a file's contents. Throws Error on I/O failure.
std::string sha256_file_hex(const std::filesystem::path& path);

}  // namespace chameleon::hash

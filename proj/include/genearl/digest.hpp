#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace genearl {

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file_hex(const std::filesystem::path& path);

std::string base64_encode(std::string_view data);

}  // namespace genearl

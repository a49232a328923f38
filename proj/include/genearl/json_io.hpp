#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace genearl::json_io {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path);

// Parses `text`; syntax errors become ParseError("<source>:<line>:<col>", ...).
json parse(std::string_view text, const std::string& source);
json read(const std::filesystem::path& path);

// One JSON value per non-blank line.
std::vector<json> read_lines(const std::filesystem::path& path);

// Writes via a temporary sibling and rename, so readers never see a partial file.
void write_atomic(const std::filesystem::path& path, std::string_view content);

// Typed field access with "<context>.<key>" in the error message.
const json& require(const json& obj, std::string_view key, const std::string& ctx);
std::string require_string(const json& obj, std::string_view key, const std::string& ctx);
const json& require_array(const json& obj, std::string_view key, const std::string& ctx);
std::string optional_string(const json& obj, std::string_view key, const std::string& ctx);

// Accepts a JSON string or integer as an identifier.
std::string identifier(const json& value, const std::string& ctx);

}  // namespace genearl::json_io

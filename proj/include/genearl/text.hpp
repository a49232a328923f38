#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace genearl::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

// Splits on '\n', dropping a trailing '\r' from each line.
std::vector<std::string> split_lines(std::string_view s);

// Collapses every run of whitespace (including newlines) into one space and
// trims the ends. Used for model output that must sit on a single prompt line.
std::string collapse_whitespace(std::string_view s);

// LF newlines, no trailing spaces or tabs on any line, no trailing newline.
std::string normalize_layout(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace genearl::text

#include "genearl/json_io.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "genearl/error.hpp"
#include "genearl/text.hpp"

namespace genearl::json_io {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse(std::string_view text, const std::string& source) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // e.byte is 1-based and points just past the offending character.
    std::size_t offset = e.byte == 0 ? 0 : std::min<std::size_t>(e.byte - 1, text.size());
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < offset; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(source + ":" + std::to_string(line) + ":" + std::to_string(col),
                     e.what());
  }
}

json read(const std::filesystem::path& path) {
  return parse(read_file(path), path.string());
}

std::vector<json> read_lines(const std::filesystem::path& path) {
  std::vector<json> out;
  const auto lines = text::split_lines(read_file(path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    out.push_back(parse(lines[i], path.string() + ":" + std::to_string(i + 1)));
  }
  return out;
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  thread_local std::mt19937_64 rng{std::random_device{}()};
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(rng());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw InputError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

const json& require(const json& obj, std::string_view key, const std::string& ctx) {
  if (!obj.is_object()) throw ParseError(ctx, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(ctx + "." + std::string(key), "missing required field");
  }
  return *it;
}

std::string require_string(const json& obj, std::string_view key, const std::string& ctx) {
  const json& v = require(obj, key, ctx);
  if (!v.is_string()) throw ParseError(ctx + "." + std::string(key), "expected a string");
  return v.get<std::string>();
}

const json& require_array(const json& obj, std::string_view key, const std::string& ctx) {
  const json& v = require(obj, key, ctx);
  if (!v.is_array()) throw ParseError(ctx + "." + std::string(key), "expected an array");
  return v;
}

std::string optional_string(const json& obj, std::string_view key, const std::string& ctx) {
  if (!obj.is_object()) throw ParseError(ctx, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) throw ParseError(ctx + "." + std::string(key), "expected a string");
  return it->get<std::string>();
}

std::string identifier(const json& value, const std::string& ctx) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<long long>());
  throw ParseError(ctx, "expected a string or integer identifier");
}

}  // namespace genearl::json_io

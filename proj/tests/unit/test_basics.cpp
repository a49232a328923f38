#include <gtest/gtest.h>

#include "genearl/digest.hpp"
#include "genearl/error.hpp"
#include "genearl/json_io.hpp"
#include "genearl/text.hpp"
#include "support.hpp"

namespace genearl {
namespace {

using testing::TempDir;

TEST(Text, TrimAndCase) {
  EXPECT_EQ(text::trim("  a b \t\n"), "a b");
  EXPECT_EQ(text::trim(""), "");
  EXPECT_EQ(text::to_lower("AgEnT"), "agent");
  EXPECT_TRUE(text::iequals("Place", "place"));
  EXPECT_FALSE(text::iequals("Place", "places"));
}

TEST(Text, SplitLinesDropsCarriageReturns) {
  const auto lines = text::split_lines("a\r\nb\n\nc");
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "a");
  EXPECT_EQ(lines[2], "");
  EXPECT_EQ(lines[3], "c");
}

TEST(Text, CollapseWhitespace) {
  EXPECT_EQ(text::collapse_whitespace("  A  finger\npresses\t keys  "), "A finger presses keys");
  EXPECT_EQ(text::collapse_whitespace(" \n "), "");
}

TEST(Text, NormalizeLayout) {
  EXPECT_EQ(text::normalize_layout("a  \r\nb\t\n\n"), "a\nb");
  EXPECT_EQ(text::normalize_layout("x"), "x");
}

TEST(Digest, KnownVectors) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(base64_encode("hello"), "aGVsbG8=");
  EXPECT_EQ(base64_encode(""), "");
  EXPECT_EQ(base64_encode("ab"), "YWI=");
}

TEST(JsonIo, ParseErrorCarriesPosition) {
  try {
    json_io::parse("{\n  \"a\": [1,\n}", "doc.json");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("doc.json:3"), std::string::npos) << e.what();
  }
}

TEST(JsonIo, RequireNamesTheField) {
  const auto doc = json_io::parse(R"({"a": 1})", "x");
  try {
    json_io::require_string(doc, "a", "cfg");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("cfg.a"), std::string::npos) << e.what();
  }
  EXPECT_THROW(json_io::require(doc, "b", "cfg"), ParseError);
  EXPECT_EQ(json_io::optional_string(doc, "b", "cfg"), "");
  EXPECT_EQ(json_io::identifier(7, "id"), "7");
}

TEST(JsonIo, WriteAtomicAndReadLines) {
  TempDir dir;
  json_io::write_atomic(dir / "a.jsonl", "{\"x\": 1}\n\n{\"x\": 2}\n");
  const auto rows = json_io::read_lines(dir / "a.jsonl");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1]["x"], 2);
  EXPECT_THROW(json_io::read(dir / "missing.json"), InputError);
}

}  // namespace
}  // namespace genearl

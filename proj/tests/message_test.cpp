#include <gtest/gtest.h>

#include <random>

#include "kstream/record.hpp"

namespace kstream {
namespace {

const auto kNow = Clock::time_point{};

TEST(ParseMessage, MapsNumbersAndText) {
  Message m = parse_message(R"({"station_id": 4, "vehicle_model": "e-tron 55"})", 7, kNow);
  EXPECT_EQ(m.seq, 7u);
  ASSERT_EQ(m.attributes.size(), 2u);
  EXPECT_EQ(*m.attributes.find("station_id"), AttributeValue(4.0));
  EXPECT_EQ(*m.attributes.find("vehicle_model"), AttributeValue("e-tron 55"));
}

TEST(ParseMessage, KeepsFieldOrder) {
  Message m = parse_message(R"({"z": 1, "a": 2, "m": 3})", 0, kNow);
  std::vector<std::string> names;
  for (const auto& [n, v] : m.attributes) names.push_back(n);
  EXPECT_EQ(names, (std::vector<std::string>{"z", "a", "m"}));
}

TEST(ParseMessage, NumericLookingStringStaysText) {
  Message m = parse_message(R"({"x": "42"})", 0, kNow);
  EXPECT_TRUE(m.attributes.find("x")->is_text());
}

TEST(ParseMessage, RejectsEmptyLine) {
  EXPECT_THROW(parse_message("", 0, kNow), ParseError);
  EXPECT_THROW(parse_message("   ", 0, kNow), ParseError);
}

TEST(ParseMessage, RejectsNonFiniteNumbers) {
  EXPECT_THROW(parse_message(R"({"x": NaN})", 0, kNow), ParseError);
  EXPECT_THROW(parse_message(R"({"x": 1e999})", 0, kNow), ParseError);
  EXPECT_THROW(parse_message(R"({"x": -1e999})", 0, kNow), ParseError);
}

TEST(ParseMessage, RejectsNonFlatOrNonObject) {
  EXPECT_THROW(parse_message(R"([1,2])", 0, kNow), ParseError);
  EXPECT_THROW(parse_message(R"({"x": [1]})", 0, kNow), ParseError);
  EXPECT_THROW(parse_message(R"({"x": {"y": 1}})", 0, kNow), ParseError);
  EXPECT_THROW(parse_message(R"({"x": true})", 0, kNow), ParseError);
  EXPECT_THROW(parse_message(R"({"x": null})", 0, kNow), ParseError);
  EXPECT_THROW(parse_message(R"({"": 1})", 0, kNow), ParseError);
  EXPECT_THROW(parse_message(R"({"x": 1)", 0, kNow), ParseError);
}

TEST(ParseMessage, StripsCarriageReturn) {
  Message m = parse_message("{\"x\": 1}\r", 0, kNow);
  EXPECT_EQ(*m.attributes.find("x"), AttributeValue(1.0));
}

TEST(FormatMessage, IntegralNumbersHaveNoFraction) {
  Message m;
  m.attributes.set("a", 4.0);
  m.attributes.set("b", 2.5);
  m.attributes.set("c", "t");
  EXPECT_EQ(format_message(m), R"({"a":4,"b":2.5,"c":"t"})");
}

TEST(AttributeValue, NoCrossKindEquality) {
  EXPECT_NE(AttributeValue(4.0), AttributeValue("4"));
  EXPECT_NE(AttributeValue(CategoryId{4}), AttributeValue(4.0));
}

TEST(AttributeMap, SetOverwritesInPlace) {
  AttributeMap m{{"a", 1.0}, {"b", 2.0}};
  m.set("a", 3.0);
  EXPECT_EQ(m.begin()->first, "a");
  EXPECT_EQ(*m.find("a"), AttributeValue(3.0));
  EXPECT_TRUE(m.erase("a"));
  EXPECT_FALSE(m.erase("a"));
  EXPECT_EQ(m.size(), 1u);
}

// Random byte soup never escapes as anything other than ParseError, and
// whatever parses satisfies the message invariants.
TEST(ParseMessage, GarbageNeverBreaksInvariants) {
  std::mt19937 rng(11);
  const std::string alphabet = "{}[]\":,0123456789.eE+-abc nulltrue\\";
  for (int i = 0; i < 5000; ++i) {
    std::string line;
    int len = static_cast<int>(rng() % 24);
    for (int j = 0; j < len; ++j) line.push_back(alphabet[rng() % alphabet.size()]);
    try {
      Message m = parse_message(line, static_cast<std::uint64_t>(i), kNow);
      for (const auto& [name, value] : m.attributes) {
        EXPECT_FALSE(name.empty());
        EXPECT_FALSE(value.is_category());
        if (value.is_number()) EXPECT_TRUE(std::isfinite(value.number()));
      }
    } catch (const ParseError&) {
    }
  }
}

}  // namespace
}  // namespace kstream

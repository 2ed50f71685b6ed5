#include <gtest/gtest.h>

#include "constraintsmith/constraint_model.hpp"
#include "support/generators.hpp"

namespace constraintsmith {
namespace {

ConstraintSpec sentiment_spec() {
  return {{ExactText{"Sentiment : "}, MultipleChoice{{"positive", "negative", "neutral"}}}, {}};
}

ConstraintSpec character_profile_spec() {
  return {{JsonObject{{{"name", FieldType::String},
                       {"age", FieldType::Number},
                       {"children", FieldType::ArrayOfString},
                       {"playable", FieldType::Boolean}}}},
          std::string("character")};
}

TEST(ValidateSpec, SentimentSpecIsValid) { EXPECT_TRUE(validate_spec(sentiment_spec()).empty()); }

TEST(ValidateSpec, EmptyPrimitiveList) {
  auto v = validate_spec({});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].path, "/primitives");
  EXPECT_EQ(v[0].message, "empty primitive list");
}

TEST(ValidateSpec, AdjacentFreeText) {
  auto v = validate_spec({{SomeText{}, SomeText{}}, {}});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].path, "/primitives/1");
  EXPECT_EQ(v[0].message, "adjacent free-text primitives");
}

TEST(ValidateSpec, FreeTextSeparatedByExactTextIsFine) {
  EXPECT_TRUE(validate_spec({{SomeText{}, ExactText{"\n"}, SomeText{}}, {}}).empty());
}

TEST(ValidateSpec, ReportsEveryViolationWithPaths) {
  ConstraintSpec spec{{MultipleChoice{{"a", "a"}},
                       BulletList{"", 0, 10},
                       OrderedList{2, 51},
                       SomeText{3, 2},
                       ExactText{""},
                       JsonObject{{{"k", FieldType::String}, {"k", FieldType::Number}}}},
                      {}};
  auto v = validate_spec(spec);
  std::vector<std::string> paths;
  for (const auto& x : v) paths.push_back(x.path);
  const std::vector<std::string> expected = {
      "/primitives/0/choices/1", "/primitives/1/bullet",    "/primitives/1/min_items",
      "/primitives/2/max_items", "/primitives/3/max_chars", "/primitives/4/text",
      "/primitives/5/fields/1/key"};
  EXPECT_EQ(paths, expected);
}

TEST(ValidateSpec, ChoiceCountAndEmptyChoice) {
  EXPECT_FALSE(validate_spec({{MultipleChoice{{"only"}}}, {}}).empty());
  EXPECT_FALSE(validate_spec({{MultipleChoice{{"a", ""}}}, {}}).empty());
}

TEST(ValidateSpec, JsonObjectNeedsFields) {
  auto v = validate_spec({{JsonObject{}}, {}});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].path, "/primitives/0/fields");
}

TEST(ValidateSpec, IsPure) {
  testing::Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    auto spec = testing::random_spec(rng);
    if (testing::coin(rng)) spec.primitives.push_back(SomeText{0, 0});
    EXPECT_EQ(validate_spec(spec), validate_spec(spec));
  }
}

TEST(SerializeSpec, MultipleChoiceCanonicalForm) {
  const auto text = serialize_spec({{MultipleChoice{{"a", "b"}}}, {}});
  auto j = nlohmann::json::parse(text);
  EXPECT_EQ(j["primitives"][0]["type"], "multiple_choice");
  EXPECT_EQ(j["primitives"][0]["choices"], nlohmann::json({"a", "b"}));
  EXPECT_EQ(text,
            "{\n  \"primitives\": [\n    {\n      \"type\": \"multiple_choice\",\n"
            "      \"choices\": [\n        \"a\",\n        \"b\"\n      ]\n    }\n  ]\n}\n");
}

TEST(SerializeSpec, DefaultsAreWrittenOut) {
  auto j = nlohmann::json::parse(serialize_spec({{BulletList{}, OrderedList{}, ExactText{"x"}}, {}}));
  EXPECT_EQ(j["primitives"][0]["bullet"], "- ");
  EXPECT_EQ(j["primitives"][0]["min_items"], 1);
  EXPECT_EQ(j["primitives"][0]["max_items"], 10);
  EXPECT_EQ(j["primitives"][1]["max_items"], 10);
}

TEST(ParseSpec, UnknownVariant) {
  try {
    parse_spec(R"({"primitives": [{"type": "jsonn_object", "fields": []}]})");
    FAIL() << "expected SpecParseError";
  } catch (const SpecParseError& e) {
    EXPECT_EQ(e.path(), "/primitives/0/type");
    EXPECT_NE(std::string(e.what()).find("unknown variant"), std::string::npos);
  }
}

TEST(ParseSpec, MalformedJsonCarriesOffset) {
  try {
    parse_spec(R"({"primitives": [)");
    FAIL();
  } catch (const SpecParseError& e) {
    EXPECT_NE(e.byte_offset(), SpecParseError::npos);
  }
}

TEST(ParseSpec, InvariantViolationsSurface) {
  EXPECT_THROW(parse_spec(R"({"primitives": []})"), InvalidSpec);
  EXPECT_THROW(parse_spec(R"([{"type": "some_text"}, {"type": "some_text"}])"), InvalidSpec);
}

TEST(ParseSpec, RejectsUnknownKeysAndWrongTypes) {
  EXPECT_THROW(parse_spec(R"([{"type": "exact_text", "text": "a", "extra": 1}])"), SpecParseError);
  EXPECT_THROW(parse_spec(R"([{"type": "list", "min_items": "2"}])"), SpecParseError);
  EXPECT_THROW(parse_spec(R"([{"type": "json_object", "fields": [{"key": "a", "type": "date"}]}])"),
               SpecParseError);
}

TEST(ParseSpec, BareArrayAndDefaults) {
  auto spec = parse_spec(R"([{"type": "list"}, {"type": "json_object", "fields": [{"key": "a"}]}])");
  EXPECT_EQ(std::get<BulletList>(spec.primitives[0]), BulletList{});
  EXPECT_EQ(std::get<JsonObject>(spec.primitives[1]).fields[0].type, FieldType::String);
}

TEST(ParseSpec, CharacterProfileRoundTripPreservesFieldOrder) {
  const auto spec = character_profile_spec();
  const auto parsed = parse_spec(serialize_spec(spec));
  EXPECT_EQ(parsed, spec);
  const auto& fields = std::get<JsonObject>(parsed.primitives[0]).fields;
  ASSERT_EQ(fields.size(), 4u);
  EXPECT_EQ(fields[0].key, "name");
  EXPECT_EQ(fields[1].key, "age");
  EXPECT_EQ(fields[2].key, "children");
  EXPECT_EQ(fields[3].key, "playable");
}

TEST(ParseSpec, RoundTripProperty) {
  testing::Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const auto spec = testing::random_spec(rng);
    ASSERT_TRUE(validate_spec(spec).empty());
    const auto text = serialize_spec(spec);
    ASSERT_EQ(parse_spec(text), spec) << text;
    ASSERT_EQ(serialize_spec(parse_spec(text)), text);
  }
}

}  // namespace
}  // namespace constraintsmith

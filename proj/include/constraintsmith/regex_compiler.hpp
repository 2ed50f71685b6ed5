#pragma once

// Translation of constraint primitives into regex fragments.
//
// Rule table (every fragment is self-delimiting, so a constraint line is the
// plain concatenation of its fragments and the whole pattern is matched
// against the entire completion):
//
//   SomeText        [\s\S]{min,max}   or [\s\S]{min,} when unbounded
//   ExactText       the text with every metacharacter escaped
//   MultipleChoice  (?:c1|c2|...)     choices escaped, longest first
//   List            (?:B[^\n]+\n){min,max}, B the escaped bullet
//   OrderedList     1\. [^\n]+\n(?:2\. [^\n]+\n(?:...)?)?  unrolled to max
//   JsonObject      pretty-printed object, two-space indent, fixed key order

#include <algorithm>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "constraintsmith/constraint_model.hpp"
#include "constraintsmith/errors.hpp"
#include "constraintsmith/regex_ast.hpp"
#include "constraintsmith/regex_parser.hpp"

namespace constraintsmith {

namespace json_patterns {

// Strings: \u escapes are either outside the surrogate block or a
// high/low surrogate pair, so no lone surrogate is ever emitted.
inline constexpr std::string_view kString =
    R"("(?:[^\x00-\x1f"\\]|\\["/\\bfnrt]|\\u(?:[0-9A-CEFa-cef][0-9A-Fa-f]{3}|[Dd][0-7][0-9A-Fa-f]{2}|[Dd][89ABab][0-9A-Fa-f]{2}\\u[Dd][C-Fc-f][0-9A-Fa-f]{2}))*")";
// Numbers: at most 15 integer digits and a 2-digit exponent, so every value
// is a finite double (magnitude below 1e115).
inline constexpr std::string_view kNumber =
    R"(-?(?:0|[1-9][0-9]{0,14})(?:\.[0-9]+)?(?:[Ee][+\-]?[0-9]{1,2})?)";
inline constexpr std::string_view kBoolean = "(?:true|false)";

inline std::string array_of_string() {
  const std::string s(kString);
  return "(?:\\[\\]|\\[" + s + "(?:, " + s + ")*\\])";
}

inline std::string for_type(FieldType t) {
  switch (t) {
    case FieldType::String: return std::string(kString);
    case FieldType::Number: return std::string(kNumber);
    case FieldType::ArrayOfString: return array_of_string();
    case FieldType::Boolean: return std::string(kBoolean);
  }
  return std::string(kString);
}

}  // namespace json_patterns

namespace detail {

inline regex::Node line_body() {
  return regex::repeat(regex::char_class(regex::CharSet::single('\n'), true), 1,
                       regex::kUnbounded);
}

inline regex::Node list_item(std::string_view marker) {
  return regex::concat({regex::literal_string(marker), line_body(), regex::literal('\n')});
}

inline regex::Node ordered_list_ast(const OrderedList& ol) {
  regex::Node tail = regex::empty();
  for (int k = ol.max_items; k >= 1; --k) {
    regex::Node item = regex::concat({list_item(std::to_string(k) + ". "), std::move(tail)});
    tail = k > ol.min_items ? regex::repeat(std::move(item), 0, 1) : std::move(item);
  }
  return tail;
}

inline regex::Node json_object_ast(const JsonObject& obj) {
  std::vector<regex::Node> parts;
  parts.push_back(regex::literal_string("{\n"));
  for (std::size_t i = 0; i < obj.fields.size(); ++i) {
    const auto& f = obj.fields[i];
    // JSON-escape the key, then treat the result as literal text.
    const std::string key = nlohmann::json(f.key).dump(-1, ' ', false,
                                                       nlohmann::json::error_handler_t::strict);
    parts.push_back(regex::literal_string("  " + key + ": "));
    parts.push_back(regex::parse_regex(json_patterns::for_type(f.type)));
    parts.push_back(regex::literal_string(i + 1 < obj.fields.size() ? ",\n" : "\n"));
  }
  parts.push_back(regex::literal('}'));
  return regex::concat(std::move(parts));
}

}  // namespace detail

inline regex::Node primitive_ast(const Primitive& p) {
  if (const auto* obj = std::get_if<JsonObject>(&p)) return detail::json_object_ast(*obj);
  if (const auto* mc = std::get_if<MultipleChoice>(&p)) {
    std::vector<std::string> choices = mc->choices;
    std::stable_sort(choices.begin(), choices.end(),
                     [](const std::string& a, const std::string& b) { return a.size() > b.size(); });
    std::vector<regex::Node> branches;
    for (const auto& c : choices) branches.push_back(regex::literal_string(c));
    return regex::group(regex::alternate(std::move(branches)));
  }
  if (const auto* list = std::get_if<BulletList>(&p)) {
    return regex::repeat(detail::list_item(list->bullet), list->min_items, list->max_items);
  }
  if (const auto* ol = std::get_if<OrderedList>(&p)) return detail::ordered_list_ast(*ol);
  if (const auto* st = std::get_if<SomeText>(&p)) {
    return regex::repeat(regex::char_class(regex::CharSet::universe()), st->min_chars,
                         st->max_chars.value_or(regex::kUnbounded));
  }
  return regex::literal_string(std::get<ExactText>(p).text);
}

inline std::string compile_primitive(const Primitive& p) {
  return regex::render_pattern(primitive_ast(p));
}

struct ManualSource {
  std::string text;

  bool operator==(const ManualSource&) const = default;
};

using ConstraintSource = std::variant<ConstraintSpec, ManualSource>;

struct CompiledConstraint {
  std::string pattern;  // canonical rendering of `ast`
  regex::Node ast;
  ConstraintSource source;
};

inline CompiledConstraint compile_spec(const ConstraintSpec& spec) {
  if (auto v = validate_spec(spec); !v.empty()) throw InvalidSpec(std::move(v));
  std::vector<regex::Node> parts;
  parts.reserve(spec.primitives.size());
  for (const auto& p : spec.primitives) parts.push_back(primitive_ast(p));
  auto ast = regex::concat(std::move(parts));
  auto pattern = regex::render_pattern(ast);
  return {std::move(pattern), std::move(ast), spec};
}

// Throws RegexSyntaxError or UnsupportedFeature.
inline CompiledConstraint parse_manual_regex(std::string_view text) {
  auto ast = regex::parse_regex(text);
  auto pattern = regex::render_pattern(ast);
  return {std::move(pattern), std::move(ast), ManualSource{std::string(text)}};
}

}  // namespace constraintsmith

#pragma once

// Constraint primitives and their composition into a constraint line.
//
// A ConstraintSpec is the unit users build, save and reuse: an ordered list of
// primitives whose regex fragments are concatenated. The canonical JSON form
// defined here is both the on-disk store format and the service wire format
// (see docs/constraint-format.md).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "constraintsmith/errors.hpp"
#include "constraintsmith/utf8.hpp"

namespace constraintsmith {

enum class FieldType { String, Number, ArrayOfString, Boolean };

struct JsonField {
  std::string key;
  FieldType type = FieldType::String;

  bool operator==(const JsonField&) const = default;
};

struct JsonObject {
  std::vector<JsonField> fields;  // order fixes the emitted key order

  bool operator==(const JsonObject&) const = default;
};

struct MultipleChoice {
  std::vector<std::string> choices;

  bool operator==(const MultipleChoice&) const = default;
};

struct BulletList {
  std::string bullet = "- ";
  int min_items = 1;
  int max_items = 10;

  bool operator==(const BulletList&) const = default;
};

inline constexpr int kOrderedListCap = 50;

struct OrderedList {
  int min_items = 1;
  int max_items = 10;

  bool operator==(const OrderedList&) const = default;
};

struct SomeText {
  int min_chars = 1;
  std::optional<int> max_chars;

  bool operator==(const SomeText&) const = default;
};

struct ExactText {
  std::string text;

  bool operator==(const ExactText&) const = default;
};

using Primitive =
    std::variant<JsonObject, MultipleChoice, BulletList, OrderedList, SomeText, ExactText>;

struct ConstraintSpec {
  std::vector<Primitive> primitives;
  std::optional<std::string> name;

  bool operator==(const ConstraintSpec&) const = default;
};

// ---------------------------------------------------------------------------
// Names

inline std::string_view variant_tag(const Primitive& p) {
  struct Visitor {
    std::string_view operator()(const JsonObject&) const { return "json_object"; }
    std::string_view operator()(const MultipleChoice&) const { return "multiple_choice"; }
    std::string_view operator()(const BulletList&) const { return "list"; }
    std::string_view operator()(const OrderedList&) const { return "ordered_list"; }
    std::string_view operator()(const SomeText&) const { return "some_text"; }
    std::string_view operator()(const ExactText&) const { return "exact_text"; }
  };
  return std::visit(Visitor{}, p);
}

inline std::string_view field_type_name(FieldType t) {
  switch (t) {
    case FieldType::String: return "string";
    case FieldType::Number: return "number";
    case FieldType::ArrayOfString: return "array_of_string";
    case FieldType::Boolean: return "boolean";
  }
  return "string";
}

inline std::optional<FieldType> field_type_from_name(std::string_view name) {
  if (name == "string") return FieldType::String;
  if (name == "number") return FieldType::Number;
  if (name == "array_of_string") return FieldType::ArrayOfString;
  if (name == "boolean") return FieldType::Boolean;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Validation

namespace detail {

inline std::string primitive_path(std::size_t i) {
  return "/primitives/" + std::to_string(i);
}

inline void check_text(std::vector<Violation>& out, const std::string& path,
                       const std::string& s, const char* what) {
  if (s.empty()) {
    out.push_back({path, std::string(what) + " must be non-empty"});
  } else if (!utf8::is_valid(s)) {
    out.push_back({path, std::string(what) + " is not valid UTF-8"});
  }
}

inline void validate_primitive(std::vector<Violation>& out, const std::string& base,
                               const Primitive& p) {
  if (const auto* obj = std::get_if<JsonObject>(&p)) {
    if (obj->fields.empty()) out.push_back({base + "/fields", "json object has no fields"});
    std::set<std::string> seen;
    for (std::size_t i = 0; i < obj->fields.size(); ++i) {
      const auto path = base + "/fields/" + std::to_string(i) + "/key";
      const auto& key = obj->fields[i].key;
      check_text(out, path, key, "key");
      if (!key.empty() && !seen.insert(key).second) {
        out.push_back({path, "duplicate key \"" + key + "\""});
      }
    }
  } else if (const auto* mc = std::get_if<MultipleChoice>(&p)) {
    if (mc->choices.size() < 2) {
      out.push_back({base + "/choices", "multiple choice needs at least 2 choices"});
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < mc->choices.size(); ++i) {
      const auto path = base + "/choices/" + std::to_string(i);
      check_text(out, path, mc->choices[i], "choice");
      if (!mc->choices[i].empty() && !seen.insert(mc->choices[i]).second) {
        out.push_back({path, "duplicate choice \"" + mc->choices[i] + "\""});
      }
    }
  } else if (const auto* list = std::get_if<BulletList>(&p)) {
    check_text(out, base + "/bullet", list->bullet, "bullet");
    if (list->min_items < 1) out.push_back({base + "/min_items", "min_items must be >= 1"});
    if (list->max_items < list->min_items) {
      out.push_back({base + "/max_items", "max_items must be >= min_items"});
    }
  } else if (const auto* ol = std::get_if<OrderedList>(&p)) {
    if (ol->min_items < 1) out.push_back({base + "/min_items", "min_items must be >= 1"});
    if (ol->max_items < ol->min_items) {
      out.push_back({base + "/max_items", "max_items must be >= min_items"});
    }
    if (ol->max_items > kOrderedListCap) {
      out.push_back({base + "/max_items",
                     "max_items must be <= " + std::to_string(kOrderedListCap)});
    }
  } else if (const auto* st = std::get_if<SomeText>(&p)) {
    if (st->min_chars < 1) out.push_back({base + "/min_chars", "min_chars must be >= 1"});
    if (st->max_chars && *st->max_chars < st->min_chars) {
      out.push_back({base + "/max_chars", "max_chars must be >= min_chars"});
    }
  } else if (const auto* et = std::get_if<ExactText>(&p)) {
    check_text(out, base + "/text", et->text, "text");
  }
}

}  // namespace detail

// Every invariant violation in `spec`, each with a JSON pointer to the
// offending primitive. Empty iff the spec compiles.
inline std::vector<Violation> validate_spec(const ConstraintSpec& spec) {
  std::vector<Violation> out;
  if (spec.primitives.empty()) {
    out.push_back({"/primitives", "empty primitive list"});
    return out;
  }
  for (std::size_t i = 0; i < spec.primitives.size(); ++i) {
    detail::validate_primitive(out, detail::primitive_path(i), spec.primitives[i]);
    if (i > 0 && std::holds_alternative<SomeText>(spec.primitives[i]) &&
        std::holds_alternative<SomeText>(spec.primitives[i - 1])) {
      out.push_back({detail::primitive_path(i), "adjacent free-text primitives"});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Canonical JSON

using ordered_json = nlohmann::ordered_json;

inline ordered_json primitive_to_json(const Primitive& p) {
  ordered_json j;
  j["type"] = std::string(variant_tag(p));
  std::visit(
      [&j](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, JsonObject>) {
          ordered_json fields = ordered_json::array();
          for (const auto& f : v.fields) {
            ordered_json field;
            field["key"] = f.key;
            field["type"] = std::string(field_type_name(f.type));
            fields.push_back(std::move(field));
          }
          j["fields"] = std::move(fields);
        } else if constexpr (std::is_same_v<T, MultipleChoice>) {
          j["choices"] = v.choices;
        } else if constexpr (std::is_same_v<T, BulletList>) {
          j["bullet"] = v.bullet;
          j["min_items"] = v.min_items;
          j["max_items"] = v.max_items;
        } else if constexpr (std::is_same_v<T, OrderedList>) {
          j["min_items"] = v.min_items;
          j["max_items"] = v.max_items;
        } else if constexpr (std::is_same_v<T, SomeText>) {
          j["min_chars"] = v.min_chars;
          if (v.max_chars) j["max_chars"] = *v.max_chars;
        } else {
          j["text"] = v.text;
        }
      },
      p);
  return j;
}

inline ordered_json spec_to_json(const ConstraintSpec& spec) {
  ordered_json j;
  if (spec.name) j["name"] = *spec.name;
  ordered_json prims = ordered_json::array();
  for (const auto& p : spec.primitives) prims.push_back(primitive_to_json(p));
  j["primitives"] = std::move(prims);
  return j;
}

// Canonical text: two-space indentation, fixed key order, trailing newline.
inline std::string serialize_spec(const ConstraintSpec& spec) {
  return spec_to_json(spec).dump(2) + "\n";
}

namespace detail {

class SpecReader {
 public:
  Primitive primitive(const nlohmann::json& j, const std::string& path) const {
    require_object(j, path);
    auto tag = string_field(j, path, "type");
    if (tag == "json_object") {
      allow_keys(j, path, {"type", "fields"});
      JsonObject obj;
      const auto& fields = member(j, path, "fields");
      if (!fields.is_array()) throw SpecParseError(path + "/fields", "expected an array");
      for (std::size_t i = 0; i < fields.size(); ++i) {
        const auto fpath = path + "/fields/" + std::to_string(i);
        require_object(fields[i], fpath);
        allow_keys(fields[i], fpath, {"key", "type"});
        JsonField f;
        f.key = string_field(fields[i], fpath, "key");
        if (fields[i].contains("type")) {
          auto tname = string_field(fields[i], fpath, "type");
          auto t = field_type_from_name(tname);
          if (!t) throw SpecParseError(fpath + "/type", "unknown field type \"" + tname + "\"");
          f.type = *t;
        }
        obj.fields.push_back(std::move(f));
      }
      return obj;
    }
    if (tag == "multiple_choice") {
      allow_keys(j, path, {"type", "choices"});
      MultipleChoice mc;
      const auto& choices = member(j, path, "choices");
      if (!choices.is_array()) throw SpecParseError(path + "/choices", "expected an array");
      for (std::size_t i = 0; i < choices.size(); ++i) {
        if (!choices[i].is_string()) {
          throw SpecParseError(path + "/choices/" + std::to_string(i), "expected a string");
        }
        mc.choices.push_back(choices[i].get<std::string>());
      }
      return mc;
    }
    if (tag == "list") {
      allow_keys(j, path, {"type", "bullet", "min_items", "max_items"});
      BulletList list;
      if (j.contains("bullet")) list.bullet = string_field(j, path, "bullet");
      if (j.contains("min_items")) list.min_items = int_field(j, path, "min_items");
      if (j.contains("max_items")) list.max_items = int_field(j, path, "max_items");
      return list;
    }
    if (tag == "ordered_list") {
      allow_keys(j, path, {"type", "min_items", "max_items"});
      OrderedList ol;
      if (j.contains("min_items")) ol.min_items = int_field(j, path, "min_items");
      if (j.contains("max_items")) ol.max_items = int_field(j, path, "max_items");
      return ol;
    }
    if (tag == "some_text") {
      allow_keys(j, path, {"type", "min_chars", "max_chars"});
      SomeText st;
      if (j.contains("min_chars")) st.min_chars = int_field(j, path, "min_chars");
      if (j.contains("max_chars") && !j["max_chars"].is_null()) {
        st.max_chars = int_field(j, path, "max_chars");
      }
      return st;
    }
    if (tag == "exact_text") {
      allow_keys(j, path, {"type", "text"});
      return ExactText{string_field(j, path, "text")};
    }
    throw SpecParseError(path + "/type", "unknown variant \"" + tag + "\"");
  }

  ConstraintSpec spec(const nlohmann::json& j) const {
    ConstraintSpec spec;
    const nlohmann::json* prims = &j;
    if (j.is_object()) {
      allow_keys(j, "", {"name", "primitives"});
      if (j.contains("name") && !j["name"].is_null()) spec.name = string_field(j, "", "name");
      prims = &member(j, "", "primitives");
      if (!prims->is_array()) throw SpecParseError("/primitives", "expected an array");
    } else if (!j.is_array()) {
      throw SpecParseError("", "expected an object or an array of primitives");
    }
    for (std::size_t i = 0; i < prims->size(); ++i) {
      spec.primitives.push_back(primitive((*prims)[i], primitive_path(i)));
    }
    return spec;
  }

 private:
  static void require_object(const nlohmann::json& j, const std::string& path) {
    if (!j.is_object()) throw SpecParseError(path, "expected an object");
  }

  static const nlohmann::json& member(const nlohmann::json& j, const std::string& path,
                                      const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw SpecParseError(path, std::string("missing \"") + key + "\"");
    return *it;
  }

  static std::string string_field(const nlohmann::json& j, const std::string& path,
                                  const char* key) {
    const auto& v = member(j, path, key);
    if (!v.is_string()) throw SpecParseError(path + "/" + key, "expected a string");
    return v.get<std::string>();
  }

  static int int_field(const nlohmann::json& j, const std::string& path, const char* key) {
    const auto& v = member(j, path, key);
    if (!v.is_number_integer()) throw SpecParseError(path + "/" + key, "expected an integer");
    const auto n = v.get<std::int64_t>();
    if (n < -1'000'000 || n > 1'000'000) {
      throw SpecParseError(path + "/" + key, "integer out of range");
    }
    return static_cast<int>(n);
  }

  static void allow_keys(const nlohmann::json& j, const std::string& path,
                         std::initializer_list<std::string_view> keys) {
    for (const auto& [k, _] : j.items()) {
      bool known = false;
      for (auto allowed : keys) known = known || k == allowed;
      if (!known) throw SpecParseError(path + "/" + k, "unknown key \"" + k + "\"");
    }
  }
};

}  // namespace detail

// Reads an already-parsed document. Accepts the canonical object form or a
// bare array of primitives. Throws SpecParseError or InvalidSpec.
inline ConstraintSpec spec_from_json(const nlohmann::json& j) {
  auto spec = detail::SpecReader{}.spec(j);
  if (auto v = validate_spec(spec); !v.empty()) throw InvalidSpec(std::move(v));
  return spec;
}

inline ConstraintSpec parse_spec(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SpecParseError("", std::string("malformed JSON: ") + e.what(), e.byte);
  }
  return spec_from_json(j);
}

}  // namespace constraintsmith

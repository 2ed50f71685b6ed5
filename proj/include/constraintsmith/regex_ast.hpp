#pragma once

// AST for the restricted regex dialect, character sets over Unicode scalar
// values, and the canonical renderer.
//
// ASTs built through the factory functions below are canonical: concatenation
// and alternation are flat, single-element sequences collapse to the element,
// an alternation nested in a concatenation sits inside a Group, and a Repeat
// always wraps an atom (Literal, CharClass, AnyChar or Group). For canonical
// ASTs parse_regex(render(ast)) == ast.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "constraintsmith/utf8.hpp"

namespace constraintsmith::regex {

using utf8::Scalar;

struct Interval {
  Scalar lo;
  Scalar hi;  // inclusive

  bool operator==(const Interval&) const = default;
};

// Sorted, disjoint, non-adjacent intervals of scalar values. Surrogates are
// never members.
class CharSet {
 public:
  CharSet() = default;
  explicit CharSet(std::vector<Interval> ranges) : ranges_(std::move(ranges)) { normalize(); }

  static CharSet single(Scalar c) { return CharSet({{c, c}}); }
  static CharSet range(Scalar lo, Scalar hi) { return CharSet({{lo, hi}}); }
  static CharSet universe() { return CharSet({{0, utf8::kMaxScalar}}); }

  const std::vector<Interval>& ranges() const noexcept { return ranges_; }
  bool empty() const noexcept { return ranges_.empty(); }
  bool is_universe() const { return *this == universe(); }

  bool contains(Scalar c) const {
    auto it = std::upper_bound(ranges_.begin(), ranges_.end(), c,
                               [](Scalar v, const Interval& r) { return v < r.lo; });
    return it != ranges_.begin() && std::prev(it)->hi >= c;
  }

  CharSet& add(const CharSet& other) {
    ranges_.insert(ranges_.end(), other.ranges_.begin(), other.ranges_.end());
    normalize();
    return *this;
  }

  CharSet complement() const {
    std::vector<Interval> out;
    Scalar next = 0;
    for (const auto& r : ranges_) {
      if (r.lo > next) out.push_back({next, r.lo - 1});
      next = r.hi + 1;
    }
    if (next <= utf8::kMaxScalar) out.push_back({next, utf8::kMaxScalar});
    return CharSet(std::move(out));
  }

  std::uint64_t size() const {
    std::uint64_t n = 0;
    for (const auto& r : ranges_) n += static_cast<std::uint64_t>(r.hi) - r.lo + 1;
    return n;
  }

  bool operator==(const CharSet&) const = default;

 private:
  void normalize() {
    std::vector<Interval> clipped;
    for (auto r : ranges_) {
      if (r.lo > r.hi) continue;
      r.hi = std::min(r.hi, utf8::kMaxScalar);
      if (r.lo > r.hi) continue;
      // Split around the surrogate block.
      if (r.hi < utf8::kSurrogateLo || r.lo > utf8::kSurrogateHi) {
        clipped.push_back(r);
        continue;
      }
      if (r.lo < utf8::kSurrogateLo) clipped.push_back({r.lo, utf8::kSurrogateLo - 1});
      if (r.hi > utf8::kSurrogateHi) clipped.push_back({utf8::kSurrogateHi + 1, r.hi});
    }
    std::sort(clipped.begin(), clipped.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    ranges_.clear();
    for (const auto& r : clipped) {
      // Scalars on either side of the surrogate gap count as adjacent.
      const bool touches =
          !ranges_.empty() &&
          (static_cast<std::uint64_t>(r.lo) <= static_cast<std::uint64_t>(ranges_.back().hi) + 1 ||
           (ranges_.back().hi == utf8::kSurrogateLo - 1 && r.lo == utf8::kSurrogateHi + 1));
      if (touches) {
        ranges_.back().hi = std::max(ranges_.back().hi, r.hi);
      } else {
        ranges_.push_back(r);
      }
    }
  }

  std::vector<Interval> ranges_;
};

namespace classes {

inline CharSet space() { return CharSet({{0x09, 0x0D}, {0x20, 0x20}}); }
inline CharSet digit() { return CharSet::range('0', '9'); }
inline CharSet word() { return CharSet({{'0', '9'}, {'A', 'Z'}, {'_', '_'}, {'a', 'z'}}); }
inline CharSet any_but_newline() { return CharSet::single('\n').complement(); }

}  // namespace classes

enum class Kind { Literal, CharClass, AnyChar, Concat, Alternate, Repeat, Group };

inline constexpr int kUnbounded = -1;

struct Node {
  Kind kind = Kind::Concat;
  Scalar literal = 0;             // Literal
  CharSet set;                    // CharClass: the listed members, before negation
  bool negated = false;           // CharClass
  int min = 0;                    // Repeat
  int max = kUnbounded;           // Repeat
  std::vector<Node> children;     // Concat, Alternate; Repeat/Group hold one

  bool operator==(const Node&) const = default;

  bool is_atom() const {
    return kind == Kind::Literal || kind == Kind::CharClass || kind == Kind::AnyChar ||
           kind == Kind::Group;
  }
  bool is_empty() const { return kind == Kind::Concat && children.empty(); }

  // Scalars this CharClass node matches.
  CharSet matched_set() const { return negated ? set.complement() : set; }
};

// ---------------------------------------------------------------------------
// Factories (produce canonical ASTs)

inline Node empty() { return Node{}; }

inline Node literal(Scalar c) {
  Node n;
  n.kind = Kind::Literal;
  n.literal = c;
  return n;
}

inline Node char_class(CharSet set, bool negated = false) {
  Node n;
  n.kind = Kind::CharClass;
  n.set = std::move(set);
  n.negated = negated;
  return n;
}

inline Node any_char() {
  Node n;
  n.kind = Kind::AnyChar;
  return n;
}

inline Node group(Node inner) {
  Node n;
  n.kind = Kind::Group;
  n.children.push_back(std::move(inner));
  return n;
}

inline Node concat(std::vector<Node> parts) {
  Node n;
  n.kind = Kind::Concat;
  for (auto& p : parts) {
    if (p.kind == Kind::Concat) {
      for (auto& c : p.children) n.children.push_back(std::move(c));
    } else if (p.kind == Kind::Alternate) {
      n.children.push_back(group(std::move(p)));
    } else {
      n.children.push_back(std::move(p));
    }
  }
  if (n.children.size() == 1) return std::move(n.children.front());
  return n;
}

inline Node alternate(std::vector<Node> branches) {
  Node n;
  n.kind = Kind::Alternate;
  for (auto& b : branches) {
    if (b.kind == Kind::Alternate) {
      for (auto& c : b.children) n.children.push_back(std::move(c));
    } else {
      n.children.push_back(std::move(b));
    }
  }
  if (n.children.size() == 1) return std::move(n.children.front());
  return n;
}

inline Node repeat(Node inner, int min, int max) {
  Node n;
  n.kind = Kind::Repeat;
  n.min = min;
  n.max = max;
  n.children.push_back(inner.is_atom() ? std::move(inner) : group(std::move(inner)));
  return n;
}

inline Node literal_string(std::string_view text) {
  std::vector<Node> parts;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto c = utf8::decode_one(text, pos);
    if (!c) break;
    parts.push_back(literal(*c));
  }
  return concat(std::move(parts));
}

// ---------------------------------------------------------------------------
// Rendering

namespace detail {

inline void append_hex_escape(std::string& out, Scalar c) {
  char buf[16];
  if (c < 0x100) {
    std::snprintf(buf, sizeof buf, "\\x%02x", static_cast<unsigned>(c));
  } else {
    std::snprintf(buf, sizeof buf, "\\x{%x}", static_cast<unsigned>(c));
  }
  out += buf;
}

// Shared by literals and class members; `specials` are the characters that
// need a backslash in the current context.
inline void append_scalar(std::string& out, Scalar c, std::string_view specials) {
  switch (c) {
    case '\n': out += "\\n"; return;
    case '\t': out += "\\t"; return;
    case '\r': out += "\\r"; return;
    case '\f': out += "\\f"; return;
    case '\v': out += "\\v"; return;
    default: break;
  }
  if (c < 0x80 && specials.find(static_cast<char>(c)) != std::string_view::npos) {
    out += '\\';
    out += static_cast<char>(c);
  } else if (c < 0x20 || (c >= 0x7F && c < 0xA0) || c >= 0xD800) {
    append_hex_escape(out, c);
  } else {
    utf8::append(out, c);
  }
}

inline constexpr std::string_view kLiteralSpecials = "\\.*+?()[]{}|^$";
inline constexpr std::string_view kClassSpecials = "\\[]^-";

inline void render_into(std::string& out, const Node& n);

inline void render_class(std::string& out, const Node& n) {
  if (n.set.is_universe()) {
    out += n.negated ? "[^\\s\\S]" : "[\\s\\S]";
    return;
  }
  out += n.negated ? "[^" : "[";
  for (const auto& r : n.set.ranges()) {
    append_scalar(out, r.lo, kClassSpecials);
    if (r.hi == r.lo) continue;
    if (r.hi != r.lo + 1) out += '-';
    append_scalar(out, r.hi, kClassSpecials);
  }
  out += ']';
}

inline void render_quantifier(std::string& out, int min, int max) {
  if (min == 0 && max == kUnbounded) {
    out += '*';
  } else if (min == 1 && max == kUnbounded) {
    out += '+';
  } else if (min == 0 && max == 1) {
    out += '?';
  } else if (max == kUnbounded) {
    out += '{' + std::to_string(min) + ",}";
  } else if (min == max) {
    out += '{' + std::to_string(min) + '}';
  } else {
    out += '{' + std::to_string(min) + ',' + std::to_string(max) + '}';
  }
}

inline void render_into(std::string& out, const Node& n) {
  switch (n.kind) {
    case Kind::Literal:
      append_scalar(out, n.literal, kLiteralSpecials);
      break;
    case Kind::CharClass:
      render_class(out, n);
      break;
    case Kind::AnyChar:
      out += '.';
      break;
    case Kind::Concat:
      for (const auto& c : n.children) {
        if (c.kind == Kind::Alternate) {
          out += "(?:";
          render_into(out, c);
          out += ')';
        } else {
          render_into(out, c);
        }
      }
      break;
    case Kind::Alternate:
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i) out += '|';
        render_into(out, n.children[i]);
      }
      break;
    case Kind::Repeat: {
      const auto& c = n.children.front();
      if (c.is_atom()) {
        render_into(out, c);
      } else {
        out += "(?:";
        render_into(out, c);
        out += ')';
      }
      render_quantifier(out, n.min, n.max);
      break;
    }
    case Kind::Group:
      out += "(?:";
      render_into(out, n.children.front());
      out += ')';
      break;
  }
}

}  // namespace detail

// Canonical pattern text. Newlines and other control characters are written
// as escapes so the result is always a single line.
inline std::string render_pattern(const Node& ast) {
  std::string out;
  detail::render_into(out, ast);
  return out;
}

// Escapes every metacharacter so the result matches exactly `text`.
inline std::string escape_literal(std::string_view text) {
  return render_pattern(literal_string(text));
}

}  // namespace constraintsmith::regex

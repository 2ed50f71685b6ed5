#pragma once

// Parser for the restricted regex dialect (grammar in docs/regex-dialect.md).
// Anything outside the regular subset is reported as UnsupportedFeature with
// the byte offset where it starts; everything else malformed is a
// RegexSyntaxError.

#include <cctype>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "constraintsmith/errors.hpp"
#include "constraintsmith/regex_ast.hpp"

namespace constraintsmith::regex {

inline constexpr int kMaxRepeatCount = 1000;

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Node parse() {
    Node n = parse_alternation();
    if (pos_ < text_.size()) {
      // Only an unbalanced ')' stops the top-level alternation early.
      throw RegexSyntaxError(pos_, "unbalanced ')'");
    }
    return n;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek_byte(std::size_t ahead = 0) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }
  bool starts_with(std::string_view s) const { return text_.substr(pos_).starts_with(s); }

  Scalar next_scalar() {
    const std::size_t at = pos_;
    auto c = utf8::decode_one(text_, pos_);
    if (!c) throw RegexSyntaxError(at, "invalid UTF-8");
    return *c;
  }

  Node parse_alternation() {
    std::vector<Node> branches;
    branches.push_back(parse_concat());
    while (!at_end() && peek_byte() == '|') {
      ++pos_;
      branches.push_back(parse_concat());
    }
    return branches.size() == 1 ? std::move(branches.front()) : alternate(std::move(branches));
  }

  Node parse_concat() {
    std::vector<Node> items;
    while (!at_end() && peek_byte() != '|' && peek_byte() != ')') {
      items.push_back(parse_quantified());
    }
    if (items.empty()) return empty();
    if (items.size() == 1) return std::move(items.front());
    Node n;
    n.kind = Kind::Concat;
    n.children = std::move(items);
    return n;
  }

  Node parse_quantified() {
    Node atom = parse_atom();
    auto q = parse_quantifier();
    if (!q) return atom;
    if (!at_end()) {
      const char c = peek_byte();
      if (c == '?') throw UnsupportedFeature("lazy quantifier", pos_);
      if (c == '+') throw UnsupportedFeature("possessive quantifier", pos_);
      if (c == '*' || c == '{') throw RegexSyntaxError(pos_, "nested quantifier");
    }
    Node n;
    n.kind = Kind::Repeat;
    n.min = q->first;
    n.max = q->second;
    n.children.push_back(std::move(atom));
    return n;
  }

  std::optional<std::pair<int, int>> parse_quantifier() {
    if (at_end()) return std::nullopt;
    switch (peek_byte()) {
      case '*': ++pos_; return std::pair{0, kUnbounded};
      case '+': ++pos_; return std::pair{1, kUnbounded};
      case '?': ++pos_; return std::pair{0, 1};
      case '{': break;
      default: return std::nullopt;
    }
    const std::size_t start = pos_;
    ++pos_;
    const int min = parse_count(start);
    int max = min;
    if (peek_byte() == ',') {
      ++pos_;
      max = peek_byte() == '}' ? kUnbounded : parse_count(start);
    }
    if (peek_byte() != '}') throw RegexSyntaxError(start, "malformed repetition");
    ++pos_;
    if (max != kUnbounded && max < min) {
      throw RegexSyntaxError(start, "repetition bounds out of order");
    }
    return std::pair{min, max};
  }

  int parse_count(std::size_t quant_start) {
    const std::size_t start = pos_;
    long value = 0;
    while (!at_end() && peek_byte() >= '0' && peek_byte() <= '9') {
      value = value * 10 + (peek_byte() - '0');
      if (value > kMaxRepeatCount) {
        throw RegexSyntaxError(quant_start, "repetition count exceeds " +
                                                std::to_string(kMaxRepeatCount));
      }
      ++pos_;
    }
    if (pos_ == start) throw RegexSyntaxError(quant_start, "malformed repetition");
    return static_cast<int>(value);
  }

  Node parse_atom() {
    const std::size_t start = pos_;
    const char c = peek_byte();
    switch (c) {
      case '(':
        return parse_group();
      case '[':
        return parse_class();
      case '.':
        ++pos_;
        return any_char();
      case '^':
      case '$':
        throw UnsupportedFeature("anchor", start);
      case '*':
      case '+':
      case '?':
      case '{':
        throw RegexSyntaxError(start, "nothing to repeat");
      case ']':
      case '}':
        throw RegexSyntaxError(start, std::string("unescaped '") + c + "'");
      case '\\': {
        auto e = parse_escape(false);
        if (e.set) return char_class(std::move(*e.set));
        return literal(e.scalar);
      }
      default:
        return literal(next_scalar());
    }
  }

  Node parse_group() {
    const std::size_t start = pos_;
    ++pos_;  // '('
    if (peek_byte() == '?') {
      if (starts_with("?:")) {
        pos_ += 2;
      } else if (starts_with("?=") || starts_with("?!") || starts_with("?<=") ||
                 starts_with("?<!")) {
        throw UnsupportedFeature("lookaround", start);
      } else if (starts_with("?<") || starts_with("?P<") || starts_with("?'")) {
        throw UnsupportedFeature("named group", start);
      } else if (starts_with("?P=")) {
        throw UnsupportedFeature("backreference", start);
      } else if (starts_with("?>")) {
        throw UnsupportedFeature("atomic group", start);
      } else if (starts_with("?#")) {
        throw UnsupportedFeature("comment", start);
      } else {
        throw UnsupportedFeature("inline flags", start);
      }
    }
    Node inner = parse_alternation();
    if (peek_byte() != ')' || at_end()) throw RegexSyntaxError(start, "unbalanced '('");
    ++pos_;
    return group(std::move(inner));
  }

  struct Escape {
    Scalar scalar = 0;
    std::optional<CharSet> set;  // class escapes like \s
  };

  Escape parse_escape(bool in_class) {
    const std::size_t start = pos_;
    ++pos_;  // '\'
    if (at_end()) throw RegexSyntaxError(start, "trailing backslash");
    const char c = peek_byte();
    auto scalar = [&](Scalar v) {
      ++pos_;
      return Escape{v, std::nullopt};
    };
    auto set = [&](CharSet s) {
      ++pos_;
      return Escape{0, std::move(s)};
    };
    switch (c) {
      case 'n': return scalar('\n');
      case 't': return scalar('\t');
      case 'r': return scalar('\r');
      case 'f': return scalar('\f');
      case 'v': return scalar('\v');
      case 's': return set(classes::space());
      case 'S': return set(classes::space().complement());
      case 'd': return set(classes::digit());
      case 'D': return set(classes::digit().complement());
      case 'w': return set(classes::word());
      case 'W': return set(classes::word().complement());
      case 'x': return Escape{parse_hex(start), std::nullopt};
      case 'b':
        if (in_class) throw RegexSyntaxError(start, "\\b is not allowed in a class");
        throw UnsupportedFeature("word boundary", start);
      case 'B':
        throw UnsupportedFeature("word boundary", start);
      case 'A':
      case 'z':
      case 'Z':
      case 'G':
        throw UnsupportedFeature("anchor", start);
      case 'k':
        throw UnsupportedFeature("backreference", start);
      case 'p':
      case 'P':
        throw UnsupportedFeature("unicode property", start);
      default:
        break;
    }
    if (c >= '1' && c <= '9') throw UnsupportedFeature("backreference", start);
    const auto uc = static_cast<unsigned char>(c);
    if (uc < 0x80 && !std::isalnum(uc) && uc >= 0x20 && uc != 0x7F) return scalar(uc);
    throw RegexSyntaxError(start, "unknown escape");
  }

  Scalar parse_hex(std::size_t start) {
    ++pos_;  // 'x'
    auto hex_digit = [](char ch) -> int {
      if (ch >= '0' && ch <= '9') return ch - '0';
      if (ch >= 'a' && ch <= 'f') return ch - 'a' + 10;
      if (ch >= 'A' && ch <= 'F') return ch - 'A' + 10;
      return -1;
    };
    std::uint32_t v = 0;
    if (peek_byte() == '{') {
      ++pos_;
      int digits = 0;
      while (!at_end() && hex_digit(peek_byte()) >= 0) {
        v = v * 16 + hex_digit(peek_byte());
        ++pos_;
        if (++digits > 6) throw RegexSyntaxError(start, "hex escape too long");
      }
      if (digits == 0 || peek_byte() != '}') throw RegexSyntaxError(start, "malformed hex escape");
      ++pos_;
    } else {
      for (int i = 0; i < 2; ++i) {
        const int d = hex_digit(peek_byte());
        if (at_end() || d < 0) throw RegexSyntaxError(start, "malformed hex escape");
        v = v * 16 + d;
        ++pos_;
      }
    }
    if (!utf8::is_scalar(v)) throw RegexSyntaxError(start, "hex escape is not a scalar value");
    return v;
  }

  // One class member: a scalar or a class escape.
  Escape parse_class_atom() {
    if (peek_byte() == '\\') return parse_escape(true);
    return Escape{next_scalar(), std::nullopt};
  }

  Node parse_class() {
    const std::size_t start = pos_;
    ++pos_;  // '['
    bool negated = false;
    if (peek_byte() == '^') {
      negated = true;
      ++pos_;
    }
    CharSet set;
    bool any = false;
    while (true) {
      if (at_end()) throw RegexSyntaxError(start, "unterminated character class");
      if (peek_byte() == ']') {
        if (!any) throw RegexSyntaxError(start, "empty character class");
        ++pos_;
        break;
      }
      if (starts_with("[:") || starts_with("[=") || starts_with("[.")) {
        throw UnsupportedFeature("posix class", pos_);
      }
      const std::size_t item_start = pos_;
      // A bare '-' is literal only as the first or last member.
      if (peek_byte() == '-' && any && peek_byte(1) != ']') {
        throw RegexSyntaxError(item_start, "misplaced '-' in character class");
      }
      Escape lo = parse_class_atom();
      any = true;
      if (lo.set) {
        set.add(*lo.set);
        continue;
      }
      if (peek_byte() == '-' && peek_byte(1) != ']' && pos_ + 1 < text_.size()) {
        ++pos_;
        Escape hi = parse_class_atom();
        if (hi.set) throw RegexSyntaxError(item_start, "class escape used as range bound");
        if (hi.scalar < lo.scalar) throw RegexSyntaxError(item_start, "range out of order");
        set.add(CharSet::range(lo.scalar, hi.scalar));
      } else {
        set.add(CharSet::single(lo.scalar));
      }
    }
    return char_class(std::move(set), negated);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

// Parses `text` in the restricted dialect. Plain `( )` groups are accepted
// and treated as non-capturing.
inline Node parse_regex(std::string_view text) { return detail::Parser(text).parse(); }

}  // namespace constraintsmith::regex

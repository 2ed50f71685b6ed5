#pragma once

// Hand-rolled random generators for property tests. Every generator takes an
// explicit engine so failures reproduce from the printed seed.

#include <random>
#include <string>
#include <vector>

#include "constraintsmith/constraint_model.hpp"
#include "constraintsmith/regex_ast.hpp"

namespace constraintsmith::testing {

using Rng = std::mt19937_64;

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline bool coin(Rng& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

// Text drawn from an alphabet heavy in regex metacharacters and JSON-special
// characters, with an occasional non-ASCII scalar.
inline std::string random_text(Rng& rng, int min_len, int max_len) {
  static const std::vector<std::string> pieces = {
      "a", "b", "c", "x", " ", ".", "*", "+", "?", "(", ")", "[", "]", "{", "}", "|",
      "^", "$", "\\", "-", "\"", "/", ":", ",", "é", "Ω", "1", "0", "\t"};
  std::string out;
  const int n = uniform_int(rng, min_len, max_len);
  for (int i = 0; i < n; ++i) out += pieces[uniform_int(rng, 0, static_cast<int>(pieces.size()) - 1)];
  return out;
}

inline Primitive random_primitive(Rng& rng, bool allow_some_text) {
  const int kind = uniform_int(rng, 0, allow_some_text ? 5 : 4);
  switch (kind) {
    case 0: {
      JsonObject obj;
      const int n = uniform_int(rng, 1, 3);
      for (int i = 0; i < n; ++i) {
        obj.fields.push_back({"k" + std::to_string(i) + random_text(rng, 0, 2),
                              static_cast<FieldType>(uniform_int(rng, 0, 3))});
      }
      return obj;
    }
    case 1: {
      MultipleChoice mc;
      const int n = uniform_int(rng, 2, 4);
      for (int i = 0; i < n; ++i) mc.choices.push_back(std::to_string(i) + random_text(rng, 0, 4));
      return mc;
    }
    case 2: {
      BulletList list;
      list.bullet = coin(rng) ? "- " : random_text(rng, 1, 3);
      list.min_items = uniform_int(rng, 1, 2);
      list.max_items = list.min_items + uniform_int(rng, 0, 3);
      return list;
    }
    case 3: {
      OrderedList ol;
      ol.min_items = uniform_int(rng, 1, 2);
      ol.max_items = ol.min_items + uniform_int(rng, 0, 3);
      return ol;
    }
    case 4:
      return ExactText{random_text(rng, 1, 6)};
    default: {
      SomeText st;
      st.min_chars = uniform_int(rng, 1, 3);
      if (coin(rng, 0.7)) st.max_chars = st.min_chars + uniform_int(rng, 0, 40);
      return st;
    }
  }
}

// Valid by construction: never two SomeText primitives in a row.
inline ConstraintSpec random_spec(Rng& rng, int max_primitives = 4) {
  ConstraintSpec spec;
  const int n = uniform_int(rng, 1, max_primitives);
  bool prev_free = false;
  for (int i = 0; i < n; ++i) {
    auto p = random_primitive(rng, !prev_free);
    prev_free = std::holds_alternative<SomeText>(p);
    spec.primitives.push_back(std::move(p));
  }
  if (coin(rng, 0.3)) spec.name = "spec-" + std::to_string(uniform_int(rng, 0, 999));
  return spec;
}

// Canonical ASTs over a small alphabet so random strings hit them often.
inline regex::Node random_ast(Rng& rng, int depth) {
  using namespace regex;
  const int choice = depth <= 0 ? uniform_int(rng, 0, 2) : uniform_int(rng, 0, 6);
  switch (choice) {
    case 0:
      return literal(static_cast<Scalar>('a' + uniform_int(rng, 0, 3)));
    case 1: {
      CharSet set;
      const int n = uniform_int(rng, 1, 2);
      for (int i = 0; i < n; ++i) {
        const auto lo = static_cast<Scalar>('a' + uniform_int(rng, 0, 3));
        set.add(CharSet::range(lo, lo + uniform_int(rng, 0, 2)));
      }
      if (coin(rng, 0.1)) set.add(CharSet::single('\n'));
      return char_class(set, coin(rng, 0.3));
    }
    case 2:
      return coin(rng, 0.5) ? any_char() : literal(coin(rng) ? '\n' : '.');
    case 3: {
      std::vector<Node> parts;
      const int n = uniform_int(rng, 2, 3);
      for (int i = 0; i < n; ++i) parts.push_back(random_ast(rng, depth - 1));
      return concat(std::move(parts));
    }
    case 4: {
      std::vector<Node> parts;
      const int n = uniform_int(rng, 2, 3);
      for (int i = 0; i < n; ++i) {
        parts.push_back(coin(rng, 0.1) ? empty() : random_ast(rng, depth - 1));
      }
      return alternate(std::move(parts));
    }
    case 5: {
      const int min = uniform_int(rng, 0, 2);
      const int max = coin(rng, 0.4) ? kUnbounded : min + uniform_int(rng, 0, 2);
      Node inner = random_ast(rng, depth - 1);
      if (inner.kind == Kind::Repeat) inner = group(std::move(inner));
      return repeat(std::move(inner), min, max);
    }
    default:
      return group(random_ast(rng, depth - 1));
  }
}

inline std::string random_subject(Rng& rng, int max_len) {
  static const char alphabet[] = {'a', 'b', 'c', 'd', 'e', '\n', '.'};
  std::string out;
  const int n = uniform_int(rng, 0, max_len);
  for (int i = 0; i < n; ++i) out += alphabet[uniform_int(rng, 0, 6)];
  return out;
}

}  // namespace constraintsmith::testing

#pragma once

// Token vocabularies: the model-independent list of token texts the decoder
// chooses from, plus the reserved end-of-sequence id.
//
// File format (docs/vocabulary-format.md): one JSON object mapping each id,
// written as a decimal string, to its token text, plus a top-level integer
// "eos_id". Ids must be dense 0..V-1 and eos_id must not be one of them.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "constraintsmith/errors.hpp"
#include "constraintsmith/hash.hpp"
#include "constraintsmith/utf8.hpp"

namespace constraintsmith {

using TokenId = std::uint32_t;

class Vocabulary {
 public:
  Vocabulary(std::vector<std::string> tokens, TokenId eos_id)
      : tokens_(std::move(tokens)), eos_id_(eos_id) {
    if (eos_id_ < tokens_.size()) {
      throw VocabularyError("eos_id " + std::to_string(eos_id_) + " collides with a token id");
    }
    scalars_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (tokens_[i].empty()) throw VocabularyError("token " + std::to_string(i) + " is empty");
      auto decoded = utf8::decode(tokens_[i]);
      if (!decoded) throw VocabularyError("token " + std::to_string(i) + " is not valid UTF-8");
      scalars_.push_back(std::move(*decoded));
    }
  }

  std::size_t size() const noexcept { return tokens_.size(); }
  TokenId eos_id() const noexcept { return eos_id_; }
  const std::string& text(TokenId id) const { return tokens_.at(id); }
  const std::vector<utf8::Scalar>& scalars(TokenId id) const { return scalars_.at(id); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  static Vocabulary from_json(std::string_view text) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw VocabularyError(std::string("malformed vocabulary JSON: ") + e.what());
    }
    if (!j.is_object()) throw VocabularyError("vocabulary must be a JSON object");
    if (!j.contains("eos_id") || !j["eos_id"].is_number_unsigned()) {
      throw VocabularyError("vocabulary needs a non-negative integer \"eos_id\"");
    }
    const auto eos = j["eos_id"].get<std::uint64_t>();
    const std::size_t n = j.size() - 1;
    std::vector<std::string> tokens(n);
    for (const auto& [key, value] : j.items()) {
      if (key == "eos_id") continue;
      std::size_t consumed = 0;
      unsigned long long id = 0;
      try {
        id = std::stoull(key, &consumed);
      } catch (const std::exception&) {
        consumed = 0;
      }
      if (consumed != key.size() || key.empty() || (key.size() > 1 && key[0] == '0')) {
        throw VocabularyError("vocabulary key \"" + key + "\" is not a token id");
      }
      if (id >= n) throw VocabularyError("token ids are not dense (id " + key + ")");
      if (!value.is_string()) throw VocabularyError("token " + key + " is not a string");
      tokens[id] = value.get<std::string>();
    }
    if (eos < n) throw VocabularyError("eos_id collides with a token id");
    if (eos > UINT32_MAX) throw VocabularyError("eos_id out of range");
    return Vocabulary(std::move(tokens), static_cast<TokenId>(eos));
  }

  static Vocabulary load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw VocabularyError("cannot open vocabulary file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
  }

  // Ids in numeric order, then eos_id.
  std::string to_json() const {
    nlohmann::ordered_json j;
    for (std::size_t i = 0; i < tokens_.size(); ++i) j[std::to_string(i)] = tokens_[i];
    j["eos_id"] = eos_id_;
    return j.dump(1) + "\n";
  }

  std::uint64_t hash() const {
    std::uint64_t h = fnv1a64(std::to_string(eos_id_));
    for (const auto& t : tokens_) {
      h = fnv1a64(std::to_string(t.size()), h);
      h = fnv1a64(":", h);
      h = fnv1a64(t, h);
    }
    return h;
  }

  // Greedy longest-match segmentation. Throws VocabularyError when some
  // position cannot be covered by any token.
  std::vector<TokenId> encode(std::string_view text) const {
    auto decoded = utf8::decode(text);
    if (!decoded) throw VocabularyError("text is not valid UTF-8");
    std::vector<TokenId> out;
    std::size_t pos = 0;
    while (pos < decoded->size()) {
      std::size_t best_len = 0;
      TokenId best = 0;
      for (TokenId id = 0; id < scalars_.size(); ++id) {
        const auto& s = scalars_[id];
        if (s.size() > best_len && pos + s.size() <= decoded->size() &&
            std::equal(s.begin(), s.end(), decoded->begin() + static_cast<std::ptrdiff_t>(pos))) {
          best_len = s.size();
          best = id;
        }
      }
      if (best_len == 0) {
        throw VocabularyError("no token covers scalar position " + std::to_string(pos));
      }
      out.push_back(best);
      pos += best_len;
    }
    return out;
  }

  std::string decode(const std::vector<TokenId>& ids) const {
    std::string out;
    for (TokenId id : ids) out += text(id);
    return out;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::vector<utf8::Scalar>> scalars_;
  TokenId eos_id_;
};

namespace detail {

inline constexpr const char* kBundledFragments[] = {
    // JSON layout
    "{\n", "\n}", "  \"", "\": ", "\",\n", "\"\n", ",\n", "[\"", "\"]", "\", \"", "[]",
    "true", "false", "null", ", ", "\": \"", "\": [", "\": t", "\": f", "\"],\n", "\"]\n",
    "0,\n", "\\n", "\\\"", "\\\\", "\\u00",
    // lists
    "- ", "* ", "1. ", "2. ", "3. ", "4. ", "5. ", ". ", ".\n", "\n- ", "\n\n",
    // sentiment example
    "Sentiment", "Sent", "iment", " : ", "positive", "negative", "neutral", "pos", "itive", "neg",
    "ative", "neut", "ral",
    // schema keys
    "name", "age", "children", "child", "ren", "playable", "play", "able", "question",
    "correct", "incorrect", "_answer", "_answers", "answer",
    // digits
    "00", "10", "12", "19", "20", "25", "30", "42", "50", "99", "100", "0.", "1.", ".5", "e+", "e-",
    // English pieces
    "the", "The", " the", "and", " and", "ing", "ion", "tion", "ment", " of", " to", " in",
    " is", " it", " a", " an", " be", " was", " for", " on", " with", " that", " this", " are",
    " as", " at", " by", " he", " she", " they", " we", " you", " his", " her", " from",
    " or", " not", " but", " have", " has", " had", " can", " will", " one", " all", " my",
    "er", "re", "on", "an", "en", "at", "es", "ed", "or", "te", "st", "ar", "nd", "nt",
    "is", "al", "as", "ha", "ng", "co", "se", "me", "de", "le", "ve", "li", "ri", "ro",
    "ic", "ne", "ea", "ra", "ce", "ly", "ou", "ll", "ch", "sh", "th", "wh", "qu", "ck",
    "ay", "ow", "oo", "ee", "ie", "ai", "ey", "ur", "ir", "ter", "ers", "est", "ous",
    "ful", "less", "ness", "ity", "ive", "ize", "ate", "ent", "ant", "ence", "ance", "ial",
    "Mr", "Ms", "Dr", "John", "Mary", "Alice", "Bob", "story", "Short", "Suggestions",
    "movie", "great", "good", "bad", "review",
};

}  // namespace detail

// 256 tokens: printable ASCII, newline and tab as single-scalar tokens,
// followed by common multi-scalar fragments. Any string over printable
// ASCII plus newline and tab can be spelled with it.
inline Vocabulary bundled_test_vocabulary() {
  constexpr std::size_t kSize = 256;
  std::vector<std::string> tokens;
  std::set<std::string> seen;
  auto add = [&](std::string t) {
    if (tokens.size() < kSize && seen.insert(t).second) tokens.push_back(std::move(t));
  };
  for (char c = 0x20; c < 0x7F; ++c) add(std::string(1, c));
  add("\n");
  add("\t");
  for (const char* f : detail::kBundledFragments) add(f);
  if (tokens.size() != kSize) throw VocabularyError("bundled vocabulary has the wrong size");
  return Vocabulary(std::move(tokens), static_cast<TokenId>(kSize));
}

// Deterministic vocabulary of `size` tokens for benchmarks: every printable
// ASCII scalar plus newline, then pseudo-random printable strings of length
// 2..8.
inline Vocabulary synthetic_vocabulary(std::size_t size, std::uint64_t seed = 1) {
  std::vector<std::string> tokens;
  std::set<std::string> seen;
  for (char c = 0x20; c < 0x7F && tokens.size() < size; ++c) {
    tokens.emplace_back(1, c);
    seen.insert(tokens.back());
  }
  if (tokens.size() < size) {
    tokens.emplace_back("\n");
    seen.insert("\n");
  }
  std::uint64_t state = seed;
  auto next = [&state]() {  // splitmix64
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  while (tokens.size() < size) {
    const std::size_t len = 2 + next() % 7;
    std::string t;
    for (std::size_t i = 0; i < len; ++i) t += static_cast<char>(0x20 + next() % 95);
    if (seen.insert(t).second) tokens.push_back(std::move(t));
  }
  return Vocabulary(std::move(tokens), static_cast<TokenId>(size));
}

}  // namespace constraintsmith

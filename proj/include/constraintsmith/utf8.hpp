#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace constraintsmith::utf8 {

using Scalar = char32_t;

inline constexpr Scalar kMaxScalar = 0x10FFFF;
inline constexpr Scalar kSurrogateLo = 0xD800;
inline constexpr Scalar kSurrogateHi = 0xDFFF;

constexpr bool is_scalar(Scalar c) noexcept {
  return c <= kMaxScalar && (c < kSurrogateLo || c > kSurrogateHi);
}

// Decodes one scalar starting at `pos`. Returns the scalar and advances `pos`,
// or nullopt on malformed input (overlong, surrogate, truncated).
inline std::optional<Scalar> decode_one(std::string_view s, std::size_t& pos) {
  if (pos >= s.size()) return std::nullopt;
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  int len;
  Scalar c;
  Scalar min;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2; c = b0 & 0x1F; min = 0x80;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3; c = b0 & 0x0F; min = 0x800;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4; c = b0 & 0x07; min = 0x10000;
  } else {
    return std::nullopt;
  }
  if (pos + len > s.size()) return std::nullopt;
  for (int i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) return std::nullopt;
    c = (c << 6) | (b & 0x3F);
  }
  if (c < min || !is_scalar(c)) return std::nullopt;
  pos += len;
  return c;
}

inline std::optional<std::vector<Scalar>> decode(std::string_view s) {
  std::vector<Scalar> out;
  out.reserve(s.size());
  std::size_t pos = 0;
  while (pos < s.size()) {
    auto c = decode_one(s, pos);
    if (!c) return std::nullopt;
    out.push_back(*c);
  }
  return out;
}

inline bool is_valid(std::string_view s) { return decode(s).has_value(); }

inline void append(std::string& out, Scalar c) {
  if (c < 0x80) {
    out.push_back(static_cast<char>(c));
  } else if (c < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (c >> 6)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else if (c < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (c >> 12)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (c >> 18)));
    out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  }
}

inline std::string encode(const std::vector<Scalar>& scalars) {
  std::string out;
  for (Scalar c : scalars) append(out, c);
  return out;
}

}  // namespace constraintsmith::utf8

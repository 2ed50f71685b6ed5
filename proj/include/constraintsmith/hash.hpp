#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace constraintsmith {

// 64-bit FNV-1a. Stable across platforms, which matters because hashes key
// the index cache and appear in store listings.
inline std::uint64_t fnv1a64(std::string_view data,
                             std::uint64_t seed = 0xcbf29ce484222325ULL) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace constraintsmith

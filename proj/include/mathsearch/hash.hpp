#ifndef MATHSEARCH_HASH_HPP
#define MATHSEARCH_HASH_HPP

#include <cstdint>
#include <string>
#include <string_view>

namespace mathsearch {

// 64-bit FNV-1a. Used for stable content identifiers, not for security.
constexpr std::uint64_t fnv1a64(std::string_view data,
                                std::uint64_t seed = 14695981039346656037ull) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t value);

}  // namespace mathsearch

#endif  // MATHSEARCH_HASH_HPP

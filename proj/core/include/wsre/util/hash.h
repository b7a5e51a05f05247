#ifndef WSRE_UTIL_HASH_H_
#define WSRE_UTIL_HASH_H_

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

namespace wsre {

// 64-bit FNV-1a. Stable across platforms and runs, unlike std::hash.
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

constexpr std::uint64_t Fnv1a64(std::string_view data,
                                std::uint64_t h = kFnvOffset) {
  for (char c : data) {
    h ^= static_cast<std::uint8_t>(c);
    h *= kFnvPrime;
  }
  return h;
}

// Hashes a sequence of fields with a separator byte so that ("ab","c") and
// ("a","bc") differ.
constexpr std::uint64_t HashFields(
    std::initializer_list<std::string_view> parts) {
  std::uint64_t h = kFnvOffset;
  for (std::string_view part : parts) {
    h = Fnv1a64(part, h);
    h = Fnv1a64(std::string_view("\x1f", 1), h);
  }
  return h;
}

constexpr std::uint64_t MixSeed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string HexDigest(std::uint64_t value);

}  // namespace wsre

#endif  // WSRE_UTIL_HASH_H_

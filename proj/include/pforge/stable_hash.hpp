#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace pforge {

// Seeded 64-bit hash: FNV-1a over the bytes, splitmix64 finalizer.
// Avoids std::hash so values are identical across platforms and runs;
// record ids, MinHash lanes and cassette keys all depend on that.

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t stable_hash64(std::string_view bytes, std::uint64_t seed = 0) {
    std::uint64_t h = 1469598103934665603ULL ^ splitmix64(seed);
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return splitmix64(h);
}

inline std::string to_hex16(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

} // namespace pforge

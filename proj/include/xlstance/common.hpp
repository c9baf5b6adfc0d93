#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace xlstance {

// Thrown on malformed input files (corpora, configs, caches).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Thrown on invalid run configuration (unknown keys, bad values).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class TranslationErrorKind {
    unsupported_pair,
    transport,
    rate_limited,
    empty_result,
};

class TranslationError : public std::runtime_error {
public:
    TranslationError(TranslationErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    TranslationErrorKind kind() const { return kind_; }

private:
    TranslationErrorKind kind_;
};

// FNV-1a 64-bit over raw bytes. Used for cache keys and mock seeding;
// the exact constants are part of the cache file contract (docs/formats.md).
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    // mix the value through one FNV round per byte
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xffULL;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Uniform double in [0, 1) from the top 53 bits of the engine output.
// std::uniform_real_distribution is not bit-stable across standard library
// implementations; this mapping is, and replay stability depends on it.
inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n) by rejection sampling; bit-stable across
// platforms for the same reason as uniform01.
inline std::uint64_t uniform_below(std::mt19937_64& gen, std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = gen();
    } while (x >= limit);
    return x % n;
}

// In-place shuffle built on uniform_below, so permutations replay
// bit-identically everywhere (std::shuffle is implementation-defined).
inline void fisher_yates(std::vector<std::size_t>& idx, std::mt19937_64& gen) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        std::swap(idx[i - 1], idx[uniform_below(gen, i)]);
    }
}

inline const char* version_string() { return "0.1.0"; }

}  // namespace xlstance

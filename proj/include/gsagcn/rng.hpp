#ifndef GSAGCN_RNG_HPP
#define GSAGCN_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace gsagcn {

/// Derives an independent 64-bit seed for the named sub-stream of `root`.
///
/// Every consumer of randomness (init, dropout, splits, sampling, ...) asks
/// for its own stream, so switching one feature on or off never shifts the
/// numbers another feature sees.
inline std::uint64_t substream_seed(std::uint64_t root, std::string_view name) {
    // FNV-1a over the name, then a splitmix64 finalizer over (root ^ hash).
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::uint64_t z = root ^ h;
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::mt19937_64 make_stream(std::uint64_t root, std::string_view name) {
    return std::mt19937_64(substream_seed(root, name));
}

}  // namespace gsagcn

#endif  // GSAGCN_RNG_HPP

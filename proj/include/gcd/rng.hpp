#ifndef GCD_RNG_HPP
#define GCD_RNG_HPP

#include <cstdint>
#include <random>

namespace gcd {

// splitmix64; used to derive independent per-example seeds so that parallel
// loops produce the same streams regardless of scheduling.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix64(mix64(seed) ^ mix64(stream * 0x9e3779b97f4a7c15ULL + 0x165667b19e3779f9ULL));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream) {
    return derive_seed(derive_seed(seed, stream), substream);
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    return std::mt19937_64(mix64(seed));
}

} // namespace gcd

#endif

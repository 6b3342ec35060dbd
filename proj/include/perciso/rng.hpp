#pragma once

#include <cstdint>
#include <limits>

#include "perciso/lattice.hpp"

namespace perciso {

// Counter-based randomness: every random decision is a pure hash of
// (master_seed, stream, counter). Forced and non-forced edges therefore
// decouple, and re-sampling a stream reproduces it bit for bit.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix3(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    std::uint64_t h = splitmix64(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    return splitmix64(h ^ (0xc2b2ae3d27d4eb4fULL * (counter + 1)));
}

inline double uniform01(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Open threshold for probability p: an edge is open iff hash < threshold.
// p >= 1 is represented by the saturated threshold plus an all-open flag
// handled by the caller, so p == 1 really means every edge open.
inline std::uint64_t open_threshold(double p) {
    if (p >= 1.0) return std::numeric_limits<std::uint64_t>::max();
    if (p <= 0.0) return 0;
    long double t = static_cast<long double>(p) * 18446744073709551616.0L;  // 2^64
    if (t >= 18446744073709551615.0L) return std::numeric_limits<std::uint64_t>::max();
    return static_cast<std::uint64_t>(t);
}

// Tie-break mark in [0,1) attached to a lattice vertex.
inline double eta_mark(std::uint64_t seed, Vec2i v) {
    std::uint64_t key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(v.x)) << 32) |
                        static_cast<std::uint32_t>(v.y);
    return uniform01(mix3(seed, 0x657461ULL /* "eta" */, key));
}

}  // namespace perciso

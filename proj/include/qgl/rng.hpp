#pragma once

// Counter-based deterministic randomness: every draw is a pure function of a
// 64-bit key, so realizations are reproducible and embarrassingly parallel.
// Edge draws are keyed by the edge's identity (base coordinates + direction),
// which keeps shared edges' lengths fixed when a cube is enlarged.

#include <cmath>
#include <cstdint>

#include "qgl/lattice.hpp"

namespace qgl::rng {

inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t combine(std::uint64_t h, std::uint64_t v) {
    return mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

inline std::uint64_t edge_key(const Edge& e) {
    std::uint64_t h = 0x51ab3ef7u;
    for (int c : e.base.coords)
        h = combine(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(c)));
    return combine(h, static_cast<std::uint64_t>(e.direction));
}

// Stream for one Monte Carlo realization of one experiment.
inline std::uint64_t realization_seed(std::uint64_t master, std::uint64_t realization) {
    return combine(mix64(master), realization);
}

// u in [0, 1)
inline double to_unit(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// u in (0, 1): safe for log/quantile transforms
inline double to_unit_open(std::uint64_t h) {
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

// Standard normal from one key (Box-Muller, first component).
inline double to_normal(std::uint64_t h) {
    double u1 = to_unit_open(h);
    double u2 = to_unit_open(mix64(h ^ 0xd1b54a32d192ed03ULL));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace qgl::rng

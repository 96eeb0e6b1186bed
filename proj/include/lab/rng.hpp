#ifndef LAB_RNG_HPP
#define LAB_RNG_HPP

// Deterministic randomness utilities.  Every stochastic routine in the lab
// takes a 64-bit seed and derives private substreams from it by hashing a
// short tag, so results are reproducible bit-for-bit and independent
// components do not share streams.  Low-discrepancy sampling is Halton with
// a per-seed Cranley-Patterson shift ("scrambled" in the randomized-QMC
// sense).

#include <cstdint>
#include <cmath>
#include <random>
#include <string_view>

#include "lab/vec.hpp"

namespace lab {

// splitmix64 finalizer; good avalanche, used for seed derivation only.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derive an independent substream seed from (seed, tag).  FNV-1a over the tag
// folded through splitmix.
inline std::uint64_t substream(std::uint64_t seed, std::string_view tag) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char ch : tag) {
        h ^= static_cast<unsigned char>(ch);
        h *= 1099511628211ULL;
    }
    return mix64(seed ^ mix64(h));
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::string_view tag) {
    return std::mt19937_64(substream(seed, tag));
}

inline double uniform01(std::mt19937_64& g) {
    // 53-bit mantissa draw in [0,1).
    return (g() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& g, double lo, double hi) {
    return lo + (hi - lo) * uniform01(g);
}

// Uniform random rotation of the plane.
inline Rot2 random_rot2(std::mt19937_64& g) {
    return Rot2(uniform(g, 0.0, 2.0 * M_PI));
}

// Shoemake's subgroup algorithm: uniform (Haar) random unit quaternion.
inline Quat random_quat(std::mt19937_64& g) {
    const double u1 = uniform01(g), u2 = uniform01(g), u3 = uniform01(g);
    const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    const double t2 = 2.0 * M_PI * u2, t3 = 2.0 * M_PI * u3;
    return Quat{a * std::sin(t2), a * std::cos(t2), b * std::sin(t3), b * std::cos(t3)};
}

// Uniform direction on the unit circle / unit sphere.
inline Vec2 random_dir2(std::mt19937_64& g) {
    double t = uniform(g, 0.0, 2.0 * M_PI);
    return {std::cos(t), std::sin(t)};
}

inline Vec3 random_dir3(std::mt19937_64& g) {
    double z = uniform(g, -1.0, 1.0);
    double t = uniform(g, 0.0, 2.0 * M_PI);
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(t), r * std::sin(t), z};
}

// Radical-inverse / Halton sequence.
inline double radical_inverse(std::uint64_t i, std::uint32_t base) {
    double inv = 1.0 / base, f = inv, v = 0.0;
    while (i > 0) {
        v += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return v;
}

// Low-discrepancy point generator in [0,1)^k, k <= 6, with a random shift
// drawn once from the seed (Cranley-Patterson rotation).  Deterministic in
// (seed, index).
class Halton {
public:
    Halton(int dim, std::uint64_t seed, std::string_view tag) : dim_(dim) {
        auto g = make_rng(seed, tag);
        for (int d = 0; d < dim_; ++d) shift_[d] = uniform01(g);
    }

    int dim() const { return dim_; }

    // d-th coordinate of point #i, shifted mod 1.
    double coord(std::uint64_t i, int d) const {
        double v = radical_inverse(i + 1, kBases[d]) + shift_[d];
        return v - std::floor(v);
    }

private:
    static constexpr std::uint32_t kBases[6] = {2, 3, 5, 7, 11, 13};
    int dim_;
    double shift_[6] = {0, 0, 0, 0, 0, 0};
};

} // namespace lab

#endif

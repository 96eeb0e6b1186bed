#ifndef LAB_KOCH_INTERNAL_HPP
#define LAB_KOCH_INTERNAL_HPP

// Shared snowflake construction details (src-private).  The boundary is
// traversed ccw with the interior on the left; each refinement step replaces
// the middle third of an edge by the two sides of an outward-pointing
// equilateral triangle.

#include <cmath>

#include "lab/vec.hpp"

namespace lab::koch_detail {

inline const double kSqrt3 = std::sqrt(3.0);

// Base triangle: side 1, horizontal bottom, centroid at the origin.
inline const Vec2 kBaseA{-0.5, -kSqrt3 / 6.0};
inline const Vec2 kBaseB{0.5, -kSqrt3 / 6.0};
inline const Vec2 kBaseC{0.0, kSqrt3 / 3.0};

// Everything the curve ever does over edge (a,b) -- pendant triangles and all
// their descendants -- stays in the disk around the edge midpoint of radius
// |b-a|/2.  The factor adds margin for rounding.
inline constexpr double kClusterRadiusFactor = 0.5000001;

// Rotate v by -60 degrees; places the pendant tip on the outward side of a
// ccw-oriented boundary edge.
inline Vec2 rot_m60(Vec2 v) {
    const double c = 0.5, s = -kSqrt3 / 2.0;
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

struct EdgePieces {
    Vec2 u, t, w; // a -> u -> t -> w -> b replaces a -> b
};

inline EdgePieces subdivide(Vec2 a, Vec2 b) {
    EdgePieces e;
    e.u = a + (b - a) / 3.0;
    e.w = a + (b - a) * (2.0 / 3.0);
    e.t = e.u + rot_m60(e.w - e.u);
    return e;
}

} // namespace lab::koch_detail

#endif

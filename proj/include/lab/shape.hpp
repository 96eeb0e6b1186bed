#ifndef LAB_SHAPE_HPP
#define LAB_SHAPE_HPP

// Reference shapes used throughout the lab.  Bounded shapes are stored
// centered at their centroid; poses move them.  Membership follows the
// ties-inside convention: a point exactly on the boundary belongs to the
// shape, so counts are deterministic.

#include <array>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "lab/vec.hpp"

#include "json.hpp"

namespace lab {

using Triangle = std::array<Vec2, 3>;

double triangle_area(const Triangle& t);          // unsigned
bool in_triangle(const Triangle& t, Vec2 p);      // ties inside, any orientation
Vec2 triangle_centroid(const Triangle& t);

// ---------------------------------------------------------------------------
// shape variants

struct Ball {
    double radius = 1.0;
};

struct ConvexPolygon {
    std::vector<Vec2> vertices; // ccw, validated
};

// Region bounded by the level-n Koch snowflake curve (base triangle side 1,
// horizontal bottom edge, centroid at the origin).
struct KochRegion {
    int level = 8;
};

// The level-n snowflake boundary as a closed polyline: 3*4^n segments of
// length 3^{-n}.
struct KochCurvePolyline {
    int level = 8;
};

// Union of disjoint vertical strips R_n = [n^{-g} - z_n/3, n^{-g}] x [0,1],
// z_n = n^{-g} - (n+1)^{-g}, g = beta/(1-beta), stored up to `truncation` and
// then shifted so the centroid of the stored union sits at the origin.  Total
// width of the stored strips telescopes to (1 - (T+1)^{-g})/3.
struct RectangleUnionGamma {
    double beta = 0.5;   // target symmetric-difference exponent, in (0,1)
    int truncation = 0;  // 0 = pick default from the n^{-g} < 1e-6 rule
};

struct HalfSpace {
    Vec2 theta{1.0, 0.0}; // unit outward direction
    double rho = 0.0;     // {x : x . theta > rho}
};

using Shape = std::variant<Ball, ConvexPolygon, KochRegion, KochCurvePolyline,
                           RectangleUnionGamma, HalfSpace>;

// Throws std::invalid_argument when a shape violates its invariants
// (non-convex or cw polygon, radius <= 0, beta outside (0,1), |theta| != 1,
// negative level...).  koch levels above 12 raise a resource error.
void validate(const Shape& s);

// ---------------------------------------------------------------------------
// koch machinery

// Closed snowflake boundary at the given level, ccw, 3*4^level vertices.
std::vector<Vec2> koch_polygon(int level);

// Exact triangle decomposition of the koch region: the base triangle followed
// by the 4^level - 1 pendant triangles, generation by generation.
const std::vector<Triangle>& koch_soup(int level);

// Region area |K_n| = 2 sqrt(3)/5 - |F_n|, |F_n| = (3 sqrt(3)/20) (4/9)^n.
double koch_region_area(int level);
double koch_tail_area(int level);

// Membership in the koch region without materializing the polygon; used by
// the hot counting loops.  Ties inside.
bool koch_region_contains(int level, Vec2 p);

// Decomposition bookkeeping for the snowflake: pendant counts/sides per
// generation and the natural translation scales t_n.
struct SnowflakeDecomposition {
    int level;
    double region_area;               // |K_n|
    double tail_area;                 // |F_n|, closed form
    double tail_area_series() const;  // same quantity summed term by term
    long long pendant_count(int k) const; // 3*4^k pendants of generation k
    double pendant_side(int k) const;     // 3^{-k-1}
    double translation_scale(int k) const; // t_k = (sqrt(3)/2) 3^{-k}
};
SnowflakeDecomposition snowflake_decomposition(int level);

// ---------------------------------------------------------------------------
// shape operations

// Lebesgue volume of the reference shape; dim matters only for balls.
// Half-spaces are unbounded and throw; the polyline has zero area.
double volume(const Shape& s, int dim = 2);

// Radius of the smallest origin-centered ball containing the shape
// (infinity for half-spaces).
double bounding_radius(const Shape& s);

// Membership of a world point in the posed shape x + tau sigma(Omega).
// 3-D poses are only meaningful for balls.
bool contains(const Shape& s, const AffinePose& pose, Vec2 p);
bool contains(const Shape& s, const AffinePose& pose, Vec3 p);

// Membership in the reference (unposed) shape.
bool contains_reference(const Shape& s, Vec2 p);

// Symmetric-difference growth exponent the shape was designed for: 1 for
// convex bodies, 2 - log_3(4) for the koch region, beta for the strip union.
double shape_beta(const Shape& s);

// Vertex list for polygonal shapes (convex polygon, koch region/polyline,
// strips as rectangles); throws for balls and half-spaces.
std::vector<Vec2> shape_vertices(const Shape& s);

// Strips of the rectangle union in stored (centered) coordinates.
struct Strip { double x0, x1, y0, y1; };
std::vector<Strip> rectangle_union_strips(const RectangleUnionGamma& r);

// ---------------------------------------------------------------------------
// serialization

// JSON with a "variant" discriminator, e.g. {"variant":"ball","radius":0.5}.
nlohmann::json shape_to_json(const Shape& s);
Shape shape_from_json(const nlohmann::json& j);

// Vertex CSV (x,y per row, 17 significant digits, crlf line ends).
void write_vertices_csv(const std::string& path, const std::vector<Vec2>& vertices);
std::vector<Vec2> read_vertices_csv(const std::string& path);

} // namespace lab

#endif

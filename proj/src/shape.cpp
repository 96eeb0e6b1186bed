#include "lab/shape.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "koch_internal.hpp"

namespace lab {

namespace {

using koch_detail::EdgePieces;
using koch_detail::subdivide;

constexpr int kMaxKochLevel = 12;
const double kSqrt3 = std::sqrt(3.0);

// Base triangle: side 1, horizontal bottom, centroid at the origin.
const Triangle kKochBase = {koch_detail::kBaseA, koch_detail::kBaseB, koch_detail::kBaseC};

void check_koch_level(int level) {
    if (level < 0) throw std::invalid_argument("koch level must be >= 0");
    if (level > kMaxKochLevel)
        throw std::runtime_error("koch level " + std::to_string(level) +
                                 " exceeds the resource limit of " + std::to_string(kMaxKochLevel));
}

void collect_vertices(Vec2 a, Vec2 b, int depth, std::vector<Vec2>& out) {
    if (depth == 0) {
        out.push_back(a);
        return;
    }
    const EdgePieces e = subdivide(a, b);
    collect_vertices(a, e.u, depth - 1, out);
    collect_vertices(e.u, e.t, depth - 1, out);
    collect_vertices(e.t, e.w, depth - 1, out);
    collect_vertices(e.w, b, depth - 1, out);
}

void collect_pendants(Vec2 a, Vec2 b, int depth, std::vector<Triangle>& out) {
    if (depth == 0) return;
    const EdgePieces e = subdivide(a, b);
    out.push_back({e.u, e.t, e.w});
    collect_pendants(a, e.u, depth - 1, out);
    collect_pendants(e.u, e.t, depth - 1, out);
    collect_pendants(e.t, e.w, depth - 1, out);
    collect_pendants(e.w, b, depth - 1, out);
}

// Everything hanging off edge (a,b) -- the pendant and all its descendants --
// lies in the convex hull of the curve built on the edge, hence within
// distance |b-a|/2 of the edge midpoint (with rounding margin).
bool cluster_contains(Vec2 a, Vec2 b, int depth, Vec2 p) {
    if (depth == 0) return false;
    const Vec2 mid = (a + b) * 0.5;
    const double L2 = norm2(b - a);
    const double rf = koch_detail::kClusterRadiusFactor;
    if (norm2(p - mid) > rf * rf * L2) return false;
    const EdgePieces e = subdivide(a, b);
    if (in_triangle({e.u, e.t, e.w}, p)) return true;
    return cluster_contains(a, e.u, depth - 1, p) || cluster_contains(e.u, e.t, depth - 1, p) ||
           cluster_contains(e.t, e.w, depth - 1, p) || cluster_contains(e.w, b, depth - 1, p);
}

std::vector<Strip> build_strips(double beta, int truncation) {
    if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("RectangleUnionGamma: beta must be in (0,1)");
    const double g = beta / (1.0 - beta);
    int T = truncation;
    if (T < 0) throw std::invalid_argument("RectangleUnionGamma: truncation must be >= 0");
    if (T == 0) {
        // default rule: keep strips while n^{-g} >= 1e-6, capped at 1e6
        T = static_cast<int>(std::min(1e6, std::floor(std::pow(1e-6, -1.0 / g) + 1e-9)));
        T = std::max(T, 1);
    }
    std::vector<Strip> strips;
    strips.reserve(T);
    double area = 0.0, moment = 0.0;
    for (int n = 1; n <= T; ++n) {
        const double xn = std::pow(static_cast<double>(n), -g);
        const double zn = xn - std::pow(static_cast<double>(n + 1), -g);
        Strip s{xn - zn / 3.0, xn, 0.0, 1.0};
        area += zn / 3.0;
        moment += zn / 3.0 * (s.x0 + s.x1) * 0.5;
        strips.push_back(s);
    }
    const double cx = moment / area, cy = 0.5;
    for (auto& s : strips) {
        s.x0 -= cx;
        s.x1 -= cx;
        s.y0 -= cy;
        s.y1 -= cy;
    }
    // ascending x for binary search
    std::reverse(strips.begin(), strips.end());
    return strips;
}

// Strip lists keyed by (beta, truncation); built once, reused.
const std::vector<Strip>& strips_for(const RectangleUnionGamma& r) {
    static std::map<std::pair<double, int>, std::vector<Strip>> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(r.beta, r.truncation);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, build_strips(r.beta, r.truncation)).first;
    return it->second;
}

double polygon_signed_area(const std::vector<Vec2>& v) {
    double a = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec2& p = v[i];
        const Vec2& q = v[(i + 1) % v.size()];
        a += cross(p, q);
    }
    return 0.5 * a;
}

} // namespace

double triangle_area(const Triangle& t) {
    return 0.5 * std::fabs(cross(t[1] - t[0], t[2] - t[0]));
}

bool in_triangle(const Triangle& t, Vec2 p) {
    const double s1 = cross(t[1] - t[0], p - t[0]);
    const double s2 = cross(t[2] - t[1], p - t[1]);
    const double s3 = cross(t[0] - t[2], p - t[2]);
    return (s1 >= 0.0 && s2 >= 0.0 && s3 >= 0.0) || (s1 <= 0.0 && s2 <= 0.0 && s3 <= 0.0);
}

Vec2 triangle_centroid(const Triangle& t) { return (t[0] + t[1] + t[2]) / 3.0; }

std::vector<Vec2> koch_polygon(int level) {
    check_koch_level(level);
    std::vector<Vec2> out;
    out.reserve(static_cast<std::size_t>(3) << (2 * level));
    collect_vertices(kKochBase[0], kKochBase[1], level, out);
    collect_vertices(kKochBase[1], kKochBase[2], level, out);
    collect_vertices(kKochBase[2], kKochBase[0], level, out);
    return out;
}

const std::vector<Triangle>& koch_soup(int level) {
    check_koch_level(level);
    static std::map<int, std::vector<Triangle>> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(level);
    if (it == cache.end()) {
        std::vector<Triangle> soup;
        soup.reserve(static_cast<std::size_t>(1) << (2 * level));
        soup.push_back(kKochBase);
        collect_pendants(kKochBase[0], kKochBase[1], level, soup);
        collect_pendants(kKochBase[1], kKochBase[2], level, soup);
        collect_pendants(kKochBase[2], kKochBase[0], level, soup);
        it = cache.emplace(level, std::move(soup)).first;
    }
    return it->second;
}

double koch_tail_area(int level) {
    check_koch_level(level);
    return 3.0 * kSqrt3 / 20.0 * std::pow(4.0 / 9.0, level);
}

double koch_region_area(int level) {
    check_koch_level(level);
    return 2.0 * kSqrt3 / 5.0 - koch_tail_area(level);
}

bool koch_region_contains(int level, Vec2 p) {
    check_koch_level(level);
    // quick reject: the snowflake sits inside the circumscribed circle of
    // radius 1/sqrt(3)
    if (norm2(p) > (1.0 / 3.0) + 1e-9) return false;
    if (in_triangle(kKochBase, p)) return true;
    return cluster_contains(kKochBase[0], kKochBase[1], level, p) ||
           cluster_contains(kKochBase[1], kKochBase[2], level, p) ||
           cluster_contains(kKochBase[2], kKochBase[0], level, p);
}

double SnowflakeDecomposition::tail_area_series() const {
    // sum_{k >= level} 3*4^k * area of a triangle with side 3^{-k-1}
    double sum = 0.0;
    double term;
    int k = level;
    do {
        term = 3.0 * std::pow(4.0, k) * (kSqrt3 / 4.0) * std::pow(9.0, -(k + 1.0));
        sum += term;
        ++k;
    } while (term > 1e-22 * (sum + 1e-300) && k < level + 2000);
    return sum;
}

long long SnowflakeDecomposition::pendant_count(int k) const {
    return 3LL << (2 * k);
}

double SnowflakeDecomposition::pendant_side(int k) const { return std::pow(3.0, -(k + 1.0)); }

double SnowflakeDecomposition::translation_scale(int k) const {
    return kSqrt3 / 2.0 * std::pow(3.0, -k);
}

SnowflakeDecomposition snowflake_decomposition(int level) {
    check_koch_level(level);
    return SnowflakeDecomposition{level, koch_region_area(level), koch_tail_area(level)};
}

void validate(const Shape& s) {
    std::visit(
        [](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Ball>) {
                if (!(v.radius > 0.0) || !std::isfinite(v.radius))
                    throw std::invalid_argument("Ball: radius must be positive and finite");
            } else if constexpr (std::is_same_v<T, ConvexPolygon>) {
                const auto& p = v.vertices;
                if (p.size() < 3)
                    throw std::invalid_argument("ConvexPolygon: need at least 3 vertices");
                if (polygon_signed_area(p) <= 0.0)
                    throw std::invalid_argument("ConvexPolygon: vertices must be ccw");
                const std::size_t n = p.size();
                for (std::size_t i = 0; i < n; ++i) {
                    const Vec2 e1 = p[(i + 1) % n] - p[i];
                    const Vec2 e2 = p[(i + 2) % n] - p[(i + 1) % n];
                    if (cross(e1, e2) < -1e-12 * (norm(e1) * norm(e2)))
                        throw std::invalid_argument("ConvexPolygon: vertices are not convex");
                }
            } else if constexpr (std::is_same_v<T, KochRegion> ||
                                 std::is_same_v<T, KochCurvePolyline>) {
                check_koch_level(v.level);
            } else if constexpr (std::is_same_v<T, RectangleUnionGamma>) {
                strips_for(v); // builds and validates
            } else if constexpr (std::is_same_v<T, HalfSpace>) {
                if (std::fabs(norm(v.theta) - 1.0) > 1e-12)
                    throw std::invalid_argument("HalfSpace: theta must be a unit vector");
                if (!std::isfinite(v.rho)) throw std::invalid_argument("HalfSpace: rho not finite");
            }
        },
        s);
}

double volume(const Shape& s, int dim) {
    if (dim != 2 && dim != 3) throw std::invalid_argument("volume: dim must be 2 or 3");
    return std::visit(
        [dim](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Ball>) {
                return dim == 2 ? M_PI * v.radius * v.radius
                                : 4.0 / 3.0 * M_PI * v.radius * v.radius * v.radius;
            } else if constexpr (std::is_same_v<T, ConvexPolygon>) {
                return polygon_signed_area(v.vertices);
            } else if constexpr (std::is_same_v<T, KochRegion>) {
                return koch_region_area(v.level);
            } else if constexpr (std::is_same_v<T, KochCurvePolyline>) {
                return 0.0;
            } else if constexpr (std::is_same_v<T, RectangleUnionGamma>) {
                double a = 0.0;
                for (const auto& st : strips_for(v)) a += (st.x1 - st.x0) * (st.y1 - st.y0);
                return a;
            } else {
                throw std::invalid_argument("volume: half-space is unbounded");
            }
        },
        s);
}

double bounding_radius(const Shape& s) {
    return std::visit(
        [](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Ball>) {
                return v.radius;
            } else if constexpr (std::is_same_v<T, ConvexPolygon>) {
                double r2 = 0.0;
                for (const auto& p : v.vertices) r2 = std::max(r2, norm2(p));
                return std::sqrt(r2);
            } else if constexpr (std::is_same_v<T, KochRegion> ||
                                 std::is_same_v<T, KochCurvePolyline>) {
                check_koch_level(v.level);
                return 1.0 / kSqrt3; // circumradius of the snowflake
            } else if constexpr (std::is_same_v<T, RectangleUnionGamma>) {
                double r2 = 0.0;
                for (const auto& st : strips_for(v)) {
                    for (Vec2 c : {Vec2{st.x0, st.y0}, Vec2{st.x0, st.y1}, Vec2{st.x1, st.y0},
                                   Vec2{st.x1, st.y1}})
                        r2 = std::max(r2, norm2(c));
                }
                return std::sqrt(r2);
            } else {
                return std::numeric_limits<double>::infinity();
            }
        },
        s);
}

bool contains_reference(const Shape& s, Vec2 p) {
    return std::visit(
        [p](const auto& v) -> bool {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Ball>) {
                return norm2(p) <= v.radius * v.radius;
            } else if constexpr (std::is_same_v<T, ConvexPolygon>) {
                const auto& poly = v.vertices;
                const std::size_t n = poly.size();
                for (std::size_t i = 0; i < n; ++i)
                    if (cross(poly[(i + 1) % n] - poly[i], p - poly[i]) < 0.0) return false;
                return true;
            } else if constexpr (std::is_same_v<T, KochRegion>) {
                return koch_region_contains(v.level, p);
            } else if constexpr (std::is_same_v<T, KochCurvePolyline>) {
                // measure-zero set: true only on exact segment hits
                const auto poly = koch_polygon(v.level);
                const std::size_t n = poly.size();
                for (std::size_t i = 0; i < n; ++i) {
                    const Vec2 a = poly[i], b = poly[(i + 1) % n];
                    if (cross(b - a, p - a) == 0.0 && dot(p - a, b - a) >= 0.0 &&
                        dot(p - b, a - b) >= 0.0)
                        return true;
                }
                return false;
            } else if constexpr (std::is_same_v<T, RectangleUnionGamma>) {
                const auto& strips = strips_for(v);
                if (strips.empty()) return false;
                if (p.y < strips[0].y0 || p.y > strips[0].y1) return false;
                // strips ascend in x; find the first one whose right edge
                // reaches p.x
                auto it = std::lower_bound(strips.begin(), strips.end(), p.x,
                                           [](const Strip& st, double x) { return st.x1 < x; });
                return it != strips.end() && p.x >= it->x0 && p.x <= it->x1;
            } else {
                return dot(p, v.theta) >= v.rho;
            }
        },
        s);
}

bool contains(const Shape& s, const AffinePose& pose, Vec2 p) {
    if (pose.dim != 2) throw std::invalid_argument("contains: planar point needs a 2-D pose");
    return contains_reference(s, pose.pull_back(p));
}

bool contains(const Shape& s, const AffinePose& pose, Vec3 p) {
    if (pose.dim != 3) throw std::invalid_argument("contains: spatial point needs a 3-D pose");
    if (const Ball* b = std::get_if<Ball>(&s)) {
        const Vec3 q = pose.pull_back(p);
        return norm2(q) <= b->radius * b->radius;
    }
    throw std::invalid_argument("contains: only balls support 3-D poses");
}

double shape_beta(const Shape& s) {
    return std::visit(
        [](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Ball> || std::is_same_v<T, ConvexPolygon>) {
                return 1.0;
            } else if constexpr (std::is_same_v<T, KochRegion>) {
                return 2.0 - std::log(4.0) / std::log(3.0);
            } else if constexpr (std::is_same_v<T, RectangleUnionGamma>) {
                return v.beta;
            } else {
                throw std::invalid_argument("shape_beta: no translation exponent for this shape");
            }
        },
        s);
}

std::vector<Vec2> shape_vertices(const Shape& s) {
    return std::visit(
        [](const auto& v) -> std::vector<Vec2> {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ConvexPolygon>) {
                return v.vertices;
            } else if constexpr (std::is_same_v<T, KochRegion> ||
                                 std::is_same_v<T, KochCurvePolyline>) {
                return koch_polygon(v.level);
            } else if constexpr (std::is_same_v<T, RectangleUnionGamma>) {
                std::vector<Vec2> out;
                for (const auto& st : strips_for(v)) {
                    out.push_back({st.x0, st.y0});
                    out.push_back({st.x1, st.y0});
                    out.push_back({st.x1, st.y1});
                    out.push_back({st.x0, st.y1});
                }
                return out;
            } else {
                throw std::invalid_argument("shape_vertices: shape has no vertex list");
            }
        },
        s);
}

std::vector<Strip> rectangle_union_strips(const RectangleUnionGamma& r) { return strips_for(r); }

// ---------------------------------------------------------------------------
// serialization

nlohmann::json shape_to_json(const Shape& s) {
    nlohmann::json j;
    std::visit(
        [&j](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Ball>) {
                j = {{"variant", "ball"}, {"radius", v.radius}};
            } else if constexpr (std::is_same_v<T, ConvexPolygon>) {
                nlohmann::json verts = nlohmann::json::array();
                for (const auto& p : v.vertices) verts.push_back({p.x, p.y});
                j = {{"variant", "convex_polygon"}, {"vertices", verts}};
            } else if constexpr (std::is_same_v<T, KochRegion>) {
                j = {{"variant", "koch_region"}, {"level", v.level}};
            } else if constexpr (std::is_same_v<T, KochCurvePolyline>) {
                j = {{"variant", "koch_curve"}, {"level", v.level}};
            } else if constexpr (std::is_same_v<T, RectangleUnionGamma>) {
                j = {{"variant", "rectangle_union_gamma"},
                     {"beta", v.beta},
                     {"truncation", v.truncation}};
            } else {
                j = {{"variant", "half_space"}, {"theta", {v.theta.x, v.theta.y}}, {"rho", v.rho}};
            }
        },
        s);
    return j;
}

Shape shape_from_json(const nlohmann::json& j) {
    const std::string variant = j.at("variant").get<std::string>();
    Shape s;
    if (variant == "ball") {
        s = Ball{j.at("radius").get<double>()};
    } else if (variant == "convex_polygon") {
        ConvexPolygon p;
        for (const auto& v : j.at("vertices"))
            p.vertices.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
        s = p;
    } else if (variant == "koch_region") {
        s = KochRegion{j.at("level").get<int>()};
    } else if (variant == "koch_curve") {
        s = KochCurvePolyline{j.at("level").get<int>()};
    } else if (variant == "rectangle_union_gamma") {
        s = RectangleUnionGamma{j.at("beta").get<double>(), j.value("truncation", 0)};
    } else if (variant == "half_space") {
        const auto& t = j.at("theta");
        s = HalfSpace{{t.at(0).get<double>(), t.at(1).get<double>()},
                      j.at("rho").get<double>()};
    } else {
        throw std::invalid_argument("shape_from_json: unknown variant '" + variant + "'");
    }
    validate(s);
    return s;
}

void write_vertices_csv(const std::string& path, const std::vector<Vec2>& vertices) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << "x,y\r\n";
    char buf[64];
    for (const auto& p : vertices) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\r\n", p.x, p.y);
        f << buf;
    }
}

std::vector<Vec2> read_vertices_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::vector<Vec2> out;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) { // header
            first = false;
            continue;
        }
        std::istringstream ss(line);
        std::string sx, sy;
        if (!std::getline(ss, sx, ',') || !std::getline(ss, sy, ','))
            throw std::runtime_error("bad vertex row in " + path + ": " + line);
        out.push_back({std::stod(sx), std::stod(sy)});
    }
    return out;
}

} // namespace lab

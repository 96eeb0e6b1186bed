#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "lab/rng.hpp"
#include "lab/shape.hpp"

using namespace lab;

namespace {

const double kSqrt3 = std::sqrt(3.0);

double shoelace(const std::vector<Vec2>& v) {
    double a = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) a += cross(v[i], v[(i + 1) % v.size()]);
    return 0.5 * a;
}

// Brute-force membership: a point is in the region iff some soup triangle
// holds it.  Independent of the pruned recursion under test.
bool soup_contains(int level, Vec2 p) {
    for (const auto& t : koch_soup(level))
        if (in_triangle(t, p)) return true;
    return false;
}

ConvexPolygon unit_square_ccw() {
    return ConvexPolygon{{{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}}};
}

} // namespace

TEST_SUITE("geometry") {

TEST_CASE("triangle basics") {
    const Triangle t = {Vec2{0, 0}, Vec2{1, 0}, Vec2{0, 1}};
    CHECK(triangle_area(t) == doctest::Approx(0.5).epsilon(1e-15));
    const Triangle t_cw = {t[0], t[2], t[1]};
    CHECK(triangle_area(t_cw) == doctest::Approx(0.5).epsilon(1e-15));

    // ties inside, both orientations
    for (const auto& tri : {t, t_cw}) {
        CHECK(in_triangle(tri, {0.25, 0.25}));
        CHECK(in_triangle(tri, {0.0, 0.0}));   // vertex
        CHECK(in_triangle(tri, {0.5, 0.0}));   // edge midpoint
        CHECK(in_triangle(tri, {0.5, 0.5}));   // hypotenuse
        CHECK(!in_triangle(tri, {0.6, 0.6}));
        CHECK(!in_triangle(tri, {-1e-9, 0.5}));
    }
    const Vec2 c = triangle_centroid(t);
    CHECK(c.x == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(c.y == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("koch boundary polygon: counts, edge lengths, orientation") {
    for (int n = 0; n <= 6; ++n) {
        const auto poly = koch_polygon(n);
        const std::size_t expect = static_cast<std::size_t>(3) << (2 * n);
        REQUIRE(poly.size() == expect); // 3*4^n segments
        const double side = std::pow(3.0, -n);
        for (std::size_t i = 0; i < poly.size(); ++i) {
            const double len = norm(poly[(i + 1) % poly.size()] - poly[i]);
            REQUIRE(len == doctest::Approx(side).epsilon(1e-12));
        }
        CHECK(shoelace(poly) > 0.0); // ccw
    }
}

TEST_CASE("koch region area: closed form vs shoelace vs soup") {
    for (int n = 0; n <= 6; ++n) {
        const double closed = koch_region_area(n);
        // route 1: shoelace over the boundary polygon
        CHECK(shoelace(koch_polygon(n)) == doctest::Approx(closed).epsilon(1e-12));
        // route 2: sum of soup triangle areas (disjoint interiors)
        double soup_area = 0.0;
        for (const auto& t : koch_soup(n)) soup_area += triangle_area(t);
        CHECK(soup_area == doctest::Approx(closed).epsilon(1e-12));
        // soup size: base + all pendants = 4^n
        CHECK(koch_soup(n).size() == static_cast<std::size_t>(1) << (2 * n));
    }
    // one-step growth: 3*4^n pendants, each of area (sqrt3/4) 9^{-n-1}
    for (int n = 0; n <= 5; ++n) {
        const double growth = koch_region_area(n + 1) - koch_region_area(n);
        const double expect = 3.0 * std::pow(4.0, n) * (kSqrt3 / 4.0) * std::pow(9.0, -(n + 1.0));
        CHECK(growth == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("snowflake tail area: series vs closed form") {
    for (int n = 0; n <= 6; ++n) {
        const auto dec = snowflake_decomposition(n);
        CHECK(dec.tail_area == doctest::Approx(3.0 * kSqrt3 / 20.0 * std::pow(4.0 / 9.0, n))
                                   .epsilon(1e-15));
        CHECK(dec.tail_area_series() == doctest::Approx(dec.tail_area).epsilon(1e-12));
        // region + tail = full snowflake
        CHECK(dec.region_area + dec.tail_area ==
              doctest::Approx(2.0 * kSqrt3 / 5.0).epsilon(1e-15));
    }
    const auto dec = snowflake_decomposition(4);
    CHECK(dec.pendant_count(0) == 3);
    CHECK(dec.pendant_count(3) == 192);
    CHECK(dec.pendant_side(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(dec.pendant_side(2) == doctest::Approx(1.0 / 27.0).epsilon(1e-15));
    CHECK(dec.translation_scale(0) == doctest::Approx(kSqrt3 / 2.0).epsilon(1e-15));
    CHECK(dec.translation_scale(3) == doctest::Approx(kSqrt3 / 2.0 / 27.0).epsilon(1e-15));
}

TEST_CASE("koch region is centered at its centroid") {
    // area-weighted centroid of the disjoint soup triangles
    double a = 0.0;
    Vec2 m{0.0, 0.0};
    for (const auto& t : koch_soup(6)) {
        const double ta = triangle_area(t);
        a += ta;
        m += triangle_centroid(t) * ta;
    }
    CHECK(std::fabs(m.x / a) < 1e-12);
    CHECK(std::fabs(m.y / a) < 1e-12);
}

TEST_CASE("koch membership: pruned recursion agrees with soup scan") {
    auto g = make_rng(2026, "koch-membership");
    for (int level : {0, 1, 3, 4}) {
        int inside = 0;
        for (int i = 0; i < 1500; ++i) {
            const Vec2 p{uniform(g, -0.62, 0.62), uniform(g, -0.62, 0.62)};
            const bool fast = koch_region_contains(level, p);
            const bool slow = soup_contains(level, p);
            REQUIRE(fast == slow);
            inside += fast;
        }
        CHECK(inside > 0);
        CHECK(inside < 1500);
    }
    // known points
    CHECK(koch_region_contains(8, {0.0, 0.0}));
    CHECK(koch_region_contains(8, {0.0, 0.577}));    // near the top tip
    CHECK(koch_region_contains(8, {0.0, -0.577}));   // bottom pendant points down this far
    CHECK(!koch_region_contains(8, {0.5, 0.5}));     // outside the hull
    CHECK(!koch_region_contains(8, {0.29, -0.45}));  // inside circumcircle, in a notch
}

TEST_CASE("koch membership monotone in level") {
    // refining only adds material: K_n is contained in K_{n+1}
    auto g = make_rng(2026, "koch-monotone");
    for (int i = 0; i < 2000; ++i) {
        const Vec2 p{uniform(g, -0.62, 0.62), uniform(g, -0.62, 0.62)};
        bool prev = koch_region_contains(0, p);
        for (int n = 1; n <= 6; ++n) {
            const bool cur = koch_region_contains(n, p);
            REQUIRE((!prev || cur)); // prev implies cur
            prev = cur;
        }
    }
}

TEST_CASE("volume and bounding radius") {
    CHECK(volume(Ball{2.0}) == doctest::Approx(4.0 * M_PI).epsilon(1e-15));
    CHECK(volume(Ball{2.0}, 3) == doctest::Approx(32.0 * M_PI / 3.0).epsilon(1e-15));
    CHECK(volume(unit_square_ccw()) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(volume(KochRegion{5}) == doctest::Approx(koch_region_area(5)).epsilon(1e-15));
    CHECK(volume(KochCurvePolyline{5}) == 0.0);
    CHECK_THROWS_AS((void)volume(HalfSpace{{1.0, 0.0}, 0.3}), std::invalid_argument);

    CHECK(bounding_radius(Ball{1.5}) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(bounding_radius(unit_square_ccw()) ==
          doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
    CHECK(bounding_radius(KochRegion{8}) == doctest::Approx(1.0 / kSqrt3).epsilon(1e-15));
    CHECK(std::isinf(bounding_radius(HalfSpace{{0.0, 1.0}, 0.0})));

    // the polygon at any level stays inside the circumscribed circle
    for (const auto& p : koch_polygon(5)) CHECK(norm(p) <= 1.0 / kSqrt3 + 1e-12);
}

TEST_CASE("rectangle union strips") {
    const RectangleUnionGamma r{0.5, 400}; // gamma = 1
    const auto strips = rectangle_union_strips(r);
    REQUIRE(strips.size() == 400);
    const double g = r.beta / (1.0 - r.beta);

    // ascending, pairwise disjoint with the expected gaps
    for (std::size_t i = 0; i + 1 < strips.size(); ++i) {
        CHECK(strips[i].x1 < strips[i + 1].x0);
    }
    // widths: z_n/3 with z_n = n^{-g} - (n+1)^{-g}; strips are reversed
    for (std::size_t i = 0; i < strips.size(); ++i) {
        const int n = static_cast<int>(strips.size() - i);
        const double zn = std::pow(n, -g) - std::pow(n + 1.0, -g);
        CHECK(strips[i].x1 - strips[i].x0 == doctest::Approx(zn / 3.0).epsilon(1e-12));
        CHECK(strips[i].y1 - strips[i].y0 == doctest::Approx(1.0).epsilon(1e-15));
    }

    // stored volume: telescoping sum (1 - (T+1)^{-g})/3
    const double vol = volume(Shape{r});
    CHECK(vol == doctest::Approx((1.0 - std::pow(401.0, -g)) / 3.0).epsilon(1e-12));

    // centered at the centroid
    double a = 0.0, mx = 0.0, my = 0.0;
    for (const auto& s : strips) {
        const double sa = (s.x1 - s.x0) * (s.y1 - s.y0);
        a += sa;
        mx += sa * 0.5 * (s.x0 + s.x1);
        my += sa * 0.5 * (s.y0 + s.y1);
    }
    CHECK(std::fabs(mx / a) < 1e-12);
    CHECK(std::fabs(my / a) < 1e-12);

    // membership: binary search agrees with a linear scan
    auto gen = make_rng(2026, "strip-membership");
    const Shape sh{r};
    int inside = 0;
    for (int i = 0; i < 4000; ++i) {
        const Vec2 p{uniform(gen, -1.0, 1.0), uniform(gen, -0.7, 0.7)};
        bool scan = false;
        for (const auto& s : strips)
            if (p.x >= s.x0 && p.x <= s.x1 && p.y >= s.y0 && p.y <= s.y1) {
                scan = true;
                break;
            }
        REQUIRE(contains_reference(sh, p) == scan);
        inside += scan;
    }
    CHECK(inside > 0);

    CHECK(shape_beta(sh) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("half-space membership convention") {
    const Shape h{HalfSpace{{0.0, 1.0}, 0.25}};
    CHECK(contains_reference(h, {3.0, 0.3}));
    CHECK(contains_reference(h, {-7.0, 0.25})); // boundary counts as inside
    CHECK(!contains_reference(h, {0.0, 0.2499999}));
}

TEST_CASE("contains is rigid-motion invariant in the plane") {
    auto g = make_rng(2026, "pose-invariance-2d");
    const std::vector<Shape> shapes = {Ball{0.8}, Shape{unit_square_ccw()}, KochRegion{4},
                                       Shape{RectangleUnionGamma{0.5, 200}}};
    for (const auto& s : shapes) {
        for (int i = 0; i < 250; ++i) {
            const auto pose = AffinePose::plane({uniform(g, -2.0, 2.0), uniform(g, -2.0, 2.0)},
                                                uniform(g, 0.5, 2.0), uniform(g, 0.0, 2.0 * M_PI));
            const Vec2 p{uniform(g, -1.0, 1.0), uniform(g, -1.0, 1.0)};
            REQUIRE(contains(s, pose, pose.apply(p)) == contains_reference(s, p));
        }
    }
}

TEST_CASE("contains is rigid-motion invariant in space") {
    auto g = make_rng(2026, "pose-invariance-3d");
    const Shape ball{Ball{1.0}};
    for (int i = 0; i < 1000; ++i) {
        const auto pose = AffinePose::space(
            {uniform(g, -2.0, 2.0), uniform(g, -2.0, 2.0), uniform(g, -2.0, 2.0)},
            uniform(g, 0.5, 2.0), random_quat(g));
        const Vec3 p{uniform(g, -1.2, 1.2), uniform(g, -1.2, 1.2), uniform(g, -1.2, 1.2)};
        const bool expect = norm(p) <= 1.0;
        REQUIRE(contains(ball, pose, pose.apply(p)) == expect);
    }
}

TEST_CASE("validation rejects malformed shapes") {
    CHECK_THROWS_AS(validate(Shape{Ball{0.0}}), std::invalid_argument);
    CHECK_THROWS_AS(validate(Shape{Ball{-1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(validate(Shape{KochRegion{-1}}), std::invalid_argument);
    CHECK_THROWS(validate(Shape{KochRegion{13}})); // resource limit
    CHECK_THROWS_AS(validate(Shape{KochCurvePolyline{-2}}), std::invalid_argument);

    // cw square
    CHECK_THROWS_AS(
        validate(Shape{ConvexPolygon{{{-0.5, -0.5}, {-0.5, 0.5}, {0.5, 0.5}, {0.5, -0.5}}}}),
        std::invalid_argument);
    // non-convex quad
    CHECK_THROWS_AS(
        validate(Shape{ConvexPolygon{{{0, 0}, {1, 0}, {0.1, 0.1}, {0, 1}}}}),
        std::invalid_argument);
    CHECK_THROWS_AS(validate(Shape{ConvexPolygon{{{0, 0}, {1, 0}}}}), std::invalid_argument);

    CHECK_THROWS_AS(validate(Shape{RectangleUnionGamma{0.0, 10}}), std::invalid_argument);
    CHECK_THROWS_AS(validate(Shape{RectangleUnionGamma{1.0, 10}}), std::invalid_argument);
    CHECK_THROWS_AS(validate(Shape{HalfSpace{{1.0, 1.0}, 0.0}}), std::invalid_argument);

    CHECK_NOTHROW(validate(Shape{Ball{1.0}}));
    CHECK_NOTHROW(validate(Shape{unit_square_ccw()}));
    CHECK_NOTHROW(validate(Shape{KochRegion{8}}));
    CHECK_NOTHROW(validate(Shape{RectangleUnionGamma{0.7, 100}}));
    CHECK_NOTHROW(validate(Shape{HalfSpace{{0.0, -1.0}, 2.0}}));

    // pose/point dimension mismatches
    const auto pose2 = AffinePose::plane({0, 0}, 1.0, 0.0);
    CHECK_THROWS_AS((void)contains(Shape{Ball{1.0}}, pose2, Vec3{0, 0, 0}),
                    std::invalid_argument);
    const auto pose3 = AffinePose::space({0, 0, 0}, 1.0, Quat{1, 0, 0, 0});
    CHECK_THROWS_AS((void)contains(Shape{Ball{1.0}}, pose3, Vec2{0, 0}),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)contains(Shape{KochRegion{3}}, pose3, Vec3{0, 0, 0}),
                    std::invalid_argument);
}

TEST_CASE("shape json round trip") {
    const std::vector<Shape> shapes = {
        Ball{1.25},
        Shape{unit_square_ccw()},
        KochRegion{7},
        KochCurvePolyline{5},
        Shape{RectangleUnionGamma{0.6, 300}},
        Shape{HalfSpace{{0.6, 0.8}, -0.125}},
    };
    for (const auto& s : shapes) {
        const auto j = shape_to_json(s);
        const Shape back = shape_from_json(j);
        REQUIRE(back.index() == s.index());
        CHECK(shape_to_json(back) == j);
    }
    CHECK_THROWS(shape_from_json(nlohmann::json{{"variant", "dodecahedron"}}));
}

TEST_CASE("vertex csv round trip") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "lab_shape_csv_test";
    fs::create_directories(dir);
    const std::string path = (dir / "verts.csv").string();

    const auto poly = koch_polygon(3);
    write_vertices_csv(path, poly);
    const auto back = read_vertices_csv(path);
    REQUIRE(back.size() == poly.size());
    for (std::size_t i = 0; i < poly.size(); ++i) {
        REQUIRE(back[i].x == poly[i].x); // 17 significant digits round-trip exactly
        REQUIRE(back[i].y == poly[i].y);
    }

    // CRLF line endings
    std::FILE* f = std::fopen(path.c_str(), "rb");
    REQUIRE(f != nullptr);
    char buf[4];
    REQUIRE(std::fread(buf, 1, 4, f) == 4);
    CHECK(buf[0] == 'x');
    CHECK(buf[1] == ',');
    CHECK(buf[2] == 'y');
    CHECK(buf[3] == '\r');
    std::fclose(f);
    fs::remove_all(dir);
}

TEST_CASE("shape vertices accessor") {
    CHECK(shape_vertices(Shape{unit_square_ccw()}).size() == 4);
    CHECK(shape_vertices(Shape{KochRegion{2}}).size() == 48);
    CHECK(shape_vertices(Shape{KochCurvePolyline{2}}).size() == 48);
    CHECK(shape_vertices(Shape{RectangleUnionGamma{0.5, 10}}).size() == 40);
    CHECK_THROWS_AS((void)shape_vertices(Shape{Ball{1.0}}), std::invalid_argument);
    CHECK_THROWS_AS((void)shape_vertices(Shape{HalfSpace{{1.0, 0.0}, 0.0}}),
                    std::invalid_argument);
}

} // TEST_SUITE

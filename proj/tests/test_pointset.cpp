// Point generators: equal-measure partitions (cell exactness, diameters,
// representatives), iid baselines, equispaced circle, CSV round trips.

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include "lab/measure.hpp"
#include "lab/pointset_ops.hpp"
#include "lab/rng.hpp"
#include "lab/shape.hpp"

using namespace lab;

namespace {

const double kS3 = std::sqrt(3.0);

Shape unit_square_shape() {
    return ConvexPolygon{{{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}}};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(bool(in));
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

void check_partition_invariants(const MeasureSpec& mu, long long n) {
    const EqualMeasurePartition part = build_partition(mu, n);
    REQUIRE(static_cast<long long>(part.cells.size()) == n);
    double total = 0.0;
    for (const PartitionCell& cell : part.cells) {
        total += cell.measure;
        CHECK(std::abs(cell.measure - 1.0 / static_cast<double>(n)) <= 1e-9);
        if (part.dim == 3) {
            CHECK(cell_contains(mu, cell, cell.rep3));
            CHECK(norm(cell.rep3) <= mu.support_radius + 1e-12);
        } else {
            CHECK(cell_contains(mu, cell, cell.rep2));
            CHECK(norm(cell.rep2) <= mu.support_radius + 1e-12);
        }
        CHECK(cell.diameter <= part.max_diameter + 1e-15);
    }
    CHECK(std::abs(total - 1.0) <= 1e-9);
    CHECK(part.diameter_constant ==
          doctest::Approx(part.max_diameter *
                          std::pow(static_cast<double>(n), 1.0 / part.alpha_geom)));
}

} // namespace

TEST_SUITE_BEGIN("pointset");

TEST_CASE("equispaced circle: right angles at n = 4, unit circumference") {
    const PointSet ps = equispaced_circle(4);
    REQUIRE(ps.size() == 4);
    CHECK(ps.generator == "equispaced-circle");
    const double R = 1.0 / (2.0 * M_PI);
    CHECK(ps.pts2[0].x == doctest::Approx(R).epsilon(1e-15));
    CHECK(ps.pts2[0].y == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
    CHECK(ps.pts2[1].x == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
    CHECK(ps.pts2[1].y == doctest::Approx(R).epsilon(1e-15));
    CHECK(ps.pts2[2].x == doctest::Approx(-R).epsilon(1e-15));
    CHECK(ps.pts2[3].y == doctest::Approx(-R).epsilon(1e-15));
    CHECK(equispaced_circle(1).size() == 1);
    CHECK_THROWS_AS(equispaced_circle(0), std::invalid_argument);
}

TEST_CASE("square partition: perfect squares give exact grid centers") {
    const MeasureSpec mu = lebesgue_on(unit_square_shape());
    const PointSet ps = partition_points(mu, 9, 0);
    REQUIRE(ps.size() == 9);
    CHECK(ps.generator == "partition");
    std::vector<Vec2> got = ps.pts2;
    std::sort(got.begin(), got.end(), [](Vec2 a, Vec2 b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    std::size_t idx = 0;
    for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j) {
            CHECK(got[idx].x == doctest::Approx(i / 3.0).scale(1.0).epsilon(1e-14));
            CHECK(got[idx].y == doctest::Approx(j / 3.0).scale(1.0).epsilon(1e-14));
            ++idx;
        }
}

TEST_CASE("square partition: ragged counts still give exact cell areas") {
    const MeasureSpec mu = lebesgue_on(unit_square_shape());
    for (long long n : {2, 3, 10, 137}) check_partition_invariants(mu, n);
    // independent area check: every cell is a box; its area must be 1/n
    const EqualMeasurePartition part = build_partition(mu, 10);
    for (const PartitionCell& cell : part.cells) {
        const auto& box = std::get<CellBox>(cell.geom);
        CHECK((box.hi.x - box.lo.x) * (box.hi.y - box.lo.y) ==
              doctest::Approx(0.1).epsilon(1e-13));
    }
    // diameter constant is O(1) and stable over a dyadic sweep
    double cmin = 1e300, cmax = 0.0;
    for (long long n : {64, 256, 1024}) {
        const double c = build_partition(mu, n).diameter_constant;
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
    }
    CHECK(cmax <= 2.5);
    CHECK(cmax / cmin <= 1.8);
}

TEST_CASE("disk partition: ring sectors carry area pi R^2 / n by construction") {
    const double R = 1.7;
    const MeasureSpec mu = lebesgue_on(Shape{Ball{R}});
    for (long long n : {1, 2, 7, 64, 137}) check_partition_invariants(mu, n);
    // independent check: recompute each sector's area from its polar bounds
    const EqualMeasurePartition part = build_partition(mu, 64);
    for (const PartitionCell& cell : part.cells) {
        const auto& pol = std::get<CellPolar>(cell.geom);
        const double area =
            0.5 * (pol.r1 * pol.r1 - pol.r0 * pol.r0) * (pol.a1 - pol.a0);
        CHECK(area / (M_PI * R * R) == doctest::Approx(1.0 / 64.0).epsilon(1e-12));
    }
    double cmax = 0.0;
    for (long long n : {64, 256, 1024})
        cmax = std::max(cmax, build_partition(mu, n).diameter_constant / R);
    CHECK(cmax <= 4.5);
}

TEST_CASE("koch region partition: bisection cells stay exact and lose no area") {
    const MeasureSpec mu = lebesgue_on(Shape{KochRegion{4}});
    for (long long n : {5, 64}) check_partition_invariants(mu, n);
    // no area lost to clipping: the pieces reassemble the whole region
    const EqualMeasurePartition part = build_partition(mu, 64);
    double reassembled = 0.0;
    for (const PartitionCell& cell : part.cells) {
        const auto& piece = std::get<CellRegionPiece>(cell.geom);
        for (const auto& poly : piece.polys) {
            double a = 0.0;
            for (std::size_t i = 0; i < poly.size(); ++i)
                a += cross(poly[i], poly[(i + 1) % poly.size()]);
            reassembled += 0.5 * a;
        }
    }
    CHECK(reassembled == doctest::Approx(koch_region_area(4)).epsilon(1e-10));
    // diameter constant stays O(1) across a dyadic sweep
    double cmin = 1e300, cmax = 0.0;
    for (long long n : {16, 64, 256}) {
        const double c = build_partition(mu, n).diameter_constant;
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
    }
    CHECK(cmax <= 6.0);
    CHECK(cmax / cmin <= 2.2);
    // the deep refinement keeps the same constant even when cells are far
    // smaller than the largest boundary pendants
    const MeasureSpec mu8 = lebesgue_on(Shape{KochRegion{8}});
    cmin = 1e300, cmax = 0.0;
    for (long long n : {64, 1024, 16384}) {
        const double c = build_partition(mu8, n).diameter_constant;
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
    }
    CHECK(cmax <= 6.0);
    CHECK(cmax / cmin <= 2.0);
}

TEST_CASE("koch curve partition: one cell per segment lands on midpoints") {
    const int level = 4;
    const long long n = 3LL * (1LL << (2 * level)); // 3 * 4^level segments
    const MeasureSpec mu = koch_curve_measure(level);
    const PointSet ps = partition_points(mu, n, 0);
    const std::vector<Vec2> verts = koch_polygon(level);
    REQUIRE(ps.size() == n);
    for (long long j = 0; j < n; ++j) {
        const Vec2 mid = 0.5 * (verts[static_cast<std::size_t>(j)] +
                                verts[static_cast<std::size_t>((j + 1) % n)]);
        CHECK(norm(ps.pts2[static_cast<std::size_t>(j)] - mid) < 1e-13);
    }
    check_partition_invariants(mu, 48);
    check_partition_invariants(mu, 137);
    // blocks of 4^k segments are level-(level-k) subtrees: diameter constant
    // in the fractal normalization stays bounded across the dyadic sweep
    double cmin = 1e300, cmax = 0.0;
    const MeasureSpec mu6 = koch_curve_measure(6);
    for (long long m : {16, 64, 256}) {
        const double c = build_partition(mu6, m).diameter_constant;
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
    }
    CHECK(cmax <= 4.0);
    CHECK(cmax / cmin <= 2.5);
}

TEST_CASE("circle partition reproduces the equispaced configuration") {
    const double R = 1.0 / (2.0 * M_PI);
    const MeasureSpec mu = circle_arc_measure(R);
    const PointSet ps = partition_points(mu, 100, 0);
    const PointSet eq = equispaced_circle(100);
    REQUIRE(ps.size() == 100);
    for (std::size_t j = 0; j < 100; ++j)
        CHECK(norm(ps.pts2[j] - eq.pts2[j]) < 1e-15);
    check_partition_invariants(mu, 100);
    check_partition_invariants(circle_arc_measure(2.0), 17);
}

TEST_CASE("sphere partition: caps plus staggered collar lunes") {
    const double R = 1.3;
    const MeasureSpec mu = sphere_surface_measure(R);
    for (long long n : {1, 2, 3, 12, 300}) check_partition_invariants(mu, n);
    const EqualMeasurePartition part = build_partition(mu, 300);
    CHECK(part.dim == 3);
    // cap cells sit at the poles
    CHECK(norm(part.cells.front().rep3 - Vec3{0.0, 0.0, R}) < 1e-12);
    CHECK(norm(part.cells.back().rep3 - Vec3{0.0, 0.0, -R}) < 1e-12);
    // independent measure check from the zone bounds (z-uniform area)
    for (const PartitionCell& cell : part.cells) {
        const auto& z = std::get<CellZone>(cell.geom);
        const double frac = 0.5 * (z.z1 - z.z0) * (z.p1 - z.p0) / (2.0 * M_PI);
        CHECK(frac == doctest::Approx(1.0 / 300.0).epsilon(1e-12));
    }
    double cmin = 1e300, cmax = 0.0;
    for (long long n : {100, 400, 1600}) {
        const double c = build_partition(mu, n).diameter_constant / R;
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
    }
    CHECK(cmax <= 8.0);
    CHECK(cmax / cmin <= 2.0);
}

TEST_CASE("partitions reject unsupported measures by name") {
    CHECK_THROWS_WITH_AS(
        build_partition(lebesgue_on(Shape{RectangleUnionGamma{0.5, 400}}), 8),
        doctest::Contains("supported"), std::invalid_argument);
    const Shape tri = ConvexPolygon{{{0.0, 0.0}, {1.0, 0.0}, {0.5, 0.8}}};
    CHECK_THROWS_AS(build_partition(lebesgue_on(tri), 8), std::invalid_argument);
    PushforwardMap pm;
    CHECK_THROWS_AS(
        build_partition(pushforward_measure(koch_curve_measure(3), pm), 8),
        std::invalid_argument);
    CHECK_THROWS_AS(build_partition(lebesgue_on(unit_square_shape()), 0),
                    std::invalid_argument);
}

TEST_CASE("jittered representatives stay inside their own cells") {
    std::vector<MeasureSpec> mus;
    mus.push_back(lebesgue_on(unit_square_shape()));
    mus.push_back(lebesgue_on(Shape{Ball{1.0}}));
    mus.push_back(lebesgue_on(Shape{KochRegion{3}}));
    mus.push_back(koch_curve_measure(4));
    mus.push_back(circle_arc_measure(1.0));
    mus.push_back(sphere_surface_measure(1.0));
    for (const MeasureSpec& mu : mus) {
        const long long n = 40;
        const EqualMeasurePartition part = build_partition(mu, n);
        const PointSet a = partition_points(mu, n, 5, true);
        const PointSet b = partition_points(mu, n, 6, true);
        const PointSet c = partition_points(mu, n, 5, true);
        bool all_in = true, differs = false, reproduces = true;
        for (long long i = 0; i < n; ++i) {
            const auto& cell = part.cells[static_cast<std::size_t>(i)];
            if (part.dim == 3) {
                all_in = all_in && cell_contains(mu, cell, a.pts3[i], 1e-9);
                differs = differs || norm(a.pts3[i] - b.pts3[i]) > 1e-12;
                reproduces = reproduces && norm(a.pts3[i] - c.pts3[i]) == 0.0;
            } else {
                all_in = all_in && cell_contains(mu, cell, a.pts2[i], 1e-9);
                differs = differs || norm(a.pts2[i] - b.pts2[i]) > 1e-12;
                reproduces = reproduces && norm(a.pts2[i] - c.pts2[i]) == 0.0;
            }
        }
        CHECK(all_in);
        CHECK(differs);
        CHECK(reproduces);
    }
}

TEST_CASE("iid points deliver the binomial count variance") {
    const MeasureSpec mu = lebesgue_on(unit_square_shape());
    const PointSet tagged = iid_points(mu, 50, 3);
    CHECK(tagged.generator == "iid");
    CHECK(tagged.seed == 3);
    const PointSet raw = sample(mu, 50, 3);
    for (std::size_t i = 0; i < 50; ++i)
        CHECK(norm(tagged.pts2[i] - raw.pts2[i]) == 0.0);
    CHECK_THROWS_AS(iid_points(mu, 0, 1), std::invalid_argument);

    // ball inside the square; counts are Binomial(N, p), so the squared
    // discrepancy averages N p (1 - p)
    const Shape ball = Ball{0.2};
    const AffinePose pose = AffinePose::plane({0.1, 0.05}, 1.0, 0.0);
    const double p = evaluate(mu, ball, pose).value;
    const long long N = 200;
    const int reps = 200;
    double mean = 0.0, sq = 0.0;
    for (int r = 0; r < reps; ++r) {
        const PointSet ps = iid_points(mu, N, 1000 + static_cast<std::uint64_t>(r));
        long long cnt = 0;
        for (const Vec2& q : ps.pts2) cnt += contains(ball, pose, q) ? 1 : 0;
        const double d = static_cast<double>(cnt) - static_cast<double>(N) * p;
        mean += d * d;
        sq += d * d * d * d;
    }
    mean /= reps;
    sq /= reps;
    const double se = std::sqrt(std::max(0.0, sq - mean * mean) /
                                static_cast<double>(reps));
    CHECK(std::abs(mean - static_cast<double>(N) * p * (1.0 - p)) <= 3.0 * se);
}

TEST_CASE("equispaced circle: counts never drift more than one from the mean") {
    // each posed ball or half-plane meets the circle in a single arc, and an
    // arc of measure m holds between floor(n m) and ceil(n m) of n equispaced
    // points, so |count - n m| <= 1 always
    const double R = 1.0 / (2.0 * M_PI);
    const MeasureSpec mu = circle_arc_measure(R);
    const PointSet ps = equispaced_circle(50);
    auto g = make_rng(2026, "pointset-arc-bound");
    double worst = 0.0;
    for (int rep = 0; rep < 300; ++rep) {
        const Vec2 x{uniform(g, -0.3, 0.3), uniform(g, -0.3, 0.3)};
        const double r = uniform(g, 0.02, 0.5);
        const Shape ball = Ball{r};
        const AffinePose pose = AffinePose::plane(x, 1.0, 0.0);
        long long cnt = 0;
        for (const Vec2& q : ps.pts2) cnt += contains(ball, pose, q) ? 1 : 0;
        const double m = evaluate(mu, ball, pose).value;
        worst = std::max(worst, std::abs(static_cast<double>(cnt) - 50.0 * m));
    }
    for (int rep = 0; rep < 300; ++rep) {
        const double ang = uniform(g, 0.0, 2.0 * M_PI);
        const Vec2 th{std::cos(ang), std::sin(ang)};
        const double rho = uniform(g, -1.2 * R, 1.2 * R);
        long long cnt = 0;
        for (const Vec2& q : ps.pts2) cnt += dot(q, th) >= rho ? 1 : 0;
        const double m = evaluate_halfspace(mu, th, rho).value;
        worst = std::max(worst, std::abs(static_cast<double>(cnt) - 50.0 * m));
    }
    CHECK(worst <= 1.0 + 1e-9);
}

TEST_CASE("csv round trips are bit-exact with a json sidecar") {
    const MeasureSpec mu = lebesgue_on(unit_square_shape());
    PointSet ps = partition_points(mu, 37, 11, true);
    const std::string path = "/tmp/lab_pointset_test.csv";
    nlohmann::json extra;
    extra["measure"] = "unit-square";
    write_pointset_csv(ps, path, extra);
    const PointSet back = read_pointset_csv(path);
    REQUIRE(back.size() == ps.size());
    CHECK(back.dim == 2);
    CHECK(back.generator == "partition");
    CHECK(back.seed == 11);
    for (std::size_t i = 0; i < ps.pts2.size(); ++i) {
        CHECK(back.pts2[i].x == ps.pts2[i].x);
        CHECK(back.pts2[i].y == ps.pts2[i].y);
    }
    // identical rewrite produces identical bytes
    const std::string first = slurp(path);
    write_pointset_csv(ps, path, extra);
    CHECK(first == slurp(path));
    const std::string meta = slurp(path + ".json");
    CHECK(meta.find("unit-square") != std::string::npos);
    CHECK(meta.find("\"generator\"") != std::string::npos);

    // three-dimensional sets keep their third column
    const PointSet sph = partition_points(sphere_surface_measure(1.0), 10, 0);
    write_pointset_csv(sph, path);
    const PointSet sback = read_pointset_csv(path);
    CHECK(sback.dim == 3);
    REQUIRE(sback.size() == 10);
    for (std::size_t i = 0; i < 10; ++i)
        CHECK(norm(sback.pts3[i] - sph.pts3[i]) == 0.0);

    CHECK_THROWS_AS(read_pointset_csv("/tmp/lab_pointset_missing.csv"),
                    std::runtime_error);
}

TEST_SUITE_END();

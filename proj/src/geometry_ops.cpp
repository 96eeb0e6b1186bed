#include "lab/geometry_ops.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lab/parallel.hpp"
#include "lab/rng.hpp"

#include "koch_internal.hpp"

namespace lab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_bounded_region(const Shape& s, const char* what) {
    if (std::holds_alternative<HalfSpace>(s))
        throw std::invalid_argument(std::string(what) + ": shape is unbounded");
}

double to01(std::uint64_t h) { return (h >> 11) * 0x1.0p-53; }

// Jittered-grid layout: near-square cells, at least `samples` of them.
struct StratGrid {
    Box2 box;
    long long kx = 1, ky = 1;
    double dx = 0.0, dy = 0.0;

    StratGrid(Box2 b, long long samples) : box(b) {
        const double w = b.hi.x - b.lo.x, h = b.hi.y - b.lo.y;
        const double aspect = w / h;
        ky = std::max<long long>(1, std::llround(std::sqrt(samples / aspect)));
        kx = (samples + ky - 1) / ky;
        dx = w / kx;
        dy = h / ky;
    }

    long long cells() const { return kx * ky; }

    Vec2 point(long long idx, std::uint64_t stream) const {
        const long long ix = idx % kx, iy = idx / kx;
        const double jx = to01(mix64(stream + 2 * static_cast<std::uint64_t>(idx)));
        const double jy = to01(mix64(stream + 2 * static_cast<std::uint64_t>(idx) + 1));
        return {box.lo.x + (ix + jx) * dx, box.lo.y + (iy + jy) * dy};
    }
};

// Runs f over every cell point and returns (sum of scores, sum of squares).
// Scores are small non-negative integers, so the reduction is exact and
// independent of the thread layout.
template <class F>
std::pair<long long, long long> accumulate_scores(const StratGrid& grid, std::uint64_t stream,
                                                  F&& f) {
    std::atomic<long long> s1{0}, s2{0};
    parallel_for(static_cast<std::size_t>(grid.cells()), [&](std::size_t lo, std::size_t hi) {
        long long a = 0, b = 0;
        for (std::size_t i = lo; i < hi; ++i) {
            const long long v = f(grid.point(static_cast<long long>(i), stream));
            a += v;
            b += v * v;
        }
        s1.fetch_add(a, std::memory_order_relaxed);
        s2.fetch_add(b, std::memory_order_relaxed);
    });
    return {s1.load(), s2.load()};
}

// Mean/stderr of (score/denom) scaled by the box area.
VolumeEstimate finish_estimate(const StratGrid& grid, std::pair<long long, long long> sums,
                               double denom) {
    const double m = static_cast<double>(grid.cells());
    const double mean = sums.first / (denom * m);
    const double mean2 = sums.second / (denom * denom * m);
    const double var = std::max(0.0, mean2 - mean * mean);
    VolumeEstimate e;
    e.value = grid.box.area() * mean;
    e.se = grid.box.area() * std::sqrt(var / m);
    e.samples = grid.cells();
    return e;
}

double koch_edge_distance(Vec2 a, Vec2 b, int depth, Vec2 p, double best) {
    const Vec2 mid = (a + b) * 0.5;
    const double L = norm(b - a);
    // the whole sub-curve over (a,b) fits in the disk of radius L/2 at mid
    if (norm(p - mid) - koch_detail::kClusterRadiusFactor * L >= best) return best;
    if (depth == 0) return std::min(best, segment_distance(p, a, b));
    const auto e = koch_detail::subdivide(a, b);
    struct Child {
        Vec2 a, b;
        double key;
    } kids[4] = {{a, e.u, 0}, {e.u, e.t, 0}, {e.t, e.w, 0}, {e.w, b, 0}};
    for (auto& k : kids) k.key = norm2(p - (k.a + k.b) * 0.5);
    std::sort(std::begin(kids), std::end(kids),
              [](const Child& x, const Child& y) { return x.key < y.key; });
    for (const auto& k : kids) best = koch_edge_distance(k.a, k.b, depth - 1, p, best);
    return best;
}

double koch_curve_distance(int level, Vec2 p) {
    using namespace koch_detail;
    double best = kInf;
    best = koch_edge_distance(kBaseA, kBaseB, level, p, best);
    best = koch_edge_distance(kBaseB, kBaseC, level, p, best);
    best = koch_edge_distance(kBaseC, kBaseA, level, p, best);
    return best;
}

double rectangle_boundary_distance(const Strip& s, Vec2 p) {
    const double dxo = std::max({s.x0 - p.x, 0.0, p.x - s.x1});
    const double dyo = std::max({s.y0 - p.y, 0.0, p.y - s.y1});
    if (dxo > 0.0 || dyo > 0.0) return std::hypot(dxo, dyo); // outside
    return std::min(std::min(p.x - s.x0, s.x1 - p.x), std::min(p.y - s.y0, s.y1 - p.y));
}

double strips_boundary_distance(const std::vector<Strip>& strips, Vec2 p) {
    double best = kInf;
    // strips ascend in x; walk outward from the insertion point and stop a
    // direction once the horizontal gap alone exceeds the best distance
    const auto it = std::lower_bound(strips.begin(), strips.end(), p.x,
                                     [](const Strip& s, double x) { return s.x1 < x; });
    const std::ptrdiff_t i0 = it - strips.begin();
    for (std::ptrdiff_t i = i0; i < static_cast<std::ptrdiff_t>(strips.size()); ++i) {
        if (strips[i].x0 - p.x >= best) break;
        best = std::min(best, rectangle_boundary_distance(strips[i], p));
    }
    for (std::ptrdiff_t i = i0 - 1; i >= 0; --i) {
        if (p.x - strips[i].x1 >= best) break;
        best = std::min(best, rectangle_boundary_distance(strips[i], p));
    }
    return best;
}

} // namespace

Box2 bounding_box(const Shape& s) {
    require_bounded_region(s, "bounding_box");
    return std::visit(
        [](const auto& v) -> Box2 {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Ball>) {
                return {{-v.radius, -v.radius}, {v.radius, v.radius}};
            } else if constexpr (std::is_same_v<T, ConvexPolygon>) {
                Box2 b{{kInf, kInf}, {-kInf, -kInf}};
                for (const auto& p : v.vertices) {
                    b.lo.x = std::min(b.lo.x, p.x);
                    b.lo.y = std::min(b.lo.y, p.y);
                    b.hi.x = std::max(b.hi.x, p.x);
                    b.hi.y = std::max(b.hi.y, p.y);
                }
                return b;
            } else if constexpr (std::is_same_v<T, KochRegion> ||
                                 std::is_same_v<T, KochCurvePolyline>) {
                // extremes of the region are attained at soup vertices
                Box2 b{{kInf, kInf}, {-kInf, -kInf}};
                for (const auto& t : koch_soup(v.level)) {
                    for (const auto& p : t) {
                        b.lo.x = std::min(b.lo.x, p.x);
                        b.lo.y = std::min(b.lo.y, p.y);
                        b.hi.x = std::max(b.hi.x, p.x);
                        b.hi.y = std::max(b.hi.y, p.y);
                    }
                }
                return b;
            } else if constexpr (std::is_same_v<T, RectangleUnionGamma>) {
                const auto& strips = rectangle_union_strips(v);
                return {{strips.front().x0, strips.front().y0},
                        {strips.back().x1, strips.back().y1}};
            } else {
                throw std::invalid_argument("bounding_box: shape is unbounded");
            }
        },
        s);
}

double boundary_distance(const Shape& s, Vec2 p) {
    return std::visit(
        [p](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Ball>) {
                return std::fabs(norm(p) - v.radius);
            } else if constexpr (std::is_same_v<T, ConvexPolygon>) {
                double best = kInf;
                const auto& poly = v.vertices;
                for (std::size_t i = 0; i < poly.size(); ++i)
                    best = std::min(best,
                                    segment_distance(p, poly[i], poly[(i + 1) % poly.size()]));
                return best;
            } else if constexpr (std::is_same_v<T, KochRegion> ||
                                 std::is_same_v<T, KochCurvePolyline>) {
                return koch_curve_distance(v.level, p);
            } else if constexpr (std::is_same_v<T, RectangleUnionGamma>) {
                return strips_boundary_distance(rectangle_union_strips(v), p);
            } else {
                return std::fabs(dot(p, v.theta) - v.rho);
            }
        },
        s);
}

VolumeEstimate symmetric_difference_volume(const Shape& s, Vec2 h, long long samples,
                                           std::uint64_t seed) {
    require_bounded_region(s, "symmetric_difference_volume");
    if (volume(s) <= 0.0)
        throw std::invalid_argument("symmetric_difference_volume: shape has zero volume");
    if (samples < 1000)
        throw std::invalid_argument("symmetric_difference_volume: need at least 1000 samples");

    const Box2 box = bounding_box(s).inflated(norm(h) + 1e-12);
    const StratGrid grid(box, samples);
    const std::uint64_t stream = substream(seed, "symdiff");

    // score = [z in (h+S) symdiff S] + [z in (-h+S) symdiff S]; both sets have
    // the target volume and both live inside the inflated box, so the average
    // of the two indicators is unbiased and reuses the membership test at z.
    const auto sums = accumulate_scores(grid, stream, [&](Vec2 z) -> long long {
        const bool c0 = contains_reference(s, z);
        const bool cm = contains_reference(s, z - h);
        const bool cp = contains_reference(s, z + h);
        return (c0 != cm) + (c0 != cp);
    });
    return finish_estimate(grid, sums, 2.0);
}

VolumeEstimate minkowski_shell_volume(const Shape& s, double t, long long samples,
                                      std::uint64_t seed) {
    require_bounded_region(s, "minkowski_shell_volume");
    if (!(t > 0.0) || !(t < 1.0))
        throw std::invalid_argument("minkowski_shell_volume: t must lie in (0,1)");
    if (samples < 1000)
        throw std::invalid_argument("minkowski_shell_volume: need at least 1000 samples");

    const Box2 box = bounding_box(s).inflated(t + 1e-12);
    const StratGrid grid(box, samples);
    const std::uint64_t stream = substream(seed, "shell");

    const auto sums = accumulate_scores(
        grid, stream, [&](Vec2 z) -> long long { return boundary_distance(s, z) <= t; });
    return finish_estimate(grid, sums, 1.0);
}

BetaFit fit_beta(const Shape& s, Vec2 direction, const std::vector<double>& t_sequence,
                 long long samples, std::uint64_t seed) {
    if (std::fabs(norm(direction) - 1.0) > 1e-9)
        throw std::invalid_argument("fit_beta: direction must be a unit vector");
    if (t_sequence.size() < 4) throw std::invalid_argument("fit_beta: need at least 4 scales");
    for (std::size_t i = 0; i < t_sequence.size(); ++i) {
        if (!(t_sequence[i] > 0.0)) throw std::invalid_argument("fit_beta: scales must be > 0");
        if (i > 0 && !(t_sequence[i] < t_sequence[i - 1]))
            throw std::invalid_argument("fit_beta: scales must be strictly decreasing");
    }

    BetaFit fit;
    fit.t = t_sequence;
    fit.estimates.reserve(t_sequence.size());
    for (std::size_t i = 0; i < t_sequence.size(); ++i) {
        const auto est = symmetric_difference_volume(
            s, t_sequence[i] * direction, samples,
            substream(seed, "fit-beta-scale-" + std::to_string(i)));
        if (!(est.value > 0.0))
            throw std::runtime_error("fit_beta: symmetric difference unresolved at t = " +
                                     std::to_string(t_sequence[i]) + "; raise samples");
        fit.estimates.push_back(est);
    }

    // least squares on log-log
    const std::size_t n = t_sequence.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::log(t_sequence[i]), y = std::log(fit.estimates[i].value);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    fit.beta_hat = (n * sxy - sx * sy) / (n * sxx - sx * sx);

    fit.kappa1_hat = 0.0;
    fit.kappa2_hat = kInf;
    for (std::size_t i = 0; i < n; ++i) {
        const double ratio = fit.estimates[i].value / std::pow(t_sequence[i], fit.beta_hat);
        fit.kappa1_hat = std::max(fit.kappa1_hat, ratio);
        fit.kappa2_hat = std::min(fit.kappa2_hat, ratio);
    }
    return fit;
}

} // namespace lab

#include "lab/pointset_ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <stdexcept>

#include "lab/clip.hpp"
#include "lab/rng.hpp"
#include "lab/shape.hpp"
#include "koch_internal.hpp"

namespace lab {

namespace {

constexpr const char* kSupportedList =
    "supported: lebesgue on an axis-aligned rectangle, disk, or koch region; "
    "koch curve; circle; sphere surface";

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

// Integer apportionment: round real targets (summing to n) to integers that
// still sum to n, largest fractional parts first, then enforce a count of at
// least one per slot by stealing from the largest slots.
std::vector<long long> apportion(const std::vector<double>& targets, long long n) {
    const std::size_t m = targets.size();
    std::vector<long long> out(m);
    std::vector<std::pair<double, std::size_t>> rem(m);
    long long used = 0;
    for (std::size_t i = 0; i < m; ++i) {
        out[i] = static_cast<long long>(std::floor(targets[i]));
        rem[i] = {targets[i] - static_cast<double>(out[i]), i};
        used += out[i];
    }
    std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second < b.second);
    });
    for (std::size_t i = 0; used < n && i < m; ++i, ++used) ++out[rem[i].second];
    for (std::size_t i = 0; used > n && i < m; ++i) {
        if (out[rem[m - 1 - i].second] > 0) { --out[rem[m - 1 - i].second]; --used; }
    }
    for (std::size_t i = 0; i < m; ++i) {
        while (out[i] == 0) {
            const std::size_t big = static_cast<std::size_t>(
                std::max_element(out.begin(), out.end()) - out.begin());
            if (out[big] <= 1) throw std::logic_error("apportion: not enough mass");
            --out[big];
            ++out[i];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// rectangle: ceil(sqrt(n)) columns along the longer side, each column split
// into equal rows, column widths proportional to their row counts so every
// cell has area exactly (width * height) / n.

bool axis_rectangle(const ConvexPolygon& poly, Vec2& lo, Vec2& hi) {
    if (poly.vertices.size() != 4) return false;
    for (std::size_t i = 0; i < 4; ++i) {
        const Vec2 e = poly.vertices[(i + 1) % 4] - poly.vertices[i];
        const double scale = std::abs(e.x) + std::abs(e.y);
        if (std::min(std::abs(e.x), std::abs(e.y)) > 1e-12 * scale) return false;
    }
    lo = hi = poly.vertices[0];
    for (const Vec2& v : poly.vertices) {
        lo.x = std::min(lo.x, v.x); lo.y = std::min(lo.y, v.y);
        hi.x = std::max(hi.x, v.x); hi.y = std::max(hi.y, v.y);
    }
    return true;
}

void partition_rectangle(Vec2 lo, Vec2 hi, long long n,
                         EqualMeasurePartition& part) {
    const double W = hi.x - lo.x, H = hi.y - lo.y;
    const bool swap = H > W; // columns along the longer side
    const double cw = swap ? H : W, ch = swap ? W : H;
    const long long k = static_cast<long long>(
        std::ceil(std::sqrt(static_cast<double>(n))));
    std::vector<double> targets(static_cast<std::size_t>(k),
                                static_cast<double>(n) / static_cast<double>(k));
    const std::vector<long long> counts = apportion(targets, n);
    double x0 = 0.0;
    for (long long i = 0; i < k; ++i) {
        const long long ni = counts[static_cast<std::size_t>(i)];
        const double w = cw * static_cast<double>(ni) / static_cast<double>(n);
        const double rh = ch / static_cast<double>(ni);
        for (long long j = 0; j < ni; ++j) {
            PartitionCell cell;
            Vec2 clo{x0, static_cast<double>(j) * rh};
            Vec2 chi{x0 + w, static_cast<double>(j + 1) * rh};
            if (swap) { std::swap(clo.x, clo.y); std::swap(chi.x, chi.y); }
            clo = clo + lo;
            chi = chi + lo;
            cell.geom = CellBox{clo, chi};
            cell.measure = 1.0 / static_cast<double>(n);
            cell.diameter = norm(chi - clo);
            cell.rep2 = 0.5 * (clo + chi);
            part.cells.push_back(std::move(cell));
        }
        x0 += w;
    }
}

// ---------------------------------------------------------------------------
// disk: equal-area rings whose radii come from cumulative cell counts, each
// ring cut into equal sectors; ring boundaries r = R sqrt(count/n) make every
// cell's area exactly pi R^2 / n.

void partition_disk(double R, long long n, EqualMeasurePartition& part) {
    const long long m = std::max<long long>(
        1, std::llround(std::sqrt(static_cast<double>(n) / M_PI)));
    std::vector<double> targets(static_cast<std::size_t>(m));
    for (long long j = 0; j < m; ++j)
        targets[static_cast<std::size_t>(j)] =
            static_cast<double>(n) * static_cast<double>(2 * j + 1) /
            static_cast<double>(m * m);
    const std::vector<long long> counts = apportion(targets, n);
    long long before = 0;
    for (long long j = 0; j < m; ++j) {
        const long long nj = counts[static_cast<std::size_t>(j)];
        const double r0 = R * std::sqrt(static_cast<double>(before) /
                                        static_cast<double>(n));
        const double r1 = R * std::sqrt(static_cast<double>(before + nj) /
                                        static_cast<double>(n));
        const double offset = (j % 2 == 1) ? M_PI / static_cast<double>(nj) : 0.0;
        const double rbar = (2.0 / 3.0) * (r1 * r1 * r1 - r0 * r0 * r0) /
                            (r1 * r1 - r0 * r0);
        for (long long s = 0; s < nj; ++s) {
            const double a0 = offset + 2.0 * M_PI * static_cast<double>(s) /
                                           static_cast<double>(nj);
            const double a1 = a0 + 2.0 * M_PI / static_cast<double>(nj);
            PartitionCell cell;
            cell.geom = CellPolar{r0, r1, nj == 1 ? 0.0 : a0, nj == 1 ? 2.0 * M_PI : a1};
            cell.measure = 1.0 / static_cast<double>(n);
            if (nj == 1 && r0 == 0.0) {
                cell.rep2 = {0.0, 0.0};       // the cell is the whole inner disk
                cell.diameter = 2.0 * r1;
            } else if (nj == 1) {
                cell.rep2 = {rbar, 0.0};      // full ring: stay on the midline
                cell.diameter = 2.0 * r1;
            } else {
                const double half = M_PI / static_cast<double>(nj);
                const double mid = 0.5 * (a0 + a1);
                // planar centroid of the sector cut; pulled out to the radial
                // centroid when a wide thin cell would put it below r0
                double rho = rbar * sinc(half);
                if (rho < r0) rho = rbar;
                cell.rep2 = {rho * std::cos(mid), rho * std::sin(mid)};
                const double chord0 = 2.0 * r1 * std::sin(std::min(half, M_PI / 2.0));
                cell.diameter = std::hypot(r1 - r0, chord0);
            }
            part.cells.push_back(std::move(cell));
        }
        before += nj;
    }
}

// ---------------------------------------------------------------------------
// koch region.  The bulk of the area is the convex base triangle, which takes
// whole cells under recursive balanced bisection.  The boundary fringe -- the
// pendant triangles -- is consumed in boundary order: walking the curve and
// cutting every time another 1/n of area has accumulated keeps each fringe
// cell inside a short stretch of the curve, so its extent stays comparable to
// sqrt(area) instead of degenerating into long sparse slivers.

double area_below(const std::vector<Vec2>& poly, int axis, double c) {
    Vec2 buf[40];
    int m = 0;
    const std::size_t nv = poly.size();
    for (std::size_t i = 0; i < nv; ++i) {
        const Vec2 p = poly[i], q = poly[(i + 1) % nv];
        const double fp = (axis == 0 ? p.x : p.y) - c;
        const double fq = (axis == 0 ? q.x : q.y) - c;
        if (fp <= 0.0) buf[m++] = p;
        if ((fp < 0.0) != (fq < 0.0)) {
            const double t = fp / (fp - fq);
            buf[m++] = p + t * (q - p);
        }
    }
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += cross(buf[i], buf[(i + 1) % m]);
    return 0.5 * acc;
}

// area of poly cut to the halfplane dot(x, dir) <= c
double area_dir_below(const std::vector<Vec2>& poly, Vec2 dir, double c) {
    Vec2 buf[40];
    int m = 0;
    const std::size_t nv = poly.size();
    for (std::size_t i = 0; i < nv; ++i) {
        const Vec2 p = poly[i], q = poly[(i + 1) % nv];
        const double fp = dot(p, dir) - c;
        const double fq = dot(q, dir) - c;
        if (fp <= 0.0) buf[m++] = p;
        if ((fp < 0.0) != (fq < 0.0)) {
            const double t = fp / (fp - fq);
            buf[m++] = p + t * (q - p);
        }
    }
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += cross(buf[i], buf[(i + 1) % m]);
    return 0.5 * acc;
}

// position of the sweep cut along dir that captures `target` of poly's area
double solve_dir_cut(const std::vector<Vec2>& poly, Vec2 dir, double target) {
    double a = 1e300, b = -1e300;
    for (const Vec2& v : poly) {
        a = std::min(a, dot(v, dir));
        b = std::max(b, dot(v, dir));
    }
    for (int it = 0; it < 80; ++it) {
        const double m = 0.5 * (a + b);
        (area_dir_below(poly, dir, m) < target ? a : b) = m;
    }
    return 0.5 * (a + b);
}

double polys_area(const std::vector<std::vector<Vec2>>& polys) {
    double a = 0.0;
    for (const auto& p : polys) a += polygon_area_signed(p);
    return a;
}

void region_bbox(const std::vector<std::vector<Vec2>>& polys, Vec2& lo, Vec2& hi) {
    lo = {1e300, 1e300};
    hi = {-1e300, -1e300};
    for (const auto& p : polys)
        for (const Vec2& v : p) {
            lo.x = std::min(lo.x, v.x); lo.y = std::min(lo.y, v.y);
            hi.x = std::max(hi.x, v.x); hi.y = std::max(hi.y, v.y);
        }
}

bool convex_contains(const std::vector<Vec2>& poly, Vec2 p, double tol) {
    const std::size_t nv = poly.size();
    for (std::size_t i = 0; i < nv; ++i) {
        const Vec2 a = poly[i], b = poly[(i + 1) % nv];
        if (cross(b - a, p - a) < -tol * (norm(b - a) + 1e-300)) return false;
    }
    return true;
}

void finish_region_cell(std::vector<std::vector<Vec2>>&& polys, double cell_measure,
                        EqualMeasurePartition& part) {
    PartitionCell cell;
    Vec2 lo, hi;
    region_bbox(polys, lo, hi);
    double area = 0.0;
    Vec2 cmom{0.0, 0.0};
    std::size_t biggest = 0;
    double big_area = -1.0;
    for (std::size_t i = 0; i < polys.size(); ++i) {
        const auto& p = polys[i];
        const double a = polygon_area_signed(p);
        Vec2 c{0.0, 0.0};
        for (std::size_t j = 0; j < p.size(); ++j) {
            const Vec2 u = p[j], v = p[(j + 1) % p.size()];
            c = c + cross(u, v) * (u + v);
        }
        c = (1.0 / (6.0 * a)) * c;
        area += a;
        cmom = cmom + a * c;
        if (a > big_area) { big_area = a; biggest = i; }
    }
    Vec2 rep = (1.0 / area) * cmom;
    bool inside = false;
    for (const auto& p : polys)
        if (convex_contains(p, rep, 1e-12)) { inside = true; break; }
    if (!inside) { // centroid fell in a notch; retreat into the biggest piece
        const auto& p = polys[biggest];
        Vec2 c{0.0, 0.0};
        for (std::size_t j = 0; j < p.size(); ++j) {
            const Vec2 u = p[j], v = p[(j + 1) % p.size()];
            c = c + cross(u, v) * (u + v);
        }
        rep = (1.0 / (6.0 * big_area)) * c;
    }
    cell.rep2 = rep;
    cell.measure = cell_measure;
    cell.diameter = norm(hi - lo);
    cell.geom = CellRegionPiece{std::move(polys), lo, hi};
    part.cells.push_back(std::move(cell));
}

void split_region(std::vector<std::vector<Vec2>>&& polys, long long count,
                  double cell_measure, EqualMeasurePartition& part) {
    if (count == 1) {
        finish_region_cell(std::move(polys), cell_measure, part);
        return;
    }
    Vec2 lo, hi;
    region_bbox(polys, lo, hi);
    const double total = polys_area(polys);
    const double cell_area = total / static_cast<double>(count);
    // For each axis, aim the cut at the geometric middle, then snap it to the
    // nearest whole-cell area quantile so both windows keep exact budgets.
    // Cutting at the middle (rather than at the half-count quantile) stops
    // sparse boundary fringes from surviving as long thin cells: their extent
    // halves at every level even where the area density is tiny.
    int axis = 0;
    long long left = count / 2;
    double c = 0.0;
    double best_score = 1e300;
    for (int try_axis = 0; try_axis < 2; ++try_axis) {
        const double alo = try_axis == 0 ? lo.x : lo.y;
        const double ahi = try_axis == 0 ? hi.x : hi.y;
        const double other = try_axis == 0 ? hi.y - lo.y : hi.x - lo.x;
        double mid_area = 0.0;
        for (const auto& p : polys) mid_area += area_below(p, try_axis, 0.5 * (alo + ahi));
        const long long k = std::clamp<long long>(
            std::llround(mid_area / cell_area), 1, count - 1);
        const double target = cell_area * static_cast<double>(k);
        double a = alo, b = ahi;
        for (int it = 0; it < 80; ++it) {
            const double m = 0.5 * (a + b);
            double below = 0.0;
            for (const auto& p : polys) below += area_below(p, try_axis, m);
            (below < target ? a : b) = m;
        }
        const double cut = 0.5 * (a + b);
        const double score = std::max(std::hypot(cut - alo, other),
                                      std::hypot(ahi - cut, other));
        if (score < best_score) {
            best_score = score;
            axis = try_axis;
            left = k;
            c = cut;
        }
    }
    const Vec2 keep_lo = axis == 0 ? Vec2{-1.0, 0.0} : Vec2{0.0, -1.0};
    std::vector<std::vector<Vec2>> lpolys, rpolys;
    for (auto& p : polys) {
        std::vector<Vec2> l = clip_polygon_halfplane(p, keep_lo, -c);
        std::vector<Vec2> r = clip_polygon_halfplane(p, -1.0 * keep_lo, c);
        if (l.size() >= 3 && polygon_area_signed(l) > 1e-18) lpolys.push_back(std::move(l));
        if (r.size() >= 3 && polygon_area_signed(r) > 1e-18) rpolys.push_back(std::move(r));
    }
    polys.clear();
    split_region(std::move(lpolys), left, cell_measure, part);
    split_region(std::move(rpolys), count - left, cell_measure, part);
}

void partition_koch_region(int level, long long n, EqualMeasurePartition& part) {
    using koch_detail::kBaseA;
    using koch_detail::kBaseB;
    using koch_detail::kBaseC;
    const double total = koch_region_area(level);
    const double cell_area = total / static_cast<double>(n);
    const double cell_measure = 1.0 / static_cast<double>(n);
    const double base_area = 0.25 * koch_detail::kSqrt3;

    // The convex base triangle takes as many whole cells as fit.  Its
    // fractional remainder is carved off as a small corner wedge at the vertex
    // where the boundary walk below starts and ends, so the wedge joins the
    // first fringe cell instead of smearing across the triangle.
    long long k_base = static_cast<long long>(std::floor(base_area / cell_area));
    if (k_base >= n) k_base = n - 1;
    const double leftover = base_area - static_cast<double>(k_base) * cell_area;

    std::vector<Triangle> stream;
    stream.reserve((static_cast<std::size_t>(1) << (2 * level)) + 1);
    std::vector<std::vector<Vec2>> base_polys;
    if (k_base == 0) {
        stream.push_back({kBaseA, kBaseB, kBaseC});
    } else if (leftover <= 1e-13 * base_area) {
        base_polys.push_back({kBaseA, kBaseB, kBaseC});
    } else {
        const double lam = std::sqrt(leftover / base_area);
        const Vec2 ab = kBaseA + lam * (kBaseB - kBaseA);
        const Vec2 ac = kBaseA + lam * (kBaseC - kBaseA);
        stream.push_back({kBaseA, ab, ac});
        base_polys.push_back({ab, kBaseB, kBaseC, ac});
    }

    // Pendants in the order the boundary visits them: each pendant is emitted
    // between the sub-arcs it separates, so consecutive stream entries are
    // geometric neighbours and any contiguous slab of stream area sits on a
    // short stretch of the curve.
    auto emit = [&stream](auto&& self, Vec2 a, Vec2 b, int depth) -> void {
        if (depth == 0) return;
        const koch_detail::EdgePieces e = koch_detail::subdivide(a, b);
        self(self, a, e.u, depth - 1);
        stream.push_back({e.u, e.t, e.w});
        self(self, e.u, e.t, depth - 1);
        self(self, e.t, e.w, depth - 1);
        self(self, e.w, b, depth - 1);
    };
    emit(emit, kBaseA, kBaseB, level);
    emit(emit, kBaseB, kBaseC, level);
    emit(emit, kBaseC, kBaseA, level);

    if (!base_polys.empty()) split_region(std::move(base_polys), k_base, cell_measure, part);

    const long long n_runs = n - k_base;
    std::vector<std::vector<Vec2>> run;
    double s = 0.0; // stream area consumed so far
    long long closed = 0;
    auto close_run = [&]() {
        finish_region_cell(std::move(run), cell_measure, part);
        run.clear();
        ++closed;
    };
    for (const Triangle& tri : stream) {
        std::vector<Vec2> piece{tri[0], tri[1], tri[2]};
        // sweep along the pendant's base: cuts march with the curve direction
        const Vec2 span = tri[2] - tri[0];
        const Vec2 dir = (1.0 / norm(span)) * span;
        while (true) {
            const double piece_area = polygon_area_signed(piece);
            if (piece_area <= 1e-18) break;
            const double need = static_cast<double>(closed + 1) * cell_area - s;
            if (!run.empty() && need < 1e-12 * cell_area) {
                close_run(); // run filled exactly at a triangle seam
                continue;
            }
            if (closed == n_runs - 1 || piece_area < need - 1e-14 * cell_area) {
                run.push_back(std::move(piece));
                s += piece_area;
                break;
            }
            const double cut = solve_dir_cut(piece, dir, need);
            std::vector<Vec2> head = clip_polygon_halfplane(piece, -1.0 * dir, -cut);
            std::vector<Vec2> rest = clip_polygon_halfplane(piece, dir, cut);
            if (head.size() >= 3 && polygon_area_signed(head) > 1e-18)
                run.push_back(std::move(head));
            s += need;
            close_run();
            if (rest.size() < 3) break;
            // A pendant holding several cells: keep its fractional remainder
            // as a slab at the near corner -- where the boundary walk resumes
            // -- and hand the whole cells beyond it to the balanced splitter.
            // Leaving the remainder at the far corner instead would strand it
            // in the open run while the walk explores the near sub-arcs,
            // and the closing cell would straddle the whole pendant.
            const double rest_area = polygon_area_signed(rest);
            long long whole = static_cast<long long>(std::floor(rest_area / cell_area));
            whole = std::min(whole, n_runs - 1 - closed);
            if (whole < 1) {
                piece = std::move(rest);
                continue;
            }
            const double frac = rest_area - static_cast<double>(whole) * cell_area;
            std::vector<Vec2> slab;
            std::vector<Vec2> block = std::move(rest);
            if (frac > 1e-12 * cell_area) {
                const double cut2 = solve_dir_cut(block, dir, frac);
                slab = clip_polygon_halfplane(block, -1.0 * dir, -cut2);
                block = clip_polygon_halfplane(block, dir, cut2);
            }
            std::vector<std::vector<Vec2>> bp;
            bp.push_back(std::move(block));
            split_region(std::move(bp), whole, cell_measure, part);
            closed += whole;
            s += static_cast<double>(whole) * cell_area;
            if (slab.size() < 3 || polygon_area_signed(slab) <= 1e-18) break;
            piece = std::move(slab);
        }
    }
    if (!run.empty()) close_run();
}

// ---------------------------------------------------------------------------
// koch curve: contiguous blocks of normalized arclength 1/n; the polyline
// carries uniform mass per segment, so positions are linear in mass.

Vec2 curve_point(const std::vector<Vec2>& verts, double mass) {
    const std::size_t S = verts.size();
    double g = mass * static_cast<double>(S);
    std::size_t k = static_cast<std::size_t>(g);
    if (k >= S) k = S - 1;
    const double t = g - static_cast<double>(k);
    return verts[k] + t * (verts[(k + 1) % S] - verts[k]);
}

void partition_curve(int level, long long n, EqualMeasurePartition& part) {
    const std::vector<Vec2> verts = koch_polygon(level);
    const long long S = static_cast<long long>(verts.size());
    for (long long i = 0; i < n; ++i) {
        const double m0 = static_cast<double>(i) / static_cast<double>(n);
        const double m1 = static_cast<double>(i + 1) / static_cast<double>(n);
        PartitionCell cell;
        cell.geom = CellMassRange{m0, m1};
        cell.measure = 1.0 / static_cast<double>(n);
        cell.rep2 = curve_point(verts, (static_cast<double>(i) + 0.5) /
                                           static_cast<double>(n));
        Vec2 lo = curve_point(verts, m0), hi = lo;
        const auto grow = [&](Vec2 p) {
            lo.x = std::min(lo.x, p.x); lo.y = std::min(lo.y, p.y);
            hi.x = std::max(hi.x, p.x); hi.y = std::max(hi.y, p.y);
        };
        const long long k0 = static_cast<long long>(
            std::ceil(m0 * static_cast<double>(S) - 1e-12));
        const long long k1 = static_cast<long long>(
            std::floor(m1 * static_cast<double>(S) + 1e-12));
        for (long long k = k0; k <= k1 && k <= S; ++k)
            grow(verts[static_cast<std::size_t>(k % S)]);
        grow(curve_point(verts, std::min(m1, 1.0 - 1e-16)));
        cell.diameter = norm(hi - lo);
        part.cells.push_back(std::move(cell));
    }
}

// ---------------------------------------------------------------------------
// circle: arcs centered on the equispaced angles 2 pi j / n.

void partition_circle(double R, long long n, EqualMeasurePartition& part) {
    for (long long j = 0; j < n; ++j) {
        const double mid = 2.0 * M_PI * static_cast<double>(j) /
                           static_cast<double>(n);
        const double half = M_PI / static_cast<double>(n);
        PartitionCell cell;
        cell.geom = CellArc{mid - half, mid + half};
        cell.measure = 1.0 / static_cast<double>(n);
        cell.rep2 = {R * std::cos(mid), R * std::sin(mid)};
        cell.diameter = 2.0 * R * std::sin(std::min(half, M_PI / 2.0));
        part.cells.push_back(std::move(cell));
    }
}

// ---------------------------------------------------------------------------
// sphere: polar cap cells plus collars cut into equal lunes; z-boundaries
// come from cumulative counts, so each cell's fraction is exactly 1/n.

double zone_diameter(double R, double z0, double z1, double p0, double p1) {
    const double dphi = std::min(p1 - p0, 2.0 * M_PI);
    const double w0 = std::sqrt(std::max(0.0, 1.0 - z0 * z0));
    const double w1 = std::sqrt(std::max(0.0, 1.0 - z1 * z1));
    const double wmax = (z0 <= 0.0 && z1 >= 0.0) ? 1.0 : std::max(w0, w1);
    const double width = 2.0 * wmax * std::sin(std::min(dphi, M_PI) / 2.0);
    const double height = std::hypot(w1 - w0, z1 - z0); // meridian chord
    return R * std::hypot(width, height);
}

void partition_sphere(double R, long long n, EqualMeasurePartition& part) {
    part.dim = 3;
    if (n == 1) {
        PartitionCell cell;
        cell.geom = CellZone{-1.0, 1.0, 0.0, 2.0 * M_PI};
        cell.measure = 1.0;
        cell.rep3 = {0.0, 0.0, R};
        cell.diameter = 2.0 * R;
        part.cells.push_back(std::move(cell));
        return;
    }
    const double zc = 1.0 - 2.0 / static_cast<double>(n); // cap boundary height
    const auto push_zone = [&](double z0, double z1, double p0, double p1,
                               bool cap, double cap_z) {
        PartitionCell cell;
        cell.geom = CellZone{z0, z1, p0, p1};
        cell.measure = 1.0 / static_cast<double>(n);
        if (cap) {
            cell.rep3 = {0.0, 0.0, cap_z * R};
            cell.diameter = 2.0 * R * std::sqrt(std::max(0.0, 1.0 - zc * zc));
        } else {
            const double zm = 0.5 * (z0 + z1);
            const double pm = 0.5 * (p0 + p1);
            const double w = std::sqrt(std::max(0.0, 1.0 - zm * zm));
            cell.rep3 = {R * w * std::cos(pm), R * w * std::sin(pm), R * zm};
            cell.diameter = zone_diameter(R, z0, z1, p0, p1);
        }
        part.cells.push_back(std::move(cell));
    };
    push_zone(zc, 1.0, 0.0, 2.0 * M_PI, true, 1.0);
    const long long middle = n - 2;
    if (middle > 0) {
        const double theta_c = std::acos(std::min(1.0, std::max(-1.0, zc)));
        const double ideal = std::sqrt(4.0 * M_PI / static_cast<double>(n));
        const long long m = std::max<long long>(
            1, std::llround((M_PI - 2.0 * theta_c) / ideal));
        // share the middle cells among collars of equal angular height
        std::vector<double> targets(static_cast<std::size_t>(m));
        const double h = (M_PI - 2.0 * theta_c) / static_cast<double>(m);
        double frac_total = 0.0;
        for (long long k = 0; k < m; ++k) {
            const double t0 = theta_c + static_cast<double>(k) * h;
            const double f = 0.5 * (std::cos(t0) - std::cos(t0 + h));
            targets[static_cast<std::size_t>(k)] = f;
            frac_total += f;
        }
        for (double& t : targets) t *= static_cast<double>(middle) / frac_total;
        const std::vector<long long> counts = apportion(targets, middle);
        long long before = 1; // the top cap
        for (long long k = 0; k < m; ++k) {
            const long long nk = counts[static_cast<std::size_t>(k)];
            const double z1 = 1.0 - 2.0 * static_cast<double>(before) /
                                        static_cast<double>(n);
            const double z0 = 1.0 - 2.0 * static_cast<double>(before + nk) /
                                        static_cast<double>(n);
            const double offset = (k % 2 == 1) ? M_PI / static_cast<double>(nk) : 0.0;
            for (long long s = 0; s < nk; ++s) {
                const double p0 = offset + 2.0 * M_PI * static_cast<double>(s) /
                                               static_cast<double>(nk);
                push_zone(z0, z1, p0, p0 + 2.0 * M_PI / static_cast<double>(nk),
                          nk == 1, 0.0);
                if (nk == 1) {
                    // a full-circle collar keeps an on-zone representative
                    PartitionCell& cell = part.cells.back();
                    const double zm = 0.5 * (z0 + z1);
                    const double w = std::sqrt(std::max(0.0, 1.0 - zm * zm));
                    cell.rep3 = {R * w, 0.0, R * zm};
                    cell.diameter = zone_diameter(R, z0, z1, 0.0, 2.0 * M_PI);
                }
            }
            before += nk;
        }
    }
    push_zone(-1.0, -zc, 0.0, 2.0 * M_PI, true, -1.0);
}

bool angle_in(double a, double a0, double a1, double tol) {
    if (a1 - a0 >= 2.0 * M_PI - 1e-12) return true;
    double d = std::fmod(a - a0, 2.0 * M_PI);
    if (d < 0.0) d += 2.0 * M_PI;
    return d <= (a1 - a0) + tol || d >= 2.0 * M_PI - tol;
}

const std::vector<Vec2>& curve_verts_for(const MeasureSpec& mu) {
    static std::map<int, std::vector<Vec2>> cache;
    static std::mutex guard;
    const int level = std::get<KochCurveMeasure>(mu.variant).level;
    std::lock_guard<std::mutex> lock(guard);
    auto it = cache.find(level);
    if (it == cache.end()) it = cache.emplace(level, koch_polygon(level)).first;
    return it->second;
}

} // namespace

EqualMeasurePartition build_partition(const MeasureSpec& mu, long long n) {
    validate(mu);
    if (n < 1) throw std::invalid_argument("build_partition: need n >= 1");
    EqualMeasurePartition part;
    part.dim = 2;
    part.alpha_geom = 2.0;
    if (const auto* leb = std::get_if<LebesgueOnShape>(&mu.variant)) {
        if (const auto* poly = std::get_if<ConvexPolygon>(&leb->support)) {
            Vec2 lo, hi;
            if (!axis_rectangle(*poly, lo, hi))
                throw std::invalid_argument(
                    std::string("build_partition: polygon support must be an "
                                "axis-aligned rectangle; ") + kSupportedList);
            partition_rectangle(lo, hi, n, part);
        } else if (const auto* ball = std::get_if<Ball>(&leb->support)) {
            partition_disk(ball->radius, n, part);
        } else if (const auto* kr = std::get_if<KochRegion>(&leb->support)) {
            partition_koch_region(kr->level, n, part);
        } else {
            throw std::invalid_argument(
                std::string("build_partition: unsupported lebesgue support; ") +
                kSupportedList);
        }
    } else if (const auto* kc = std::get_if<KochCurveMeasure>(&mu.variant)) {
        partition_curve(kc->level, n, part);
        part.alpha_geom = std::log(4.0) / std::log(3.0);
    } else if (const auto* ca = std::get_if<CircleArcMeasure>(&mu.variant)) {
        partition_circle(ca->radius, n, part);
        part.alpha_geom = 1.0;
    } else if (const auto* sp = std::get_if<SphereSurfaceMeasure>(&mu.variant)) {
        partition_sphere(sp->radius, n, part);
    } else {
        throw std::invalid_argument(
            std::string("build_partition: unsupported measure; ") + kSupportedList);
    }
    part.max_diameter = 0.0;
    for (const PartitionCell& c : part.cells)
        part.max_diameter = std::max(part.max_diameter, c.diameter);
    part.diameter_constant =
        part.max_diameter *
        std::pow(static_cast<double>(n), 1.0 / part.alpha_geom);
    return part;
}

bool cell_contains(const MeasureSpec& mu, const PartitionCell& cell, Vec2 p,
                   double tol) {
    return std::visit(
        [&](const auto& g) -> bool {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, CellBox>) {
                return p.x >= g.lo.x - tol && p.x <= g.hi.x + tol &&
                       p.y >= g.lo.y - tol && p.y <= g.hi.y + tol;
            } else if constexpr (std::is_same_v<T, CellPolar>) {
                const double r = norm(p);
                if (r < g.r0 - tol || r > g.r1 + tol) return false;
                return angle_in(std::atan2(p.y, p.x), g.a0, g.a1, tol);
            } else if constexpr (std::is_same_v<T, CellRegionPiece>) {
                for (const auto& poly : g.polys)
                    if (convex_contains(poly, p, tol)) return true;
                return false;
            } else if constexpr (std::is_same_v<T, CellArc>) {
                const double R = std::get<CircleArcMeasure>(mu.variant).radius;
                if (std::abs(norm(p) - R) > tol * std::max(1.0, R)) return false;
                return angle_in(std::atan2(p.y, p.x), g.a0, g.a1, tol / R);
            } else if constexpr (std::is_same_v<T, CellMassRange>) {
                const std::vector<Vec2>& verts = curve_verts_for(mu);
                const std::size_t S = verts.size();
                double best = 1e300;
                double mass = 0.0;
                for (std::size_t k = 0; k < S; ++k) {
                    const Vec2 a = verts[k], b = verts[(k + 1) % S];
                    const double d = segment_distance(p, a, b);
                    if (d < best) {
                        best = d;
                        const double len2 = norm2(b - a);
                        const double t = len2 == 0.0
                            ? 0.0
                            : std::clamp(dot(p - a, b - a) / len2, 0.0, 1.0);
                        mass = (static_cast<double>(k) + t) /
                               static_cast<double>(S);
                    }
                }
                if (best > tol) return false;
                const double span_tol = tol + 1e-12;
                if (mass >= g.m0 - span_tol && mass <= g.m1 + span_tol) return true;
                // the curve is closed: mass 0 and mass 1 are the same point
                return (g.m0 <= span_tol && mass >= 1.0 - span_tol) ||
                       (g.m1 >= 1.0 - span_tol && mass <= span_tol);
            } else {
                return false; // CellZone is three-dimensional
            }
        },
        cell.geom);
}

bool cell_contains(const MeasureSpec& mu, const PartitionCell& cell, Vec3 p,
                   double tol) {
    const auto* zone = std::get_if<CellZone>(&cell.geom);
    if (zone == nullptr) return false;
    const double R = std::get<SphereSurfaceMeasure>(mu.variant).radius;
    if (std::abs(norm(p) - R) > tol * std::max(1.0, R)) return false;
    const double z = p.z / R;
    if (z < zone->z0 - tol || z > zone->z1 + tol) return false;
    if (std::abs(p.x) + std::abs(p.y) < 1e-300) return true; // at a pole
    return angle_in(std::atan2(p.y, p.x), zone->p0, zone->p1, tol);
}

PointSet partition_points(const MeasureSpec& mu, long long n,
                          std::uint64_t seed, bool jitter) {
    const EqualMeasurePartition part = build_partition(mu, n);
    PointSet ps;
    ps.dim = part.dim;
    ps.generator = "partition";
    ps.seed = seed;
    auto g = make_rng(seed, "partition-jitter");
    for (const PartitionCell& cell : part.cells) {
        if (!jitter) {
            if (part.dim == 3) ps.pts3.push_back(cell.rep3);
            else ps.pts2.push_back(cell.rep2);
            continue;
        }
        std::visit(
            [&](const auto& geom) {
                using T = std::decay_t<decltype(geom)>;
                if constexpr (std::is_same_v<T, CellBox>) {
                    ps.pts2.push_back({uniform(g, geom.lo.x, geom.hi.x),
                                       uniform(g, geom.lo.y, geom.hi.y)});
                } else if constexpr (std::is_same_v<T, CellPolar>) {
                    const double r = std::sqrt(
                        geom.r0 * geom.r0 +
                        uniform01(g) * (geom.r1 * geom.r1 - geom.r0 * geom.r0));
                    const double a = uniform(g, geom.a0, geom.a1);
                    ps.pts2.push_back({r * std::cos(a), r * std::sin(a)});
                } else if constexpr (std::is_same_v<T, CellRegionPiece>) {
                    // area-weighted piece, then a uniform point in its fan
                    double total = 0.0;
                    for (const auto& poly : geom.polys)
                        total += polygon_area_signed(poly);
                    double pick = uniform01(g) * total;
                    const std::vector<Vec2>* chosen = &geom.polys.back();
                    for (const auto& poly : geom.polys) {
                        pick -= polygon_area_signed(poly);
                        if (pick <= 0.0) { chosen = &poly; break; }
                    }
                    const auto& poly = *chosen;
                    std::vector<double> areas;
                    double fan = 0.0;
                    for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
                        const double a = 0.5 * cross(poly[i] - poly[0],
                                                     poly[i + 1] - poly[0]);
                        areas.push_back(a);
                        fan += a;
                    }
                    double t = uniform01(g) * fan;
                    std::size_t tri = 0;
                    while (tri + 1 < areas.size() && t > areas[tri])
                        t -= areas[tri++];
                    double u = uniform01(g), v = uniform01(g);
                    if (u + v > 1.0) { u = 1.0 - u; v = 1.0 - v; }
                    ps.pts2.push_back(poly[0] +
                                      u * (poly[tri + 1] - poly[0]) +
                                      v * (poly[tri + 2] - poly[0]));
                } else if constexpr (std::is_same_v<T, CellArc>) {
                    const double R =
                        std::get<CircleArcMeasure>(mu.variant).radius;
                    const double a = uniform(g, geom.a0, geom.a1);
                    ps.pts2.push_back({R * std::cos(a), R * std::sin(a)});
                } else if constexpr (std::is_same_v<T, CellMassRange>) {
                    const std::vector<Vec2>& verts = curve_verts_for(mu);
                    ps.pts2.push_back(
                        curve_point(verts, uniform(g, geom.m0, geom.m1)));
                } else if constexpr (std::is_same_v<T, CellZone>) {
                    const double R =
                        std::get<SphereSurfaceMeasure>(mu.variant).radius;
                    const double z = uniform(g, geom.z0, geom.z1);
                    const double a = uniform(g, geom.p0, geom.p1);
                    const double w = std::sqrt(std::max(0.0, 1.0 - z * z));
                    ps.pts3.push_back(
                        {R * w * std::cos(a), R * w * std::sin(a), R * z});
                }
            },
            cell.geom);
    }
    return ps;
}

PointSet iid_points(const MeasureSpec& mu, long long n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("iid_points: need n >= 1");
    PointSet ps = sample(mu, n, seed);
    ps.generator = "iid";
    return ps;
}

PointSet equispaced_circle(long long n) {
    if (n < 1) throw std::invalid_argument("equispaced_circle: need n >= 1");
    PointSet ps;
    ps.dim = 2;
    ps.generator = "equispaced-circle";
    const double R = 1.0 / (2.0 * M_PI);
    ps.pts2.reserve(static_cast<std::size_t>(n));
    for (long long j = 0; j < n; ++j) {
        const double a = 2.0 * M_PI * static_cast<double>(j) /
                         static_cast<double>(n);
        ps.pts2.push_back({R * std::cos(a), R * std::sin(a)});
    }
    return ps;
}

void write_pointset_csv(const PointSet& ps, const std::string& csv_path,
                        const nlohmann::json& extra_meta) {
    std::FILE* f = std::fopen(csv_path.c_str(), "wb");
    if (f == nullptr)
        throw std::runtime_error("write_pointset_csv: cannot open " + csv_path);
    char line[128];
    if (ps.dim == 3) {
        for (const Vec3& p : ps.pts3) {
            std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", p.x, p.y, p.z);
            std::fputs(line, f);
        }
    } else {
        for (const Vec2& p : ps.pts2) {
            std::snprintf(line, sizeof line, "%.17g,%.17g\n", p.x, p.y);
            std::fputs(line, f);
        }
    }
    std::fclose(f);
    nlohmann::json meta = extra_meta;
    meta["generator"] = ps.generator;
    meta["seed"] = ps.seed;
    meta["n"] = ps.size();
    meta["dim"] = ps.dim;
    std::ofstream out(csv_path + ".json", std::ios::binary);
    if (!out)
        throw std::runtime_error("write_pointset_csv: cannot open sidecar for " +
                                 csv_path);
    out << meta.dump(2) << "\n";
}

PointSet read_pointset_csv(const std::string& csv_path) {
    std::ifstream in(csv_path, std::ios::binary);
    if (!in)
        throw std::runtime_error("read_pointset_csv: cannot open " + csv_path);
    PointSet ps;
    ps.generator = "external";
    ps.dim = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double x = 0.0, y = 0.0, z = 0.0;
        const int got = std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &y, &z);
        if (got < 2)
            throw std::runtime_error("read_pointset_csv: bad row: " + line);
        if (ps.dim == 0) ps.dim = got;
        if (got != ps.dim)
            throw std::runtime_error("read_pointset_csv: mixed dimensions");
        if (ps.dim == 3) ps.pts3.push_back({x, y, z});
        else ps.pts2.push_back({x, y});
    }
    if (ps.dim == 0)
        throw std::runtime_error("read_pointset_csv: no points in " + csv_path);
    std::ifstream side(csv_path + ".json", std::ios::binary);
    if (side) {
        nlohmann::json meta;
        side >> meta;
        if (meta.contains("generator")) ps.generator = meta["generator"];
        if (meta.contains("seed")) ps.seed = meta["seed"];
    }
    return ps;
}

} // namespace lab

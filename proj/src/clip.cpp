#include "lab/clip.hpp"

#include <algorithm>
#include <cmath>

namespace lab {

namespace {

// Signed angle swept from u to v, in (-pi, pi].  A straight segment subtends
// strictly less than pi from any point off it, so this is unambiguous for
// the sector terms below.
double sweep_angle(Vec2 u, Vec2 v) { return std::atan2(cross(u, v), dot(u, v)); }

// Roots of |a + t d|^2 = r^2 as an ordered pair; returns false when the
// segment's line misses the circle (or touches tangentially).
bool segment_circle_roots(Vec2 a, Vec2 d, double r, double& t_lo, double& t_hi) {
    const double aa = dot(d, d);
    if (aa == 0.0) return false;
    const double bb = 2.0 * dot(a, d);
    const double cc = dot(a, a) - r * r;
    const double disc = bb * bb - 4.0 * aa * cc;
    if (disc <= 0.0) return false;
    const double q = -0.5 * (bb + std::copysign(std::sqrt(disc), bb));
    double r1 = q / aa;
    double r2 = (q != 0.0) ? cc / q : r1;
    if (r1 > r2) std::swap(r1, r2);
    t_lo = r1;
    t_hi = r2;
    return true;
}

} // namespace

ParamInterval clip_segment_ball(Vec2 a, Vec2 b, Vec2 center, double r) {
    const Vec2 rel = a - center;
    const Vec2 d = b - a;
    if (dot(d, d) == 0.0) {
        if (dot(rel, rel) <= r * r) return {0.0, 1.0};
        return {};
    }
    double t_lo, t_hi;
    if (!segment_circle_roots(rel, d, r, t_lo, t_hi)) {
        // Line misses the circle: the segment is inside only if the whole
        // line is, which cannot happen for a line missing the disk.
        return {};
    }
    const double lo = std::max(t_lo, 0.0);
    const double hi = std::min(t_hi, 1.0);
    if (lo >= hi) return {};
    return {lo, hi};
}

ParamInterval clip_segment_halfplane(Vec2 a, Vec2 b, Vec2 theta, double rho) {
    const double fa = dot(a, theta) - rho;
    const double fb = dot(b, theta) - rho;
    if (fa >= 0.0 && fb >= 0.0) return {0.0, 1.0};
    if (fa < 0.0 && fb < 0.0) return {};
    const double t = fa / (fa - fb);
    if (fa >= 0.0) return {0.0, t};
    return {t, 1.0};
}

ParamInterval clip_segment_convex(Vec2 a, Vec2 b, const std::vector<Vec2>& poly) {
    ParamInterval iv{0.0, 1.0};
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 p = poly[i];
        const Vec2 e = poly[(i + 1) % n] - p;
        const Vec2 theta = perp(e); // inward for ccw polygons
        const double rho = dot(theta, p);
        const double fa = dot(a, theta) - rho;
        const double fb = dot(b, theta) - rho;
        if (fa < 0.0 && fb < 0.0) return {};
        if (fa >= 0.0 && fb >= 0.0) continue;
        const double t = fa / (fa - fb);
        if (fa >= 0.0)
            iv.t1 = std::min(iv.t1, t);
        else
            iv.t0 = std::max(iv.t0, t);
        if (iv.empty()) return {};
    }
    return iv;
}

std::vector<Vec2> clip_polygon_halfplane(const std::vector<Vec2>& poly, Vec2 theta,
                                         double rho) {
    std::vector<Vec2> out;
    const std::size_t n = poly.size();
    if (n == 0) return out;
    out.reserve(n + 2);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 cur = poly[i];
        const Vec2 nxt = poly[(i + 1) % n];
        const double fc = dot(cur, theta) - rho;
        const double fn = dot(nxt, theta) - rho;
        if (fc >= 0.0) {
            out.push_back(cur);
            if (fn < 0.0) out.push_back(cur + (fc / (fc - fn)) * (nxt - cur));
        } else if (fn >= 0.0) {
            out.push_back(cur + (fc / (fc - fn)) * (nxt - cur));
        }
    }
    return out;
}

std::vector<Vec2> clip_polygon_convex(std::vector<Vec2> subject,
                                      const std::vector<Vec2>& clip) {
    const std::size_t n = clip.size();
    for (std::size_t i = 0; i < n && !subject.empty(); ++i) {
        const Vec2 p = clip[i];
        const Vec2 theta = perp(clip[(i + 1) % n] - p);
        subject = clip_polygon_halfplane(subject, theta, dot(theta, p));
    }
    return subject;
}

double polygon_area_signed(const std::vector<Vec2>& poly) {
    const std::size_t n = poly.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += cross(poly[i], poly[(i + 1) % n]);
    return 0.5 * acc;
}

double disk_polygon_area(Vec2 center, double r, const std::vector<Vec2>& poly) {
    // Green's theorem around the boundary of poly ∩ disk: chord pieces
    // contribute 0.5*cross, the circular excursions contribute sectors.
    const std::size_t n = poly.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = poly[i] - center;
        const Vec2 b = poly[(i + 1) % n] - center;
        const Vec2 d = b - a;
        double t_lo, t_hi;
        if (!segment_circle_roots(a, d, r, t_lo, t_hi)) {
            acc += 0.5 * r * r * sweep_angle(a, b);
            continue;
        }
        const double lo = std::max(t_lo, 0.0);
        const double hi = std::min(t_hi, 1.0);
        if (lo >= hi) {
            acc += 0.5 * r * r * sweep_angle(a, b);
            continue;
        }
        const Vec2 p = a + lo * d;
        const Vec2 q = a + hi * d;
        if (lo > 0.0) acc += 0.5 * r * r * sweep_angle(a, p);
        acc += 0.5 * cross(p, q);
        if (hi < 1.0) acc += 0.5 * r * r * sweep_angle(q, b);
    }
    return acc;
}

double disk_halfplane_area(Vec2 center, double r, Vec2 theta, double rho) {
    const double d = rho - dot(center, theta); // signed distance, boundary at d=0
    if (d <= -r) return M_PI * r * r;
    if (d >= r) return 0.0;
    return r * r * std::acos(d / r) - d * std::sqrt(r * r - d * d);
}

double disk_disk_area(Vec2 c1, double r1, Vec2 c2, double r2) {
    const double dist = norm(c2 - c1);
    if (dist >= r1 + r2) return 0.0;
    if (dist <= std::abs(r1 - r2)) {
        const double rm = std::min(r1, r2);
        return M_PI * rm * rm;
    }
    const double d1 = (dist * dist + r1 * r1 - r2 * r2) / (2.0 * dist);
    const double d2 = dist - d1;
    const double seg1 = r1 * r1 * std::acos(std::clamp(d1 / r1, -1.0, 1.0)) -
                        d1 * std::sqrt(std::max(r1 * r1 - d1 * d1, 0.0));
    const double seg2 = r2 * r2 * std::acos(std::clamp(d2 / r2, -1.0, 1.0)) -
                        d2 * std::sqrt(std::max(r2 * r2 - d2 * d2, 0.0));
    return seg1 + seg2;
}

} // namespace lab

#ifndef LAB_CLIP_HPP
#define LAB_CLIP_HPP

// Exact planar intersection kernels: segment-vs-region parameter intervals,
// polygon clipping, and closed-form disk intersection areas.  These are the
// building blocks for the exact measure-evaluation paths.

#include <vector>

#include "lab/vec.hpp"

namespace lab {

// Parameter sub-interval of a segment a + t(b-a), t in [0,1].  Empty when
// t1 < t0 (the default).
struct ParamInterval {
    double t0 = 0.0, t1 = -1.0;
    bool empty() const { return !(t1 >= t0); }
    double length() const { return empty() ? 0.0 : t1 - t0; }
};

// Portion of the segment inside the closed disk B(center, r).
ParamInterval clip_segment_ball(Vec2 a, Vec2 b, Vec2 center, double r);

// Portion of the segment inside the half-plane {x : dot(x, theta) >= rho}.
ParamInterval clip_segment_halfplane(Vec2 a, Vec2 b, Vec2 theta, double rho);

// Portion of the segment inside a ccw convex polygon.
ParamInterval clip_segment_convex(Vec2 a, Vec2 b, const std::vector<Vec2>& poly);

// Sutherland-Hodgman: polygon cut by one half-plane (keeps dot >= rho).
// Preserves orientation; the result may contain collinear vertices.
std::vector<Vec2> clip_polygon_halfplane(const std::vector<Vec2>& poly, Vec2 theta,
                                         double rho);

// Subject polygon clipped against a ccw convex polygon.
std::vector<Vec2> clip_polygon_convex(std::vector<Vec2> subject,
                                      const std::vector<Vec2>& clip);

// Shoelace signed area (positive for ccw).
double polygon_area_signed(const std::vector<Vec2>& poly);

// Exact area of (ccw polygon) intersected with the closed disk B(center, r):
// per-edge Green's theorem with circular-sector terms for the excursions
// outside the disk.  Every straight edge subtends less than pi as seen from
// the center, so the atan2-based sector angles are unambiguous.
double disk_polygon_area(Vec2 center, double r, const std::vector<Vec2>& poly);

// Exact area of B(center, r) inside the half-plane {x : dot(x, theta) >= rho}
// (a circular segment).
double disk_halfplane_area(Vec2 center, double r, Vec2 theta, double rho);

// Exact lens area of two disks.
double disk_disk_area(Vec2 c1, double r1, Vec2 c2, double r2);

} // namespace lab

#endif

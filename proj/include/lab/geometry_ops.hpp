#ifndef LAB_GEOMETRY_OPS_HPP
#define LAB_GEOMETRY_OPS_HPP

// Sampled set operations on shapes: translation symmetric differences,
// Minkowski shells around the boundary, and the log-log fit that extracts the
// symmetric-difference exponent beta together with its envelope constants.
//
// All estimators use a jittered-grid (stratified) sampler whose jitter is a
// pure function of (seed, cell index), so results are bit-identical across
// runs and thread counts.

#include <cstdint>
#include <vector>

#include "lab/shape.hpp"

namespace lab {

struct Box2 {
    Vec2 lo, hi;
    double area() const { return (hi.x - lo.x) * (hi.y - lo.y); }
    Box2 inflated(double pad) const {
        return {{lo.x - pad, lo.y - pad}, {hi.x + pad, hi.y + pad}};
    }
};

// Tight axis-aligned box of a bounded shape.  Throws for half-spaces.
Box2 bounding_box(const Shape& s);

// Exact Euclidean distance from p to the boundary of the shape (for the
// curve variant, to the curve itself).
double boundary_distance(const Shape& s, Vec2 p);

struct VolumeEstimate {
    double value = 0.0;
    double se = 0.0;       // conservative standard error (iid formula)
    long long samples = 0; // points actually evaluated (grid-rounded)
};

// |(h+S) symdiff S| by stratified sampling over the joint bounding box, with
// the +h/-h indicator pair sharing one membership test per point.
VolumeEstimate symmetric_difference_volume(const Shape& s, Vec2 h, long long samples,
                                           std::uint64_t seed);

// |{z : dist(z, boundary of S) <= t}| by stratified sampling with exact
// boundary distances.  Requires 0 < t < 1.
VolumeEstimate minkowski_shell_volume(const Shape& s, double t, long long samples,
                                      std::uint64_t seed);

struct BetaFit {
    double beta_hat = 0.0;   // least-squares slope of log volume vs log t
    double kappa1_hat = 0.0; // max of value / t^beta_hat (upper envelope)
    double kappa2_hat = 0.0; // min of value / t^beta_hat (lower envelope)
    std::vector<double> t;
    std::vector<VolumeEstimate> estimates;
};

// Fit |(t*dir + S) symdiff S| ~ kappa * t^beta over a decreasing sequence of
// scales (at least 4, each estimated with `samples` points).
BetaFit fit_beta(const Shape& s, Vec2 direction, const std::vector<double>& t_sequence,
                 long long samples, std::uint64_t seed);

} // namespace lab

#endif

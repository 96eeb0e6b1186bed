#ifndef LAB_MEASURE_HPP
#define LAB_MEASURE_HPP

// Normalized measures with controlled ball growth: mu(B(x,r)) <= c r^alpha.
// A measure stays fixed in reference position; queries arrive as posed
// shapes.  Evaluation prefers exact geometric paths (segment clipping,
// circular caps, polygon clipping) and falls back to an empirical atom
// cloud with a reported M^{-1/2}-scale error bound when no exact route is
// known for the pair.

#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

#include "lab/pointset.hpp"
#include "lab/shape.hpp"
#include "lab/vec.hpp"

#include "json.hpp"

namespace lab {

// ---------------------------------------------------------------------------
// measure variants

// Normalized Lebesgue measure on a bounded reference shape of positive area.
struct LebesgueOnShape {
    Shape support;
};

// Arclength measure on the level-n snowflake boundary: each of the 3*4^n
// segments carries mass (3*4^n)^{-1}, uniformly spread.
struct KochCurveMeasure {
    int level = 8;
};

// Normalized arclength on the origin-centered circle of the given radius.
struct CircleArcMeasure {
    double radius = 1.0;
};

// Normalized surface measure on the origin-centered sphere (dimension 3).
struct SphereSurfaceMeasure {
    double radius = 1.0;
};

// Image of a planar base measure under a bi-Lipschitz map.  The map first
// applies an optional radial modulation r -> r (1 + amplitude cos(k phi))
// and then an affine pose; `lower_lipschitz` is the caller-supplied C1 with
// C1 dist(y1,y2) <= |Phi(y1) - Phi(y2)|.
struct MeasureSpec; // forward declaration for the recursive variant

struct PushforwardMap {
    AffinePose affine;             // rigid motion + dilation applied last
    double radial_amplitude = 0.0; // 0 disables the modulation
    int radial_harmonic = 0;
    double lower_lipschitz = 1.0;
};

struct Pushforward {
    std::shared_ptr<const MeasureSpec> base;
    PushforwardMap map;
};

using MeasureVariant = std::variant<LebesgueOnShape, KochCurveMeasure,
                                    CircleArcMeasure, SphereSurfaceMeasure,
                                    Pushforward>;

struct MeasureSpec {
    MeasureVariant variant;
    double alpha = 2.0;            // growth exponent, in (0, dim]
    double growth_constant = 1.0;  // advisory envelope; verify_growth fits it
    double support_radius = 1.0;   // support contained in B(0, support_radius)
    double fourier_cutoff = 4096.0; // largest |xi| served by fourier_coefficient
};

// Factory helpers filling in alpha / support radius / advisory constant.
MeasureSpec lebesgue_on(Shape support);
MeasureSpec koch_curve_measure(int level = 8);
MeasureSpec circle_arc_measure(double radius = 1.0);
MeasureSpec sphere_surface_measure(double radius = 1.0);
MeasureSpec pushforward_measure(MeasureSpec base, PushforwardMap map);

// Throws std::invalid_argument on broken invariants (alpha outside (0,dim],
// unbounded or zero-area Lebesgue support, nonpositive radii, support
// escaping B(0, support_radius), ...).
void validate(const MeasureSpec& mu);

// Ambient dimension: 3 for the sphere surface, otherwise 2 (pushforwards
// inherit their base's dimension).
int measure_dim(const MeasureSpec& mu);

// ---------------------------------------------------------------------------
// evaluation

struct MeasureValue {
    double value = 0.0;
    double error = 0.0; // bound on |value - mu(shape)|; 0 on exact paths
    bool exact = true;
};

struct EvalOptions {
    long long empirical_atoms = 200000; // fallback cloud size
    std::uint64_t seed = 1;             // fallback cloud stream
};

// mu(x + tau sigma(shape)).  Exact pairs: koch curve vs ball / half-space /
// convex polygon (pruned segment clipping), circle and sphere vs ball /
// half-space (cap formulas), Lebesgue supports vs ball / half-space / convex
// polygon (disk and polygon clipping).  Every other pair goes through an
// iid empirical cloud; pairs with mismatched dimension throw.
MeasureValue evaluate(const MeasureSpec& mu, const Shape& shape,
                      const AffinePose& pose, const EvalOptions& opt = {});

// Half-space {x : dot(x, theta) >= rho} in the measure's own dimension.
MeasureValue evaluate_halfspace(const MeasureSpec& mu, Vec2 theta, double rho,
                                const EvalOptions& opt = {});
MeasureValue evaluate_halfspace3(const MeasureSpec& mu, Vec3 theta, double rho);

// ---------------------------------------------------------------------------
// sampling

// n iid draws from mu.  Lebesgue supports use bounding-box rejection and
// throw when the acceptance rate degenerates below 1e-3; curves and
// surfaces sample their parameterizations directly.
PointSet sample(const MeasureSpec& mu, long long n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// fourier transform  mu_hat(xi) = integral of exp(-2 pi i xi . x) d mu(x)

struct FourierValue {
    std::complex<double> value;
    double error = 0.0; // bound on |value - mu_hat(xi)|
    bool exact = true;
};

// Exact paths: koch curve (per-segment closed form), circle (bessel J0),
// sphere (spherical sinc), Lebesgue on balls (bessel J1) and on the koch
// region / rectangle union (per-piece closed forms).  Lebesgue on a convex
// polygon integrates with adaptive tensor Gauss-Legendre over a fan
// triangulation and reports the quadrature error.  Pushforwards average the
// phase over an empirical cloud.  |xi| beyond fourier_cutoff throws.
FourierValue fourier_coefficient(const MeasureSpec& mu, Vec2 xi);
FourierValue fourier_coefficient3(const MeasureSpec& mu, Vec3 xi);

// Exact unit-mass fourier transform of uniform area measure on a ccw
// polygon (boundary closed form).  Exposed for cross-checks against the
// quadrature route and reused by the spectral layer.
std::complex<double> polygon_fourier(const std::vector<Vec2>& vertices, Vec2 xi);

// ---------------------------------------------------------------------------
// growth verification

struct GrowthOptions {
    double r_min = 1e-3;
    double r_max = 0.0; // 0 = diameter of the support
};

struct GrowthReport {
    double c_hat = 0.0;       // max of mu(B(x,r)) / r^alpha over the probes
    Vec3 worst_center;        // z = 0 for planar measures
    double worst_radius = 0.0;
};

// Probes balls centered at mu-samples and at perturbations of them, with
// radii log-uniform in [r_min, r_max], and reports the largest growth ratio
// for mu.alpha together with the ball attaining it.
GrowthReport verify_growth(const MeasureSpec& mu, long long trials,
                           std::uint64_t seed, const GrowthOptions& opt = {});

// ---------------------------------------------------------------------------
// empirical clouds

// Equal-weight atom cloud standing in for mu.  Downstream estimators that
// compare counts of N points against cloud fractions should keep
// size >= 10 N^2 so the cloud noise stays below the count resolution.
struct EmpiricalMeasure {
    int dim = 2;
    std::vector<Vec2> atoms2;
    std::vector<Vec3> atoms3;
    std::uint64_t source_seed = 0;

    long long size() const {
        return dim == 3 ? static_cast<long long>(atoms3.size())
                        : static_cast<long long>(atoms2.size());
    }
};

// iid cloud from mu.
EmpiricalMeasure empirical_iid(const MeasureSpec& mu, long long m,
                               std::uint64_t seed);

// Jittered-grid cloud for planar Lebesgue measures: one candidate per grid
// cell over the support's bounding box, kept when it lands in the support.
// Interior cells contribute deterministically, so fraction estimates carry
// boundary-scale noise instead of the full M^{-1/2} binomial noise.
EmpiricalMeasure empirical_stratified(const MeasureSpec& mu, long long m,
                                      std::uint64_t seed);

// Fraction of atoms inside the posed shape (the cloud's estimate of mu).
double empirical_fraction(const EmpiricalMeasure& em, const Shape& shape,
                          const AffinePose& pose);

// ---------------------------------------------------------------------------
// serialization

nlohmann::json measure_to_json(const MeasureSpec& mu);
MeasureSpec measure_from_json(const nlohmann::json& j);

} // namespace lab

#endif

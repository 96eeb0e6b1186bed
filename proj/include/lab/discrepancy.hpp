#ifndef LAB_DISCREPANCY_HPP
#define LAB_DISCREPANCY_HPP

// The discrepancy functional D_N(R) = card(P_N cap R) - N mu(R) and its
// L2 averages over two test families: affine copies x + tau sigma(Omega)
// with x ranging over a translation box, and half-spaces
// {x : dot(x, Theta) >= rho}.  Pose averages use a shift-scrambled Halton
// sequence; error bars come from the spread of the shift-block means.
// A heuristic witness search reports large-|D_N| poses (a lower bound on
// the sup), and a convergence table documents how ball discrepancies with
// growing radius reproduce the half-space value.

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "lab/measure.hpp"
#include "lab/pointset.hpp"
#include "lab/shape.hpp"
#include "lab/vec.hpp"

namespace lab {

// ---------------------------------------------------------------------------
// test families

// Affine copies x + tau sigma(shape): x uniform over the box, tau uniform
// over [a, b], sigma uniform over rotations.  The box must contain every
// translation with nonzero discrepancy, i.e. the ball of radius
// support_radius(mu) + b * bounding_radius(shape).
struct AffineFamily {
    Shape shape;
    double a = 0.25;
    double b = 1.0;
    Vec2 box_lo{-2.0, -2.0};
    Vec2 box_hi{2.0, 2.0};
};

// Half-spaces {x : dot(x, Theta) >= rho}, rho uniform over [0, rho_max],
// Theta uniform over the unit sphere of the ambient dimension.  rho_max must
// equal the support radius of mu; together with all points lying in
// B(0, rho_max) this makes the integrand vanish for rho > rho_max.
struct HalfSpaceFamily {
    double rho_max = 1.0;
};

using FamilySpec = std::variant<AffineFamily, HalfSpaceFamily>;

// throws invalid_argument when the family invariants fail against mu
void validate_family(const AffineFamily& fam, const MeasureSpec& mu);
void validate_family(const HalfSpaceFamily& fam, const MeasureSpec& mu);

// ---------------------------------------------------------------------------
// pointwise discrepancy

long long count_inside(const PointSet& ps, const Shape& shape, const AffinePose& pose);
long long count_halfspace(const PointSet& ps, Vec2 theta, double rho);
long long count_halfspace3(const PointSet& ps, Vec3 theta, double rho);

// card(P_N cap (x + tau sigma(shape))) - N mu(x + tau sigma(shape))
double discrepancy_at(const PointSet& ps, const MeasureSpec& mu, const Shape& shape,
                      const AffinePose& pose, const EvalOptions& opt = {});
double discrepancy_halfspace(const PointSet& ps, const MeasureSpec& mu, Vec2 theta,
                             double rho, const EvalOptions& opt = {});
double discrepancy_halfspace3(const PointSet& ps, const MeasureSpec& mu, Vec3 theta,
                              double rho);

// ---------------------------------------------------------------------------
// L2 averages

struct L2Options {
    long long n_poses = 4096; // rounded up to a multiple of the 8 shift blocks
    std::uint64_t seed = 0;
};

struct L2Estimate {
    double value = 0.0;     // sqrt of the averaged squared discrepancy
    double std_error = 0.0; // one-sigma error of `value` from the block spread
    long long n_poses = 0;  // poses actually evaluated
    std::uint64_t seed = 0;
};

// sqrt of |box| * (b - a) * E[ D_N(x + tau sigma(Omega))^2 ] with the
// rotation average normalized to mass 1.  Bit-reproducible for fixed
// (inputs, seed) regardless of worker count: pose evaluations fill a slot
// array and the reduction runs in pose index order.  Throws when n_poses
// < 1000, when the point set is empty, when mu is not planar, or when a
// probe finds nonzero discrepancy on the box boundary (box too small).
L2Estimate l2_affine(const PointSet& ps, const MeasureSpec& mu, const AffineFamily& fam,
                     const L2Options& mc, const EvalOptions& opt = {});

// l2_affine for several point sets against one measure, evaluating the
// measure term of each pose once and recounting only the points.  Entry k
// is bit-identical to l2_affine(sets[k], ...) with the same options; the
// shared pass just avoids re-deriving mu(x + tau sigma(Omega)) when the
// measure has no exact evaluation route (empirical clouds especially).
std::vector<L2Estimate> l2_affine_sweep(const std::vector<PointSet>& sets,
                                        const MeasureSpec& mu, const AffineFamily& fam,
                                        const L2Options& mc, const EvalOptions& opt = {});

// sqrt of rho_max * E[ D_N(Pi(rho, Theta))^2 ] over rho uniform in
// [0, rho_max] and Theta uniform on the sphere.  Throws when a point lies
// outside B(0, rho_max) or the support leaks past it.
L2Estimate l2_halfspace(const PointSet& ps, const MeasureSpec& mu,
                        const HalfSpaceFamily& fam, const L2Options& mc,
                        const EvalOptions& opt = {});

// ---------------------------------------------------------------------------
// witness search: random scan plus coordinate-wise golden-section refinement

struct HalfSpacePose {
    int dim = 2;
    Vec3 theta{1.0, 0.0, 0.0}; // z ignored when dim == 2
    double rho = 0.0;
};

struct WitnessResult {
    std::variant<AffinePose, HalfSpacePose> where;
    double value = 0.0; // |D_N| at the reported pose: a lower bound on the sup
    long long evals_used = 0;
};

// Spends `budget` discrepancy evaluations (>= 1000) hunting for large |D_N|.
// The schedule (random scan blocks alternating with golden-section polish
// sweeps) never looks at the remaining budget, so a larger budget evaluates a
// superset of the same poses and the reported value cannot decrease.
WitnessResult witness_search(const PointSet& ps, const MeasureSpec& mu,
                             const FamilySpec& fam, long long budget,
                             std::uint64_t seed = 0, const EvalOptions& opt = {});

// ---------------------------------------------------------------------------
// ball-to-half-space limit

// One row per radius R: the discrepancy of the ball B((rho + R) Theta, R)
// tangent to the half-space boundary from inside, against the half-space
// discrepancy itself.
struct BallLimitRow {
    double radius = 0.0;
    long long ball_count = 0;
    long long half_count = 0;
    double ball_disc = 0.0;
    double half_disc = 0.0;
    double measure_gap = 0.0; // |mu(ball) - mu(halfspace)|
    double disc_gap = 0.0;    // |ball_disc - half_disc|
};

struct BallLimitTable {
    std::vector<BallLimitRow> rows;
    // smallest listed radius from which every larger one matches the
    // half-space count exactly; +inf when the counts never settle
    double threshold_radius = 0.0;
};

// radii must be strictly increasing with min > support_radius(mu).
BallLimitTable ball_to_halfspace_limit(const PointSet& ps, const MeasureSpec& mu,
                                       Vec2 theta, double rho,
                                       const std::vector<double>& radii,
                                       const EvalOptions& opt = {});

// ---------------------------------------------------------------------------
// run records

nlohmann::json l2_record(const std::string& family, long long n_points,
                         const L2Estimate& est);

// appends one line per record to a CSV run-log, writing the header on first
// touch; columns family,n,value,stderr,n_poses,seed
void append_run_log(const std::string& csv_path, const nlohmann::json& record);

} // namespace lab

#endif

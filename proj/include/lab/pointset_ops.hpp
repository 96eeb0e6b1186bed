#ifndef LAB_POINTSET_OPS_HPP
#define LAB_POINTSET_OPS_HPP

// Point-distribution generators: iid baselines, equal-measure partitions with
// one representative per cell, and the equispaced circle configuration.
//
// Partitions are supported for lebesgue measures on axis-aligned rectangles,
// disks, and koch regions, plus the koch curve, circle, and sphere-surface
// measures.  Every cell receives measure 1/N (exactly where the construction
// is arithmetic, to 1e-9 where a cut position is solved numerically) and a
// diameter O(N^{-1/alpha}); the realized constant is reported, not assumed.

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "lab/measure.hpp"
#include "lab/pointset.hpp"
#include "lab/vec.hpp"

namespace lab {

// Cell geometries, one per supported support.  Curves store intrinsic
// coordinates (mass or angle ranges); surfaces store z/longitude boxes.
struct CellBox {
    Vec2 lo, hi;
};
struct CellPolar {
    double r0 = 0, r1 = 0; // radial range
    double a0 = 0, a1 = 0; // angular range; a1 - a0 == 2*pi means a full ring
};
struct CellRegionPiece {
    std::vector<std::vector<Vec2>> polys; // convex pieces covering the cell
    Vec2 lo, hi;                          // bounding window of the pieces
};
struct CellArc {
    double a0 = 0, a1 = 0;
};
struct CellMassRange {
    double m0 = 0, m1 = 0; // normalized arclength range along the curve
};
struct CellZone {
    double z0 = 0, z1 = 0; // height range (unit-sphere coordinates)
    double p0 = 0, p1 = 0; // longitude range; p1 - p0 == 2*pi means a cap
};
using CellGeom = std::variant<CellBox, CellPolar, CellRegionPiece, CellArc,
                              CellMassRange, CellZone>;

struct PartitionCell {
    CellGeom geom;
    double measure = 0;  // mu(cell)
    double diameter = 0; // geometric diameter (upper bound for region pieces)
    Vec2 rep2{};         // representative, planar measures
    Vec3 rep3{};         // representative, sphere
};

struct EqualMeasurePartition {
    int dim = 2;
    double alpha_geom = 2.0;  // exponent used in the diameter normalization
    std::vector<PartitionCell> cells;
    double max_diameter = 0;
    double diameter_constant = 0; // max_diameter * N^{1/alpha_geom}
};

// Splits the support of mu into n cells of measure 1/n each.  Throws
// std::invalid_argument for unsupported measures (naming the supported list)
// and for n < 1.
EqualMeasurePartition build_partition(const MeasureSpec& mu, long long n);

// True when p belongs to the cell (closed, with tolerance tol on the
// boundary).  Curve cells are tested in their intrinsic coordinates, so p
// must lie on the curve to begin with.
bool cell_contains(const MeasureSpec& mu, const PartitionCell& cell, Vec2 p,
                   double tol = 1e-9);
bool cell_contains(const MeasureSpec& mu, const PartitionCell& cell, Vec3 p,
                   double tol = 1e-9);

// One point per partition cell.  Default representatives are deterministic
// cell centroids (seed recorded for provenance only); with jitter = true the
// representative is drawn uniformly from its cell instead.
PointSet partition_points(const MeasureSpec& mu, long long n,
                          std::uint64_t seed, bool jitter = false);

// iid draws from mu, tagged with provenance.
PointSet iid_points(const MeasureSpec& mu, long long n, std::uint64_t seed);

// n points at arclength j/n along the circle of circumference 1 (radius
// 1/(2*pi), centered at the origin).
PointSet equispaced_circle(long long n);

// CSV persistence: one point per row ("x,y" or "x,y,z", printf %.17g so a
// round trip is bit-exact), with a JSON metadata sidecar at csv_path +
// ".json" carrying generator, seed, n, dim, and any extra fields supplied.
void write_pointset_csv(const PointSet& ps, const std::string& csv_path,
                        const nlohmann::json& extra_meta = nlohmann::json::object());
PointSet read_pointset_csv(const std::string& csv_path);

} // namespace lab

#endif

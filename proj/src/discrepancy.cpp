#include "lab/discrepancy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "lab/parallel.hpp"
#include "lab/rng.hpp"

namespace lab {

namespace {

double shifted(double u, double shift) {
    const double v = u + shift;
    return v - std::floor(v);
}

constexpr int kBlocks = 8;

struct BlockStats {
    double mean = 0.0;      // grand mean of the block means
    double se_mean = 0.0;   // sd(block means)/sqrt(kBlocks)
};

// fixed reduction order: pose index order within each block, block order last
BlockStats reduce_blocks(const std::vector<double>& f, long long per_block) {
    double bm[kBlocks];
    for (int k = 0; k < kBlocks; ++k) {
        double acc = 0.0;
        for (long long i = 0; i < per_block; ++i)
            acc += f[static_cast<std::size_t>(k * per_block + i)];
        bm[k] = acc / static_cast<double>(per_block);
    }
    BlockStats st;
    for (double m : bm) st.mean += m;
    st.mean /= kBlocks;
    double ss = 0.0;
    for (double m : bm) ss += (m - st.mean) * (m - st.mean);
    st.se_mean = std::sqrt(ss / (kBlocks - 1)) / std::sqrt(static_cast<double>(kBlocks));
    return st;
}

// value = sqrt(scale * mean); one-sigma error via the delta method
L2Estimate finish_estimate(const BlockStats& st, double scale, long long n_poses,
                           std::uint64_t seed) {
    L2Estimate est;
    est.n_poses = n_poses;
    est.seed = seed;
    est.value = std::sqrt(std::max(0.0, scale * st.mean));
    est.std_error = est.value > 0.0 ? scale * st.se_mean / (2.0 * est.value)
                                    : std::sqrt(scale * st.se_mean);
    return est;
}

double support_radius_of(const MeasureSpec& mu) { return mu.support_radius; }

} // namespace

// ---------------------------------------------------------------------------
// families

void validate_family(const AffineFamily& fam, const MeasureSpec& mu) {
    if (!(fam.a > 0.0) || !(fam.b > fam.a))
        throw std::invalid_argument("AffineFamily: need 0 < a < b");
    if (measure_dim(mu) != 2)
        throw std::invalid_argument("AffineFamily: affine pose averages are planar; "
                                    "the sphere surface is served by half-space families");
    const double reach = support_radius_of(mu) + fam.b * bounding_radius(fam.shape);
    if (fam.box_lo.x > -reach || fam.box_lo.y > -reach || fam.box_hi.x < reach ||
        fam.box_hi.y < reach)
        throw std::invalid_argument(
            "AffineFamily: translation box must contain the ball of radius "
            "support_radius(mu) + b * bounding_radius(shape)");
}

void validate_family(const HalfSpaceFamily& fam, const MeasureSpec& mu) {
    if (!(fam.rho_max > 0.0))
        throw std::invalid_argument("HalfSpaceFamily: rho_max must be positive");
    if (std::fabs(fam.rho_max - support_radius_of(mu)) > 1e-9 * fam.rho_max)
        throw std::invalid_argument(
            "HalfSpaceFamily: rho_max must equal the support radius of mu");
}

// ---------------------------------------------------------------------------
// pointwise discrepancy

long long count_inside(const PointSet& ps, const Shape& shape, const AffinePose& pose) {
    long long c = 0;
    if (ps.dim == 3) {
        for (const Vec3& p : ps.pts3) c += contains(shape, pose, p) ? 1 : 0;
    } else {
        for (const Vec2& p : ps.pts2) c += contains(shape, pose, p) ? 1 : 0;
    }
    return c;
}

long long count_halfspace(const PointSet& ps, Vec2 theta, double rho) {
    if (ps.dim != 2)
        throw std::invalid_argument("count_halfspace: planar points required");
    long long c = 0;
    for (const Vec2& p : ps.pts2) c += dot(p, theta) >= rho ? 1 : 0;
    return c;
}

long long count_halfspace3(const PointSet& ps, Vec3 theta, double rho) {
    if (ps.dim != 3)
        throw std::invalid_argument("count_halfspace3: spatial points required");
    long long c = 0;
    for (const Vec3& p : ps.pts3) c += dot(p, theta) >= rho ? 1 : 0;
    return c;
}

double discrepancy_at(const PointSet& ps, const MeasureSpec& mu, const Shape& shape,
                      const AffinePose& pose, const EvalOptions& opt) {
    const double m = evaluate(mu, shape, pose, opt).value;
    return static_cast<double>(count_inside(ps, shape, pose)) -
           static_cast<double>(ps.size()) * m;
}

double discrepancy_halfspace(const PointSet& ps, const MeasureSpec& mu, Vec2 theta,
                             double rho, const EvalOptions& opt) {
    const double m = evaluate_halfspace(mu, theta, rho, opt).value;
    return static_cast<double>(count_halfspace(ps, theta, rho)) -
           static_cast<double>(ps.size()) * m;
}

double discrepancy_halfspace3(const PointSet& ps, const MeasureSpec& mu, Vec3 theta,
                              double rho) {
    const double m = evaluate_halfspace3(mu, theta, rho).value;
    return static_cast<double>(count_halfspace3(ps, theta, rho)) -
           static_cast<double>(ps.size()) * m;
}

// ---------------------------------------------------------------------------
// affine L2

namespace {

struct AffinePoseSample {
    Vec2 x;
    double tau;
    double angle;
};

// pose for index i of block k under the Cranley-Patterson shifts
AffinePoseSample affine_pose_sample(const AffineFamily& fam, long long i,
                                    const double shift[4]) {
    const std::uint64_t idx = static_cast<std::uint64_t>(i) + 1; // skip the origin
    const double u0 = shifted(radical_inverse(idx, 2), shift[0]);
    const double u1 = shifted(radical_inverse(idx, 3), shift[1]);
    const double u2 = shifted(radical_inverse(idx, 5), shift[2]);
    const double u3 = shifted(radical_inverse(idx, 7), shift[3]);
    AffinePoseSample s;
    s.x = {fam.box_lo.x + (fam.box_hi.x - fam.box_lo.x) * u0,
           fam.box_lo.y + (fam.box_hi.y - fam.box_lo.y) * u1};
    s.tau = fam.a + (fam.b - fam.a) * u2;
    s.angle = 2.0 * M_PI * u3;
    return s;
}

void probe_box_boundary(const PointSet& ps, const MeasureSpec& mu,
                        const AffineFamily& fam, const EvalOptions& opt) {
    // walk the box perimeter with the largest copy: any mass or point caught
    // there means translations outside the box still see nonzero discrepancy
    const int per_side = 16;
    const Vec2 ext = fam.box_hi - fam.box_lo;
    for (int side = 0; side < 4; ++side) {
        for (int j = 0; j < per_side; ++j) {
            const double t = (j + 0.5) / per_side;
            Vec2 x;
            switch (side) {
            case 0: x = {fam.box_lo.x + ext.x * t, fam.box_lo.y}; break;
            case 1: x = {fam.box_lo.x + ext.x * t, fam.box_hi.y}; break;
            case 2: x = {fam.box_lo.x, fam.box_lo.y + ext.y * t}; break;
            default: x = {fam.box_hi.x, fam.box_lo.y + ext.y * t}; break;
            }
            const AffinePose pose = AffinePose::plane(x, fam.b, 2.0 * M_PI * t);
            if (std::fabs(discrepancy_at(ps, mu, fam.shape, pose, opt)) >
                1e-9 * static_cast<double>(ps.size()))
                throw std::invalid_argument(
                    "l2_affine: nonzero discrepancy on the translation box "
                    "boundary; enlarge the box");
        }
    }
}

} // namespace

std::vector<L2Estimate> l2_affine_sweep(const std::vector<PointSet>& sets,
                                        const MeasureSpec& mu, const AffineFamily& fam,
                                        const L2Options& mc, const EvalOptions& opt) {
    if (mc.n_poses < 1000)
        throw std::invalid_argument("l2_affine: need at least 1000 poses");
    validate_family(fam, mu);
    for (const PointSet& ps : sets) {
        if (ps.size() == 0)
            throw std::invalid_argument("l2_affine: empty point set");
        if (ps.dim != 2)
            throw std::invalid_argument("l2_affine: planar points required");
        probe_box_boundary(ps, mu, fam, opt);
    }

    const long long per_block = (mc.n_poses + kBlocks - 1) / kBlocks;
    const long long total = per_block * kBlocks;
    double shifts[kBlocks][4];
    {
        auto g = make_rng(mc.seed, "l2-affine-shifts");
        for (auto& block : shifts)
            for (double& s : block) s = uniform01(g);
    }

    // measure term once per pose, then one count pass per point set
    std::vector<double> mval(static_cast<std::size_t>(total));
    parallel_for(static_cast<std::size_t>(total), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t t = lo; t < hi; ++t) {
            const long long k = static_cast<long long>(t) / per_block;
            const long long i = static_cast<long long>(t) % per_block;
            const AffinePoseSample s = affine_pose_sample(fam, i, shifts[k]);
            const AffinePose pose = AffinePose::plane(s.x, s.tau, s.angle);
            mval[t] = evaluate(mu, fam.shape, pose, opt).value;
        }
    });

    const double scale = (fam.box_hi.x - fam.box_lo.x) * (fam.box_hi.y - fam.box_lo.y) *
                         (fam.b - fam.a);
    std::vector<L2Estimate> out;
    out.reserve(sets.size());
    std::vector<double> f(static_cast<std::size_t>(total));
    for (const PointSet& ps : sets) {
        parallel_for(static_cast<std::size_t>(total), [&](std::size_t lo, std::size_t hi) {
            for (std::size_t t = lo; t < hi; ++t) {
                const long long k = static_cast<long long>(t) / per_block;
                const long long i = static_cast<long long>(t) % per_block;
                const AffinePoseSample s = affine_pose_sample(fam, i, shifts[k]);
                const AffinePose pose = AffinePose::plane(s.x, s.tau, s.angle);
                const double d = static_cast<double>(count_inside(ps, fam.shape, pose)) -
                                 static_cast<double>(ps.size()) * mval[t];
                f[t] = d * d;
            }
        });
        out.push_back(finish_estimate(reduce_blocks(f, per_block), scale, total, mc.seed));
    }
    return out;
}

L2Estimate l2_affine(const PointSet& ps, const MeasureSpec& mu, const AffineFamily& fam,
                     const L2Options& mc, const EvalOptions& opt) {
    return l2_affine_sweep({ps}, mu, fam, mc, opt)[0];
}

// ---------------------------------------------------------------------------
// half-space L2

L2Estimate l2_halfspace(const PointSet& ps, const MeasureSpec& mu,
                        const HalfSpaceFamily& fam, const L2Options& mc,
                        const EvalOptions& opt) {
    if (mc.n_poses < 1000)
        throw std::invalid_argument("l2_halfspace: need at least 1000 poses");
    if (ps.size() == 0)
        throw std::invalid_argument("l2_halfspace: empty point set");
    validate_family(fam, mu);
    const int dim = measure_dim(mu);
    if (ps.dim != dim)
        throw std::invalid_argument("l2_halfspace: point/measure dimension mismatch");
    const double r0 = fam.rho_max;
    const double limit2 = r0 * r0 * (1.0 + 1e-9);
    if (dim == 3) {
        for (const Vec3& p : ps.pts3)
            if (norm2(p) > limit2)
                throw std::invalid_argument("l2_halfspace: point outside B(0, rho_max)");
    } else {
        for (const Vec2& p : ps.pts2)
            if (norm2(p) > limit2)
                throw std::invalid_argument("l2_halfspace: point outside B(0, rho_max)");
    }

    const long long per_block = (mc.n_poses + kBlocks - 1) / kBlocks;
    const long long total = per_block * kBlocks;
    double shifts[kBlocks][3];
    {
        auto g = make_rng(mc.seed, "l2-halfspace-shifts");
        for (auto& block : shifts)
            for (double& s : block) s = uniform01(g);
    }

    std::vector<double> f(static_cast<std::size_t>(total));
    parallel_for(static_cast<std::size_t>(total), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t t = lo; t < hi; ++t) {
            const long long k = static_cast<long long>(t) / per_block;
            const std::uint64_t idx = static_cast<std::uint64_t>(t % per_block) + 1;
            const double* sh = shifts[k];
            const double rho = r0 * shifted(radical_inverse(idx, 2), sh[0]);
            double d;
            if (dim == 3) {
                const double z = 2.0 * shifted(radical_inverse(idx, 3), sh[1]) - 1.0;
                const double phi = 2.0 * M_PI * shifted(radical_inverse(idx, 5), sh[2]);
                const double w = std::sqrt(std::max(0.0, 1.0 - z * z));
                const Vec3 theta{w * std::cos(phi), w * std::sin(phi), z};
                d = static_cast<double>(count_halfspace3(ps, theta, rho)) -
                    static_cast<double>(ps.size()) *
                        evaluate_halfspace3(mu, theta, rho).value;
            } else {
                const double ang = 2.0 * M_PI * shifted(radical_inverse(idx, 3), sh[1]);
                const Vec2 theta{std::cos(ang), std::sin(ang)};
                d = static_cast<double>(count_halfspace(ps, theta, rho)) -
                    static_cast<double>(ps.size()) *
                        evaluate_halfspace(mu, theta, rho, opt).value;
            }
            f[t] = d * d;
        }
    });
    return finish_estimate(reduce_blocks(f, per_block), r0, total, mc.seed);
}

// ---------------------------------------------------------------------------
// witness search

namespace {

// golden-section: shrink [lo, hi] toward a maximizer of eval, keeping the
// global best seen; the objective is not unimodal, so this is a polish step
template <typename Eval>
void golden_polish(double lo, double hi, long long max_evals, long long& used,
                   long long budget, const Eval& eval, double& best_arg, double& best_val) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = eval(c), fd = eval(d);
    used += 2;
    for (long long it = 0; it < max_evals && used < budget; ++it, ++used) {
        if (fc > best_val) { best_val = fc; best_arg = c; }
        if (fd > best_val) { best_val = fd; best_arg = d; }
        if (fc >= fd) {
            b = d; d = c; fd = fc;
            c = b - gr * (b - a);
            fc = eval(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + gr * (b - a);
            fd = eval(d);
        }
    }
    if (fc > best_val) { best_val = fc; best_arg = c; }
    if (fd > best_val) { best_val = fd; best_arg = d; }
}

} // namespace

WitnessResult witness_search(const PointSet& ps, const MeasureSpec& mu,
                             const FamilySpec& fam, long long budget,
                             std::uint64_t seed, const EvalOptions& opt) {
    if (budget < 1000)
        throw std::invalid_argument("witness_search: need a budget of at least 1000");
    WitnessResult res;
    long long used = 0;

    // The schedule below alternates fixed-size random-scan blocks with
    // fixed-size polish sweeps and never looks at the remaining budget, so a
    // run with a larger budget evaluates a superset of the same poses and the
    // reported maximum cannot decrease.
    const long long scan_block = 256;
    const long long per_coord = 40;

    if (const auto* af = std::get_if<AffineFamily>(&fam)) {
        validate_family(*af, mu);
        auto g = make_rng(seed, "witness-scan");
        double bx = 0.0, by = 0.0, btau = af->a, bang = 0.0, bval = -1.0;
        const double hx = 0.125 * (af->box_hi.x - af->box_lo.x);
        const double hy = 0.125 * (af->box_hi.y - af->box_lo.y);
        const double ht = 0.25 * (af->b - af->a);
        while (used < budget) {
            for (long long i = 0; i < scan_block && used < budget; ++i, ++used) {
                const double x = uniform(g, af->box_lo.x, af->box_hi.x);
                const double y = uniform(g, af->box_lo.y, af->box_hi.y);
                const double tau = uniform(g, af->a, af->b);
                const double ang = uniform(g, 0.0, 2.0 * M_PI);
                const double v = std::fabs(discrepancy_at(
                    ps, mu, af->shape, AffinePose::plane({x, y}, tau, ang), opt));
                if (v > bval) { bval = v; bx = x; by = y; btau = tau; bang = ang; }
            }
            if (used + 2 > budget) break;
            golden_polish(std::max(af->box_lo.x, bx - hx), std::min(af->box_hi.x, bx + hx),
                          per_coord, used, budget,
                          [&](double x) {
                              return std::fabs(discrepancy_at(
                                  ps, mu, af->shape,
                                  AffinePose::plane({x, by}, btau, bang), opt));
                          },
                          bx, bval);
            if (used + 2 > budget) break;
            golden_polish(std::max(af->box_lo.y, by - hy), std::min(af->box_hi.y, by + hy),
                          per_coord, used, budget,
                          [&](double y) {
                              return std::fabs(discrepancy_at(
                                  ps, mu, af->shape,
                                  AffinePose::plane({bx, y}, btau, bang), opt));
                          },
                          by, bval);
            if (used + 2 > budget) break;
            golden_polish(std::max(af->a, btau - ht), std::min(af->b, btau + ht),
                          per_coord, used, budget,
                          [&](double tau) {
                              return std::fabs(discrepancy_at(
                                  ps, mu, af->shape,
                                  AffinePose::plane({bx, by}, tau, bang), opt));
                          },
                          btau, bval);
            if (used + 2 > budget) break;
            golden_polish(bang - M_PI / 8.0, bang + M_PI / 8.0, per_coord, used, budget,
                          [&](double ang) {
                              return std::fabs(discrepancy_at(
                                  ps, mu, af->shape,
                                  AffinePose::plane({bx, by}, btau, ang), opt));
                          },
                          bang, bval);
        }
        res.where = AffinePose::plane({bx, by}, btau, bang);
        res.value = bval;
    } else {
        const auto& hf = std::get<HalfSpaceFamily>(fam);
        validate_family(hf, mu);
        const int dim = measure_dim(mu);
        if (ps.dim != dim)
            throw std::invalid_argument("witness_search: point/measure dimension mismatch");
        auto g = make_rng(seed, "witness-scan");
        double brho = 0.0, bang = 0.0, bz = 1.0, bval = -1.0;
        auto eval3 = [&](double rho, double z, double phi) {
            const double w = std::sqrt(std::max(0.0, 1.0 - z * z));
            return std::fabs(discrepancy_halfspace3(
                ps, mu, {w * std::cos(phi), w * std::sin(phi), z}, rho));
        };
        auto eval2 = [&](double rho, double ang) {
            return std::fabs(discrepancy_halfspace(
                ps, mu, {std::cos(ang), std::sin(ang)}, rho, opt));
        };
        while (used < budget) {
            for (long long i = 0; i < scan_block && used < budget; ++i, ++used) {
                const double rho = uniform(g, 0.0, hf.rho_max);
                const double ang = uniform(g, 0.0, 2.0 * M_PI);
                const double z = uniform(g, -1.0, 1.0); // drawn in both dimensions to
                                                        // keep the scan stream a fixed
                                                        // prefix sequence
                const double v = dim == 3 ? eval3(rho, z, ang) : eval2(rho, ang);
                if (v > bval) { bval = v; brho = rho; bang = ang; bz = z; }
            }
            if (used + 2 > budget) break;
            golden_polish(std::max(0.0, brho - 0.25 * hf.rho_max),
                          std::min(hf.rho_max, brho + 0.25 * hf.rho_max), per_coord,
                          used, budget,
                          [&](double rho) {
                              return dim == 3 ? eval3(rho, bz, bang) : eval2(rho, bang);
                          },
                          brho, bval);
            if (used + 2 > budget) break;
            golden_polish(bang - M_PI / 8.0, bang + M_PI / 8.0, per_coord, used, budget,
                          [&](double ang) {
                              return dim == 3 ? eval3(brho, bz, ang) : eval2(brho, ang);
                          },
                          bang, bval);
            if (dim == 3) {
                if (used + 2 > budget) break;
                golden_polish(std::max(-1.0, bz - 0.25), std::min(1.0, bz + 0.25),
                              per_coord, used, budget,
                              [&](double z) { return eval3(brho, z, bang); }, bz, bval);
            }
        }
        HalfSpacePose hp;
        hp.dim = dim;
        hp.rho = brho;
        if (dim == 3) {
            const double w = std::sqrt(std::max(0.0, 1.0 - bz * bz));
            hp.theta = {w * std::cos(bang), w * std::sin(bang), bz};
        } else {
            hp.theta = {std::cos(bang), std::sin(bang), 0.0};
        }
        res.where = hp;
        res.value = bval;
    }
    res.evals_used = used;
    return res;
}


// ---------------------------------------------------------------------------
// ball-to-half-space limit

BallLimitTable ball_to_halfspace_limit(const PointSet& ps, const MeasureSpec& mu,
                                       Vec2 theta, double rho,
                                       const std::vector<double>& radii,
                                       const EvalOptions& opt) {
    if (measure_dim(mu) != 2 || ps.dim != 2)
        throw std::invalid_argument("ball_to_halfspace_limit: planar setup required");
    if (radii.empty())
        throw std::invalid_argument("ball_to_halfspace_limit: empty radius sequence");
    const double r0 = support_radius_of(mu);
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (radii[i] <= r0)
            throw std::invalid_argument(
                "ball_to_halfspace_limit: radii must exceed the support radius");
        if (i > 0 && radii[i] <= radii[i - 1])
            throw std::invalid_argument(
                "ball_to_halfspace_limit: radii must be strictly increasing");
    }
    const double tn = norm(theta);
    const Vec2 th = (1.0 / tn) * theta;

    BallLimitTable table;
    const long long hcount = count_halfspace(ps, th, rho);
    const double hmeas = evaluate_halfspace(mu, th, rho, opt).value;
    const double hdisc = static_cast<double>(hcount) -
                         static_cast<double>(ps.size()) * hmeas;
    for (const double R : radii) {
        BallLimitRow row;
        row.radius = R;
        const Vec2 center = (rho + R) * th;
        const AffinePose pose = AffinePose::plane(center, 1.0, 0.0);
        const Shape ball{Ball{R}};
        row.ball_count = count_inside(ps, ball, pose);
        const double bmeas = evaluate(mu, ball, pose, opt).value;
        row.ball_disc = static_cast<double>(row.ball_count) -
                        static_cast<double>(ps.size()) * bmeas;
        row.half_count = hcount;
        row.half_disc = hdisc;
        row.measure_gap = std::fabs(bmeas - hmeas);
        row.disc_gap = std::fabs(row.ball_disc - hdisc);
        table.rows.push_back(row);
    }
    table.threshold_radius = std::numeric_limits<double>::infinity();
    for (std::size_t i = table.rows.size(); i-- > 0;) {
        if (table.rows[i].ball_count != table.rows[i].half_count) break;
        table.threshold_radius = table.rows[i].radius;
    }
    return table;
}

// ---------------------------------------------------------------------------
// run records

nlohmann::json l2_record(const std::string& family, long long n_points,
                         const L2Estimate& est) {
    return nlohmann::json{{"family", family}, {"N", n_points},
                          {"value", est.value}, {"stderr", est.std_error},
                          {"n_poses", est.n_poses}, {"seed", est.seed}};
}

void append_run_log(const std::string& csv_path, const nlohmann::json& record) {
    const bool fresh = !std::ifstream(csv_path).good();
    std::ofstream out(csv_path, std::ios::app);
    if (!out)
        throw std::runtime_error("append_run_log: cannot open " + csv_path);
    if (fresh) out << "family,N,value,stderr,n_poses,seed\n";
    char line[256];
    std::snprintf(line, sizeof line, "%s,%lld,%.17g,%.17g,%lld,%llu\n",
                  record.at("family").get<std::string>().c_str(),
                  static_cast<long long>(record.at("N").get<long long>()),
                  record.at("value").get<double>(), record.at("stderr").get<double>(),
                  static_cast<long long>(record.at("n_poses").get<long long>()),
                  static_cast<unsigned long long>(record.at("seed").get<std::uint64_t>()));
    out << line;
}

} // namespace lab

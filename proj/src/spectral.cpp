#include "lab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "lab/fft.hpp"
#include "lab/parallel.hpp"
#include "lab/rng.hpp"

namespace lab {

namespace {

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

double sinc(double t) {
    if (std::fabs(t) < 1e-8) return 1.0 - t * t / 6.0;
    return std::sin(t) / t;
}

// sum of a vector in index order (the parallel sections below fill per-row
// partials and reduce here, so results do not depend on the thread count)
double ordered_sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

} // namespace

// ---------------------------------------------------------------------------
// SpectralGrid

double SpectralGrid::freq(int k) const {
    const int kk = k < L / 2 ? k : k - L;
    return static_cast<double>(kk) / S;
}

double SpectralGrid::nyquist() const { return static_cast<double>(L) / (2.0 * S); }

std::complex<double> SpectralGrid::hat_at(Vec2 xi) const {
    // shifted coordinates: continuous bin position with DC at L/2
    const double px = xi.x * S + 0.5 * L;
    const double py = xi.y * S + 0.5 * L;
    if (px < 0.0 || py < 0.0 || px > L - 1.0 || py > L - 1.0)
        throw std::invalid_argument("hat_at: frequency outside the resolved grid");
    const int ix = std::min(static_cast<int>(px), L - 2);
    const int iy = std::min(static_cast<int>(py), L - 2);
    const double fx = px - ix, fy = py - iy;
    auto at = [&](int i, int j) {
        const int bi = (i + L / 2) % L;
        const int bj = (j + L / 2) % L;
        return hat[static_cast<std::size_t>(bj) * L + bi];
    };
    return (1.0 - fx) * (1.0 - fy) * at(ix, iy) + fx * (1.0 - fy) * at(ix + 1, iy) +
           (1.0 - fx) * fy * at(ix, iy + 1) + fx * fy * at(ix + 1, iy + 1);
}

double SpectralGrid::spatial_energy() const {
    std::vector<double> rows(static_cast<std::size_t>(L), 0.0);
    parallel_for(static_cast<std::size_t>(L), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t r = lo; r < hi; ++r) {
            double s = 0.0;
            for (int i = 0; i < L; ++i) {
                const double v = raster[r * L + i];
                s += v * v;
            }
            rows[r] = s;
        }
    });
    return ordered_sum(rows) * cell * cell;
}

double SpectralGrid::spectral_energy() const {
    std::vector<double> rows(static_cast<std::size_t>(L), 0.0);
    parallel_for(static_cast<std::size_t>(L), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t r = lo; r < hi; ++r) {
            double s = 0.0;
            for (int i = 0; i < L; ++i) s += std::norm(hat[r * L + i]);
            rows[r] = s;
        }
    });
    return ordered_sum(rows) / (S * S);
}

SpectralGrid make_spectral_grid(const Shape& shape, int L, double S) {
    validate(shape);
    if (!power_of_two(L) || L < 16)
        throw std::invalid_argument("make_spectral_grid: L must be a power of two >= 16");
    if (S < 2.0 * bounding_radius(shape) + 2.0)
        throw std::invalid_argument(
            "make_spectral_grid: box side must be at least 2*bounding_radius + 2");

    SpectralGrid g;
    g.L = L;
    g.S = S;
    g.cell = S / L;
    const std::size_t n = static_cast<std::size_t>(L);
    g.raster.resize(n * n);

    // coverage fraction per cell: probe the corners and the center first and
    // subsample 8x8 only where they disagree (sub-cell features thinner than
    // a cell may be missed; they carry negligible area at the grid scale)
    const double h = g.cell;
    const double x0 = -0.5 * S;
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t iy = lo; iy < hi; ++iy) {
            const double yb = x0 + iy * h;
            for (std::size_t ix = 0; ix < n; ++ix) {
                const double xb = x0 + ix * h;
                const bool c0 = contains_reference(shape, {xb, yb});
                const bool c1 = contains_reference(shape, {xb + h, yb});
                const bool c2 = contains_reference(shape, {xb, yb + h});
                const bool c3 = contains_reference(shape, {xb + h, yb + h});
                const bool cc = contains_reference(shape, {xb + 0.5 * h, yb + 0.5 * h});
                double cov;
                if (c0 == c1 && c0 == c2 && c0 == c3 && c0 == cc) {
                    cov = c0 ? 1.0 : 0.0;
                } else {
                    int in = 0;
                    for (int sy = 0; sy < 8; ++sy)
                        for (int sx = 0; sx < 8; ++sx)
                            if (contains_reference(shape, {xb + (sx + 0.5) * h / 8.0,
                                                           yb + (sy + 0.5) * h / 8.0}))
                                ++in;
                    cov = in / 64.0;
                }
                g.raster[iy * n + ix] = cov;
            }
        }
    });

    // forward transform of the coverage, then divide out the cell-average
    // transfer function (per-axis sinc).  This removes the low-pass bias of
    // the cell window; the raster is replaced by the matching inverse
    // transform so (raster, hat) stays an exact DFT pair and Parseval holds
    // to rounding.
    std::vector<std::complex<double>> bins(n * n);
    for (std::size_t i = 0; i < n * n; ++i) bins[i] = g.raster[i];
    fft2d(bins, L, false);

    std::vector<double> axis_t(n);
    for (int k = 0; k < L; ++k) axis_t[k] = sinc(M_PI * g.freq(k) * h);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t iy = lo; iy < hi; ++iy)
            for (std::size_t ix = 0; ix < n; ++ix)
                bins[iy * n + ix] /= axis_t[ix] * axis_t[iy];
    });

    // scaled, phase-shifted copy approximating the continuous transform:
    // hat(xi_k) = cell^2 exp(-2 pi i xi_k . x_first_center) DFT_k
    g.hat.resize(n * n);
    const double xc = x0 + 0.5 * h;
    std::vector<std::complex<double>> axis_p(n);
    for (int k = 0; k < L; ++k) {
        const double t = -2.0 * M_PI * g.freq(k) * xc;
        axis_p[k] = {std::cos(t), std::sin(t)};
    }
    const double h2 = h * h;
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t iy = lo; iy < hi; ++iy)
            for (std::size_t ix = 0; ix < n; ++ix)
                g.hat[iy * n + ix] = h2 * axis_p[ix] * axis_p[iy] * bins[iy * n + ix];
    });

    fft2d(bins, L, true);
    for (std::size_t i = 0; i < n * n; ++i) g.raster[i] = bins[i].real();
    return g;
}

// ---------------------------------------------------------------------------
// shell energies

double shell_energy(const SpectralGrid& grid, double rho, ShellBand band) {
    if (!(band.gamma > 0.0) || !(band.gamma < band.delta))
        throw std::invalid_argument("shell_energy: need 0 < gamma < delta");
    if (!(rho > 0.0)) throw std::invalid_argument("shell_energy: need rho > 0");
    if (band.delta * rho > grid.nyquist() + 1e-12)
        throw std::invalid_argument(
            "shell_energy: outer radius exceeds the grid's Nyquist frequency");
    const double lo2 = band.gamma * rho * band.gamma * rho;
    const double hi2 = band.delta * rho * band.delta * rho;
    const std::size_t n = static_cast<std::size_t>(grid.L);
    std::vector<double> rows(n, 0.0);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t iy = lo; iy < hi; ++iy) {
            const double fy = grid.freq(static_cast<int>(iy));
            double s = 0.0;
            for (std::size_t ix = 0; ix < n; ++ix) {
                const double fx = grid.freq(static_cast<int>(ix));
                const double f2 = fx * fx + fy * fy;
                if (f2 >= lo2 && f2 < hi2) s += std::norm(grid.hat[iy * n + ix]);
            }
            rows[iy] = s;
        }
    });
    return ordered_sum(rows) / (grid.S * grid.S);
}

double disk_energy(const SpectralGrid& grid, double rho) {
    if (!(rho > 0.0)) throw std::invalid_argument("disk_energy: need rho > 0");
    const double r2 = rho * rho;
    const std::size_t n = static_cast<std::size_t>(grid.L);
    std::vector<double> rows(n, 0.0);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t iy = lo; iy < hi; ++iy) {
            const double fy = grid.freq(static_cast<int>(iy));
            double s = 0.0;
            for (std::size_t ix = 0; ix < n; ++ix) {
                const double fx = grid.freq(static_cast<int>(ix));
                if (fx * fx + fy * fy < r2) s += std::norm(grid.hat[iy * n + ix]);
            }
            rows[iy] = s;
        }
    });
    return ordered_sum(rows) / (grid.S * grid.S);
}

std::vector<ShellRow> shell_table(const SpectralGrid& grid,
                                  const std::vector<double>& rhos, ShellBand band) {
    std::vector<ShellRow> rows;
    rows.reserve(rhos.size());
    for (double rho : rhos) rows.push_back({rho, shell_energy(grid, rho, band)});
    return rows;
}

// ---------------------------------------------------------------------------
// Bessel asymptotic certificate

double bessel_asymptotic_sup(int d, double u_lo, double u_hi) {
    if (d != 2 && d != 3)
        throw std::invalid_argument("bessel_asymptotic_sup: d must be 2 or 3");
    if (!(u_lo >= 1.0) || !(u_hi > u_lo) || !(u_hi <= 1000.0))
        throw std::invalid_argument(
            "bessel_asymptotic_sup: need 1 <= u_lo < u_hi <= 1000");
    const double step = 1.0 / 512.0;
    const long long m = static_cast<long long>(std::ceil((u_hi - u_lo) / step));
    std::vector<double> part(static_cast<std::size_t>(m) + 1, 0.0);
    parallel_for(part.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const double u = std::min(u_lo + static_cast<double>(i) * step, u_hi);
            part[i] = std::pow(u, 1.5) * std::fabs(bessel_asymptotic_remainder(d, u));
        }
    });
    return *std::max_element(part.begin(), part.end());
}

// ---------------------------------------------------------------------------
// rotational band energy

double rotational_band_energy(const Shape& shape, double xi_mag, double gamma,
                              double delta, int n_rot, std::uint64_t seed,
                              const SpectralGrid* grid) {
    if (!(xi_mag > 0.0)) throw std::invalid_argument("rotational_band_energy: xi_mag > 0");
    if (!(gamma > 0.0) || !(gamma < delta))
        throw std::invalid_argument("rotational_band_energy: need 0 < gamma < delta");
    if (n_rot < 1) throw std::invalid_argument("rotational_band_energy: n_rot >= 1");
    const Ball* ball = std::get_if<Ball>(&shape);
    if (!ball) {
        if (!grid)
            throw std::invalid_argument(
                "rotational_band_energy: non-ball shapes need a spectral grid");
        if (delta * xi_mag > grid->nyquist() * (1.0 - 2.0 / grid->L))
            throw std::invalid_argument(
                "rotational_band_energy: delta*xi_mag exceeds the grid's resolved band");
    }
    auto g = make_rng(seed, "rotational-band");
    double sum = 0.0;
    for (int i = 0; i < n_rot; ++i) {
        const double u = uniform(g, gamma, delta);
        const double ang = uniform(g, 0.0, 2.0 * M_PI);
        double a2;
        if (ball) {
            const double a = ball_indicator_ft(2, ball->radius, u * xi_mag);
            a2 = a * a;
        } else {
            const Rot2 sigma(ang);
            const Vec2 xi = sigma.apply_inverse({xi_mag, 0.0});
            a2 = std::norm(grid->hat_at(u * xi));
        }
        sum += u * u * u * u * a2;
    }
    return sum / n_rot;
}

// ---------------------------------------------------------------------------
// bump kernel

namespace {

// unnormalized radial bump, supported in r < 1/2
double bump(double r) {
    const double q = 1.0 - 4.0 * r * r;
    if (q <= 0.0) return 0.0;
    return std::exp(-1.0 / q);
}

// Simpson quadrature of f over [a, b] with n subintervals (n even)
template <typename F>
double simpson(const F& f, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

// radial 2D Fourier transform of the normalized bump at frequency rho
double psi_hat(double c_psi, double rho) {
    const int n = std::max(2048, 2 * static_cast<int>(6.0 * rho));
    const double v = simpson(
        [&](double s) { return bump(s) * bessel_j0(2.0 * M_PI * rho * s) * s; }, 0.0,
        0.5, n);
    return c_psi * 2.0 * M_PI * v;
}

double lerp_table(const std::vector<double>& t, double lo, double hi, double x) {
    if (x <= lo) return t.front();
    if (x >= hi) return t.back();
    const double p = (x - lo) / (hi - lo) * (t.size() - 1);
    const std::size_t i = std::min(static_cast<std::size_t>(p), t.size() - 2);
    const double f = p - i;
    return (1.0 - f) * t[i] + f * t[i + 1];
}

} // namespace

double BumpKernel::khat(double xi_mag) const {
    const double u = std::fabs(xi_mag) / M;
    if (u >= 1.0) return 0.0;
    const double v = lerp_table(khat_radial, 0.0, 1.0, u);
    return std::min(1.0, std::max(0.0, v));
}

double BumpKernel::k_m(double r) const {
    const double y = std::fabs(r) * M;
    double k;
    if (y <= k_near_max)
        k = lerp_table(k_near, 0.0, k_near_max, y);
    else if (y <= k_far_max)
        k = lerp_table(k_far, k_near_max, k_far_max, y);
    else
        k = 0.0;
    return M * M * k;
}

BumpKernel build_kernel(double M, int L_decay) {
    if (!(M >= 1.0)) throw std::invalid_argument("build_kernel: need M >= 1");
    if (L_decay < 1) throw std::invalid_argument("build_kernel: need L_decay >= 1");

    BumpKernel k;
    k.M = M;
    k.L_decay = L_decay;
    k.d = 2;

    // normalize psi to unit integral
    const double i0 = 2.0 * M_PI * simpson([](double r) { return bump(r) * r; }, 0.0,
                                           0.5, 2048);
    const double c_psi = 1.0 / i0;
    k.norm_psi_sq =
        c_psi * c_psi * 2.0 * M_PI *
        simpson([](double r) { return bump(r) * bump(r) * r; }, 0.0, 0.5, 2048);

    // K_hat = psi*psi / psi*psi(0): spatial autoconvolution on a fixed
    // midpoint grid (the bump is smooth with compact support, so the grid
    // sum is spectrally accurate); positivity is exact since every term is
    // a product of nonnegative samples
    const int Q = 1001;
    const int G = 320;
    const double gh = 1.0 / G;
    std::vector<double> fy(static_cast<std::size_t>(G) * G);
    for (int iy = 0; iy < G; ++iy) {
        const double y = -0.5 + (iy + 0.5) * gh;
        for (int ix = 0; ix < G; ++ix) {
            const double x = -0.5 + (ix + 0.5) * gh;
            fy[static_cast<std::size_t>(iy) * G + ix] = bump(std::sqrt(x * x + y * y));
        }
    }
    std::vector<double> acorr(Q, 0.0);
    parallel_for(Q, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t qi = lo; qi < hi; ++qi) {
            const double t = static_cast<double>(qi) / (Q - 1);
            double s = 0.0;
            for (int iy = 0; iy < G; ++iy) {
                const double y = -0.5 + (iy + 0.5) * gh;
                for (int ix = 0; ix < G; ++ix) {
                    const double f1 = fy[static_cast<std::size_t>(iy) * G + ix];
                    if (f1 == 0.0) continue;
                    const double x = -0.5 + (ix + 0.5) * gh;
                    const double dx = t - x;
                    s += f1 * bump(std::sqrt(dx * dx + y * y));
                }
            }
            acorr[qi] = s * gh * gh * c_psi * c_psi;
        }
    });
    // certification: the autoconvolution must be nonnegative, peak at 0 (to
    // quadrature rounding), agree with the 1D route for ||psi||^2, and
    // vanish at the support edge
    for (double a : acorr)
        if (a < 0.0) throw std::runtime_error("build_kernel: negative autocorrelation");
    const double a0 = acorr[0];
    if (std::fabs(a0 - k.norm_psi_sq) > 1e-9 * k.norm_psi_sq)
        throw std::runtime_error("build_kernel: quadrature routes disagree on ||psi||^2");
    for (double a : acorr)
        if (a > a0 * (1.0 + 1e-9))
            throw std::runtime_error("build_kernel: autocorrelation exceeds its center");
    if (acorr[Q - 1] != 0.0)
        throw std::runtime_error("build_kernel: autocorrelation must vanish at |xi| = 1");
    k.khat_radial.resize(Q);
    for (int i = 0; i < Q; ++i) k.khat_radial[i] = std::min(1.0, acorr[i] / a0);

    // K(x) = psi_hat(x)^2 / ||psi||^2: dense table near the origin (where
    // the convolution bound reads it) plus a coarser far table used by the
    // decay certificate
    k.k_near_max = 32.0;
    k.k_far_max = 1024.0;
    const int n_near = 3201; // spacing 0.01
    const int n_far = 3969;  // spacing 0.25
    k.k_near.resize(n_near);
    k.k_far.resize(n_far);
    parallel_for(n_near, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const double r = k.k_near_max * static_cast<double>(i) / (n_near - 1);
            const double p = psi_hat(c_psi, r);
            k.k_near[i] = p * p / k.norm_psi_sq;
        }
    });
    parallel_for(n_far, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const double r = k.k_near_max + (k.k_far_max - k.k_near_max) *
                                                static_cast<double>(i) / (n_far - 1);
            const double p = psi_hat(c_psi, r);
            k.k_far[i] = p * p / k.norm_psi_sq;
        }
    });
    k.K0 = k.k_near[0];
    if (std::fabs(k.K0 * k.norm_psi_sq - 1.0) > 1e-9)
        throw std::runtime_error("build_kernel: K(0) must equal 1 / ||psi||^2");

    // decay certificate: c = sup over the tabulated |y| >= 1 of |y|^L K(y)
    double c = 0.0;
    for (int i = 0; i < n_near; ++i) {
        const double r = k.k_near_max * static_cast<double>(i) / (n_near - 1);
        if (r >= 1.0) c = std::max(c, std::pow(r, L_decay) * k.k_near[i]);
    }
    for (int i = 0; i < n_far; ++i) {
        const double r = k.k_near_max + (k.k_far_max - k.k_near_max) *
                                            static_cast<double>(i) / (n_far - 1);
        c = std::max(c, std::pow(r, L_decay) * k.k_far[i]);
    }
    if (!std::isfinite(c) || c <= 0.0)
        throw std::runtime_error("build_kernel: decay certificate failed");
    k.decay_constant = c;
    return k;
}

// ---------------------------------------------------------------------------
// convolution bound

ConvolutionBound km_convolution_bound(const MeasureSpec& mu, const BumpKernel& kernel,
                                      int trials, std::uint64_t seed) {
    if (trials < 100) throw std::invalid_argument("km_convolution_bound: trials >= 100");
    if (measure_dim(mu) != kernel.d)
        throw std::invalid_argument("km_convolution_bound: dimension mismatch");

    const long long n_atoms = 500000;
    const PointSet atoms = sample(mu, n_atoms, seed);
    const PointSet base = sample(mu, trials, seed + 1);
    auto jit = make_rng(seed, "km-jitter");
    std::normal_distribution<double> gauss(0.0, 1.0 / kernel.M);

    auto convolve = [&](Vec2 z) {
        std::vector<double> part(8, 0.0);
        const std::size_t m = atoms.pts2.size();
        parallel_for(8, [&](std::size_t blo, std::size_t bhi) {
            for (std::size_t b = blo; b < bhi; ++b) {
                const std::size_t lo = b * m / 8, hi = (b + 1) * m / 8;
                double s = 0.0;
                for (std::size_t i = lo; i < hi; ++i) {
                    const Vec2 d = z - atoms.pts2[i];
                    s += kernel.k_m(std::sqrt(d.x * d.x + d.y * d.y));
                }
                part[b] = s;
            }
        });
        return ordered_sum(part) / static_cast<double>(m);
    };

    double best = 0.0;
    for (int t = 0; t < trials; ++t) {
        Vec2 z = base.pts2[static_cast<std::size_t>(t)];
        if (t % 2 == 1) z = z + Vec2{gauss(jit), gauss(jit)};
        best = std::max(best, std::fabs(convolve(z)));
    }
    ConvolutionBound out;
    out.max_abs = best;
    out.ratio = best / std::pow(kernel.M, kernel.d - mu.alpha);
    return out;
}

// ---------------------------------------------------------------------------
// Cassels-Montgomery quadratic form

namespace {

// fast transform dispatcher: polygons use the exact boundary formula, other
// measures the module's own closed forms
std::complex<double> measure_hat(const MeasureSpec& mu, Vec2 xi) {
    if (const auto* leb = std::get_if<LebesgueOnShape>(&mu.variant))
        if (const auto* poly = std::get_if<ConvexPolygon>(&leb->support))
            return polygon_fourier(poly->vertices, xi);
    return fourier_coefficient(mu, xi).value;
}

double cm_grid_sum(const PointSet& ps, const MeasureSpec& mu, double M, int n) {
    const double w = 2.0 * M / n;
    const double n_pts = static_cast<double>(ps.size());
    const std::size_t N = ps.pts2.size();

    // per-point phase start and per-cell step along x (recurrence)
    std::vector<std::complex<double>> ax0(N), rx(N);
    for (std::size_t j = 0; j < N; ++j) {
        const double t0 = -2.0 * M_PI * (-M + 0.5 * w) * ps.pts2[j].x;
        const double ts = -2.0 * M_PI * w * ps.pts2[j].x;
        ax0[j] = {std::cos(t0), std::sin(t0)};
        rx[j] = {std::cos(ts), std::sin(ts)};
    }

    std::vector<double> rows(static_cast<std::size_t>(n), 0.0);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t lo, std::size_t hi) {
        std::vector<std::complex<double>> srow(static_cast<std::size_t>(n));
        std::vector<std::complex<double>> acc(N);
        for (std::size_t iy = lo; iy < hi; ++iy) {
            const double xy = -M + (iy + 0.5) * w;
            std::fill(srow.begin(), srow.end(), std::complex<double>(0.0, 0.0));
            for (std::size_t j = 0; j < N; ++j) {
                const double t = -2.0 * M_PI * xy * ps.pts2[j].y;
                acc[j] = ax0[j] * std::complex<double>(std::cos(t), std::sin(t));
            }
            for (int ix = 0; ix < n; ++ix) {
                std::complex<double> s{0.0, 0.0};
                for (std::size_t j = 0; j < N; ++j) {
                    s += acc[j];
                    acc[j] *= rx[j];
                }
                srow[static_cast<std::size_t>(ix)] = s;
            }
            double rsum = 0.0;
            for (int ix = 0; ix < n; ++ix) {
                const double xx = -M + (ix + 0.5) * w;
                const double f2 = xx * xx + xy * xy;
                if (f2 < 1.0 || f2 > M * M) continue;
                const std::complex<double> d =
                    srow[static_cast<std::size_t>(ix)] - n_pts * measure_hat(mu, {xx, xy});
                rsum += std::norm(d);
            }
            rows[iy] = rsum;
        }
    });
    return ordered_sum(rows) * w * w;
}

} // namespace

QuadraticFormResult cassels_montgomery(const PointSet& ps, const MeasureSpec& mu,
                                       double M, int grid_n) {
    if (ps.dim != 2 || measure_dim(mu) != 2)
        throw std::invalid_argument("cassels_montgomery: planar points and measure only");
    if (ps.size() < 1) throw std::invalid_argument("cassels_montgomery: empty point set");
    if (!(M > 1.0)) throw std::invalid_argument("cassels_montgomery: need M > 1");
    int n = grid_n > 0 ? grid_n : static_cast<int>(std::ceil(14.0 * M));
    if (n % 2) ++n;
    if (n < 8) n = 8;
    QuadraticFormResult out;
    out.value = cm_grid_sum(ps, mu, M, n);
    const double coarse = cm_grid_sum(ps, mu, M, n / 2);
    out.disc_error = std::fabs(out.value - coarse) / 3.0;
    return out;
}

// ---------------------------------------------------------------------------
// Plancherel bridge

PlancherelResult plancherel_bridge(const PointSet& ps, const MeasureSpec& mu,
                                   const Shape& shape, double tau, const Rot2& sigma,
                                   int grid_L) {
    if (ps.dim != 2 || measure_dim(mu) != 2)
        throw std::invalid_argument("plancherel_bridge: planar points and measure only");
    if (!(tau > 0.0)) throw std::invalid_argument("plancherel_bridge: need tau > 0");
    if (grid_L < 16) throw std::invalid_argument("plancherel_bridge: grid_L >= 16");
    const Ball* ball = std::get_if<Ball>(&shape);
    if (!ball)
        throw std::invalid_argument(
            "plancherel_bridge: only ball windows have the closed-form transform");

    const double br = tau * ball->radius;
    double zmax = 0.0;
    for (const Vec2& z : ps.pts2) zmax = std::max(zmax, std::sqrt(z.x * z.x + z.y * z.y));
    const double reach = std::max(zmax, mu.support_radius) + br;
    const double Sx = 2.0 * (reach + 0.05);
    const double h = Sx / grid_L;
    const std::size_t n = static_cast<std::size_t>(grid_L);
    const double n_pts = static_cast<double>(ps.size());

    // spatial side: translation-grid sum of the squared discrepancy
    std::vector<double> rows(n, 0.0);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t iy = lo; iy < hi; ++iy) {
            const double y = -0.5 * Sx + (iy + 0.5) * h;
            double s = 0.0;
            for (std::size_t ix = 0; ix < n; ++ix) {
                const double x = -0.5 * Sx + (ix + 0.5) * h;
                const AffinePose pose = AffinePose::plane({x, y}, tau, sigma.angle);
                long long count = 0;
                for (const Vec2& z : ps.pts2)
                    if (contains(shape, pose, z)) ++count;
                const double d = static_cast<double>(count) -
                                 n_pts * evaluate(mu, shape, pose).value;
                s += d * d;
            }
            rows[iy] = s;
        }
    });
    PlancherelResult out;
    out.spatial = ordered_sum(rows) * h * h;

    // spectral side: cartesian grid sum of |S(xi) - N mu_hat(xi)|^2
    // |chi_hat(xi)|^2.  Cell size resolves the fastest phase; the domain
    // radius P is set by the |xi|^{-3} envelope of the ball transform.
    const double osc = 2.0 * (br + std::max(zmax, mu.support_radius));
    const double dxi = 1.0 / (12.0 * std::max(osc, 1.0));
    const double P = std::max(50.0, 100.0 / br);
    int m = static_cast<int>(std::ceil(2.0 * P / dxi));
    if (m % 2) ++m;
    const double w = 2.0 * P / m;

    // measure transform on the grid: axis-aligned rectangles factor into
    // per-axis tables, ball and circle supports are radial, anything else
    // pays the generic per-cell transform
    enum class MuPath { separable, radial, generic } mu_path = MuPath::generic;
    std::vector<std::complex<double>> mux, muy;
    double mu_r = 0.0, mu_mass_inv = 0.0;
    bool mu_circle = false;
    if (const auto* leb = std::get_if<LebesgueOnShape>(&mu.variant)) {
        if (const auto* poly = std::get_if<ConvexPolygon>(&leb->support)) {
            const auto& v = poly->vertices;
            if (v.size() == 4) {
                bool axis = true;
                for (std::size_t e = 0; e < 4; ++e) {
                    const Vec2 d = v[(e + 1) % 4] - v[e];
                    if (std::fabs(d.x) > 1e-12 && std::fabs(d.y) > 1e-12) axis = false;
                }
                if (axis) {
                    double xlo = v[0].x, xhi = v[0].x, ylo = v[0].y, yhi = v[0].y;
                    for (const Vec2& q : v) {
                        xlo = std::min(xlo, q.x);
                        xhi = std::max(xhi, q.x);
                        ylo = std::min(ylo, q.y);
                        yhi = std::max(yhi, q.y);
                    }
                    const double cx = 0.5 * (xlo + xhi), wx2 = 0.5 * (xhi - xlo);
                    const double cy = 0.5 * (ylo + yhi), wy2 = 0.5 * (yhi - ylo);
                    mux.resize(static_cast<std::size_t>(m));
                    muy.resize(static_cast<std::size_t>(m));
                    for (int i = 0; i < m; ++i) {
                        const double f = -P + (i + 0.5) * w;
                        const double tx = -2.0 * M_PI * f * cx;
                        const double ty = -2.0 * M_PI * f * cy;
                        mux[static_cast<std::size_t>(i)] =
                            std::complex<double>(std::cos(tx), std::sin(tx)) *
                            sinc(2.0 * M_PI * f * wx2);
                        muy[static_cast<std::size_t>(i)] =
                            std::complex<double>(std::cos(ty), std::sin(ty)) *
                            sinc(2.0 * M_PI * f * wy2);
                    }
                    mu_path = MuPath::separable;
                }
            }
        } else if (const auto* bsup = std::get_if<Ball>(&leb->support)) {
            mu_path = MuPath::radial;
            mu_r = bsup->radius;
            mu_mass_inv = 1.0 / (M_PI * mu_r * mu_r);
        }
    } else if (const auto* circ = std::get_if<CircleArcMeasure>(&mu.variant)) {
        mu_path = MuPath::radial;
        mu_r = circ->radius;
        mu_circle = true;
    }
    auto radial_mu = [&](double u) {
        return mu_circle ? bessel_j0(2.0 * M_PI * mu_r * u)
                         : ball_indicator_ft(2, mu_r, u) * mu_mass_inv;
    };

    std::vector<std::complex<double>> ax0(ps.pts2.size()), rx(ps.pts2.size());
    for (std::size_t j = 0; j < ps.pts2.size(); ++j) {
        const double t0 = -2.0 * M_PI * (-P + 0.5 * w) * ps.pts2[j].x;
        const double ts = -2.0 * M_PI * w * ps.pts2[j].x;
        ax0[j] = {std::cos(t0), std::sin(t0)};
        rx[j] = {std::cos(ts), std::sin(ts)};
    }
    std::vector<double> srows(static_cast<std::size_t>(m), 0.0);
    parallel_for(static_cast<std::size_t>(m), [&](std::size_t lo, std::size_t hi) {
        std::vector<std::complex<double>> acc(ps.pts2.size());
        for (std::size_t iy = lo; iy < hi; ++iy) {
            const double xy = -P + (iy + 0.5) * w;
            for (std::size_t j = 0; j < ps.pts2.size(); ++j) {
                const double t = -2.0 * M_PI * xy * ps.pts2[j].y;
                acc[j] = ax0[j] * std::complex<double>(std::cos(t), std::sin(t));
            }
            double rsum = 0.0;
            for (int ix = 0; ix < m; ++ix) {
                const double xx = -P + (ix + 0.5) * w;
                std::complex<double> s{0.0, 0.0};
                for (std::size_t j = 0; j < ps.pts2.size(); ++j) {
                    s += acc[j];
                    acc[j] *= rx[j];
                }
                const double u = std::sqrt(xx * xx + xy * xy);
                const double chi = ball_indicator_ft(2, br, u);
                std::complex<double> mh;
                switch (mu_path) {
                case MuPath::separable:
                    mh = mux[static_cast<std::size_t>(ix)] * muy[iy];
                    break;
                case MuPath::radial:
                    mh = radial_mu(u);
                    break;
                default:
                    mh = measure_hat(mu, {xx, xy});
                }
                const std::complex<double> d = s - n_pts * mh;
                rsum += std::norm(d) * chi * chi;
            }
            srows[iy] = rsum;
        }
    });
    out.spectral = ordered_sum(srows) * w * w;
    out.gap = std::fabs(out.spatial - out.spectral) / out.spectral;
    if (out.gap > 0.10)
        throw std::runtime_error(
            "plancherel_bridge: sides disagree by more than 10%; refine the grid");
    return out;
}

// ---------------------------------------------------------------------------
// reports

void write_shell_table_csv(const std::string& path, const std::vector<ShellRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("write_shell_table_csv: cannot open " + path);
    out << "rho,energy\n";
    char line[80];
    for (const ShellRow& r : rows) {
        std::snprintf(line, sizeof line, "%.17g,%.17g\n", r.rho, r.energy);
        out << line;
    }
}

void write_kernel_report_csv(const std::string& path, const BumpKernel& kernel) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("write_kernel_report_csv: cannot open " + path);
    out << "field,value\n";
    char line[80];
    auto row = [&](const char* k, double v) {
        std::snprintf(line, sizeof line, "%s,%.17g\n", k, v);
        out << line;
    };
    row("M", kernel.M);
    row("L_decay", kernel.L_decay);
    row("dimension", kernel.d);
    row("norm_psi_sq", kernel.norm_psi_sq);
    row("K0", kernel.K0);
    row("decay_constant", kernel.decay_constant);
    row("khat_at_zero", kernel.khat(0.0));
    row("khat_beyond_support", kernel.khat(kernel.M * (1.0 + 1e-6)));
}

void write_grid_binary(const SpectralGrid& grid, const std::string& stem) {
    const std::string bin = stem + ".bin";
    std::ofstream out(bin, std::ios::trunc | std::ios::binary);
    if (!out) throw std::runtime_error("write_grid_binary: cannot open " + bin);
    out.write(reinterpret_cast<const char*>(grid.raster.data()),
              static_cast<std::streamsize>(grid.raster.size() * sizeof(double)));
    nlohmann::json header;
    header["L"] = grid.L;
    header["S"] = grid.S;
    header["cell"] = grid.cell;
    header["field"] = "raster";
    header["dtype"] = "float64-le";
    header["order"] = "row-major";
    std::ofstream hdr(stem + ".json", std::ios::trunc);
    if (!hdr) throw std::runtime_error("write_grid_binary: cannot open " + stem + ".json");
    hdr << header.dump(2) << "\n";
}

} // namespace lab

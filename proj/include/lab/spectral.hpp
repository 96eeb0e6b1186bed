#ifndef LAB_SPECTRAL_HPP
#define LAB_SPECTRAL_HPP

// The frequency side of the laboratory: rasterized indicator transforms,
// annulus (shell) energies and their rotational cousins, the compactly
// supported bump kernel K_M with certified decay, the Cassels-Montgomery
// quadratic form, and the Plancherel bridge between spatial and spectral
// discrepancy energies.

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "lab/bessel.hpp"
#include "lab/measure.hpp"
#include "lab/pointset.hpp"
#include "lab/shape.hpp"
#include "lab/vec.hpp"

namespace lab {

// Indicator of a shape rasterized on an L x L grid over the square
// [-S/2, S/2]^2, together with its discrete Fourier transform scaled to
// approximate the continuous one.  The pair (raster, hat) is kept an exact
// DFT pair, so Parseval holds to rounding:
//   sum |raster|^2 cell^2 == sum |hat|^2 / S^2.
// The raster starts as a subsampled coverage fraction per cell and is then
// deconvolved by the cell window (the hat is divided by the per-axis sinc
// transfer), which removes the systematic low-pass bias of cell averaging;
// boundary cells may therefore hold values slightly outside [0, 1].
struct SpectralGrid {
    int L = 0;          // grid side, a power of two
    double S = 0.0;     // box side; frequency spacing is 1/S
    double cell = 0.0;  // S / L
    std::vector<double> raster;              // row-major, x fastest
    std::vector<std::complex<double>> hat;   // same layout, FFT bin order

    // frequency of bin k along either axis (bins above L/2 are negative)
    double freq(int k) const;
    // largest frequency magnitude resolved along an axis, L/(2S)
    double nyquist() const;
    // bilinear interpolation of the transform at an arbitrary frequency;
    // throws outside the resolved square.  Exact at lattice frequencies
    // (integer multiples of 1/S); between bins an oscillatory transform is
    // sampled only ~twice per period, so pointwise lookups there are rough
    // and the intended consumers are averages over many frequencies.
    std::complex<double> hat_at(Vec2 xi) const;

    double spatial_energy() const;   // sum raster^2 * cell^2
    double spectral_energy() const;  // sum |hat|^2 / S^2
};

// Rasterize a shape.  Preconditions: L a power of two (>= 16) and
// S >= 2 * bounding_radius(shape) + 2, both enforced.
SpectralGrid make_spectral_grid(const Shape& shape, int L, double S);

// Lemma-style annulus bounds gamma*rho <= |xi| < delta*rho.  The half-open
// outer edge makes consecutive dyadic shells tile frequency space exactly.
struct ShellBand {
    double gamma = 0.125;
    double delta = 8.0;
};

// Riemann sum of |hat|^2 over the annulus at scale rho.  Throws if the outer
// radius delta*rho exceeds the grid's Nyquist frequency.
double shell_energy(const SpectralGrid& grid, double rho, ShellBand band = {});

// Riemann sum of |hat|^2 over the centered disk |xi| < rho (the
// low-frequency complement of the shell decomposition).
double disk_energy(const SpectralGrid& grid, double rho);

// sup over a fine grid of u in [u_lo, u_hi] of u^{3/2} |E_d(u)| where E_d is
// the oscillatory remainder of the Bessel asymptotic for J_{d/2}(2 pi u).
double bessel_asymptotic_sup(int d, double u_lo, double u_hi);

// Monte Carlo average over dilations u ~ U[gamma, delta] and rotations sigma
// of |FT of the indicator of u sigma Omega|^2 at frequency magnitude xi_mag,
// i.e. of u^{2d} |chi_hat(u sigma^{-1} xi)|^2.  Balls use the closed form;
// any other shape needs `grid` (a SpectralGrid of that shape) with
// delta * xi_mag below its Nyquist frequency.
double rotational_band_energy(const Shape& shape, double xi_mag, double gamma,
                              double delta, int n_rot, std::uint64_t seed,
                              const SpectralGrid* grid = nullptr);

// Smooth compactly supported kernel at scale M: the base bump
// psi(x) = c exp(-1/(1 - |2x|^2)) on |x| < 1/2 (unit integral) defines
// K via K_hat(xi) = psi*psi(xi) / psi*psi(0), so K = |psi_hat|^2 / ||psi||_2^2
// is nonnegative, K_hat lives in [0, 1] and vanishes for |xi| >= 1, and the
// scaled kernel is K_M(x) = M^d K(Mx) with K_hat_M(xi) = K_hat(xi / M).
// Radial tables are built once by quadrature and certified against the
// invariants below; build_kernel throws if any certification fails.
struct BumpKernel {
    double M = 1.0;
    int L_decay = 8;          // polynomial decay order certified for K
    int d = 2;
    double norm_psi_sq = 0.0; // psi*psi(0) = ||psi||_2^2, the normalizer
    double K0 = 0.0;          // K(0) = 1 / ||psi||_2^2
    double decay_constant = 0.0; // sup over |y| >= 1 of |y|^{L_decay} K(y)

    // K_hat_M at frequency magnitude xi_mag: in [0,1], zero beyond M
    double khat(double xi_mag) const;
    // K_M at spatial radius r: M^d K(M r)
    double k_m(double r) const;

    // radial tables (implementation detail, exposed for reports)
    std::vector<double> khat_radial; // K_hat on [0, 1], uniform nodes
    std::vector<double> k_near;      // K on [0, k_near_max], uniform nodes
    std::vector<double> k_far;       // K on [k_near_max, k_far_max], uniform
    double k_near_max = 0.0;
    double k_far_max = 0.0;
};

BumpKernel build_kernel(double M, int L_decay = 8);

// Hunt for the largest |K_M * mu(z)| over `trials` probe points drawn from
// the measure (half of them jittered at scale 1/M); reports the maximum and
// its ratio to M^{d - alpha}, the scaling the kernel bound predicts.
struct ConvolutionBound {
    double max_abs = 0.0;
    double ratio = 0.0;
};
ConvolutionBound km_convolution_bound(const MeasureSpec& mu, const BumpKernel& kernel,
                                      int trials, std::uint64_t seed);

// Grid sum of |sum_j e^{-2 pi i xi . z_j} - N mu_hat(xi)|^2 over the annulus
// 1 <= |xi| <= M, with a Richardson half-resolution pass as discretization
// estimate.  grid_n is the fine cell count per axis (0 picks one from M).
struct QuadraticFormResult {
    double value = 0.0;
    double disc_error = 0.0; // |fine - coarse| / 3
};
QuadraticFormResult cassels_montgomery(const PointSet& ps, const MeasureSpec& mu,
                                       double M, int grid_n = 0);

// Both sides of the Plancherel identity for the discrepancy of a fixed
// dilation-rotation (tau, sigma) of Omega, averaged over translations:
//   spatial  = integral of |D_N(x)|^2 dx   (translation-grid sum, L x L)
//   spectral = integral of |S(xi) - N mu_hat(xi)|^2 |chi_hat(xi)|^2 dxi
// (polar quadrature with the two factors in closed form).  Throws if the two
// sides disagree by more than 10%, which signals an under-resolved grid.
struct PlancherelResult {
    double spatial = 0.0;
    double spectral = 0.0;
    double gap = 0.0; // |spatial - spectral| / spectral
};
PlancherelResult plancherel_bridge(const PointSet& ps, const MeasureSpec& mu,
                                   const Shape& shape, double tau, const Rot2& sigma,
                                   int grid_L);

// Shell-energy table and CSV reports.
struct ShellRow {
    double rho = 0.0;
    double energy = 0.0;
};
std::vector<ShellRow> shell_table(const SpectralGrid& grid,
                                  const std::vector<double>& rhos, ShellBand band = {});
void write_shell_table_csv(const std::string& path, const std::vector<ShellRow>& rows);
void write_kernel_report_csv(const std::string& path, const BumpKernel& kernel);

// Raw dump of the raster: `stem.bin` holds L*L little-endian float64 values
// row-major, and `stem.json` describes the layout.
void write_grid_binary(const SpectralGrid& grid, const std::string& stem);

} // namespace lab

#endif

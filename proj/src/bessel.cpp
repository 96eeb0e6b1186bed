#include "lab/bessel.hpp"

#include <cmath>
#include <stdexcept>

namespace lab {

namespace {

// Ascending series J_nu(x) for nu = 0, 1; good to ~1e-14 relative for x <= 12
// (worst-case cancellation near the switch point costs a few digits, still
// well below the accuracy the lab needs).
double j0_series(double x) {
    const double q = 0.25 * x * x;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 64; ++k) {
        term *= -q / (static_cast<double>(k) * k);
        sum += term;
        if (std::fabs(term) < 1e-18 * (1.0 + std::fabs(sum))) break;
    }
    return sum;
}

double j1_series(double x) {
    const double q = 0.25 * x * x;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 64; ++k) {
        term *= -q / (static_cast<double>(k) * (k + 1.0));
        sum += term;
        if (std::fabs(term) < 1e-18 * (1.0 + std::fabs(sum))) break;
    }
    return 0.5 * x * sum;
}

// Hankel asymptotic expansion
//   J_nu(x) ~ sqrt(2/(pi x)) [ P(x) cos(chi) - Q(x) sin(chi) ],
//   chi = x - nu pi/2 - pi/4,
// with a_k = prod_{m<=k} (mu - (2m-1)^2) / (k! 8^k), mu = 4 nu^2.  Terms are
// added while they shrink; at x >= 12 truncation error is below 1e-10.
double j_asymptotic(int nu, double x) {
    const double mu = 4.0 * nu * nu;
    double p = 1.0, q = 0.0;
    double ak = 1.0;
    double prev = 1e300;
    for (int k = 1; k <= 12; ++k) {
        const double odd = (2.0 * k - 1.0);
        ak *= (mu - odd * odd) / (k * 8.0 * x);
        const double mag = std::fabs(ak);
        if (mag > prev) break; // asymptotic tail started to diverge
        prev = mag;
        switch (k & 3) {
            case 1: q += ak; break;
            case 2: p -= ak; break;
            case 3: q -= ak; break;
            case 0: p += ak; break;
        }
        if (mag < 1e-17) break;
    }
    const double chi = x - nu * (M_PI / 2.0) - M_PI / 4.0;
    return std::sqrt(2.0 / (M_PI * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

const double kSwitch = 12.0;

} // namespace

double bessel_j0(double x) {
    x = std::fabs(x);
    return x <= kSwitch ? j0_series(x) : j_asymptotic(0, x);
}

double bessel_j1(double x) {
    const double ax = std::fabs(x);
    const double v = ax <= kSwitch ? j1_series(ax) : j_asymptotic(1, ax);
    return x < 0.0 ? -v : v;
}

double bessel_j32(double x) {
    if (x <= 0.0) {
        if (x == 0.0) return 0.0;
        throw std::invalid_argument("bessel_j32: argument must be >= 0");
    }
    double g; // sin(x)/x - cos(x)
    if (x < 0.5) {
        // sum_{k>=1} (-1)^{k+1} x^{2k} * 2k/(2k+1)!  -- avoids the subtractive
        // cancellation of the direct formula near zero.
        const double z2 = x * x;
        double term = z2 / 3.0;
        g = term;
        for (int k = 1; k < 20; ++k) {
            term *= -z2 * (k + 1.0) / (k * (2.0 * k + 2.0) * (2.0 * k + 3.0));
            g += term;
            if (std::fabs(term) < 1e-17 * std::fabs(g)) break;
        }
    } else {
        g = std::sin(x) / x - std::cos(x);
    }
    return std::sqrt(2.0 / (M_PI * x)) * g;
}

double ball_indicator_ft(int d, double r, double xi_norm) {
    if (d != 2 && d != 3) throw std::invalid_argument("ball_indicator_ft: d must be 2 or 3");
    if (!(r > 0.0)) throw std::invalid_argument("ball_indicator_ft: radius must be positive");
    xi_norm = std::fabs(xi_norm);
    const double u = 2.0 * M_PI * r * xi_norm;
    if (d == 2) {
        if (u < 1e-4) {
            // pi r^2 (1 - u^2/8 + u^4/192)
            return M_PI * r * r * (1.0 - u * u / 8.0 + u * u * u * u / 192.0);
        }
        return r / xi_norm * bessel_j1(u);
    }
    if (u < 1e-4) {
        // (4/3) pi r^3 (1 - u^2/10 + u^4/280)
        return (4.0 / 3.0) * M_PI * r * r * r * (1.0 - u * u / 10.0 + u * u * u * u / 280.0);
    }
    return std::pow(r, 1.5) * std::pow(xi_norm, -1.5) * bessel_j32(u);
}

double bessel_asymptotic_remainder(int d, double u) {
    if (d != 2 && d != 3) throw std::invalid_argument("bessel_asymptotic_remainder: d must be 2 or 3");
    if (!(u > 0.0)) throw std::invalid_argument("bessel_asymptotic_remainder: u must be positive");
    const double x = 2.0 * M_PI * u;
    const double lead = std::cos(x - (d + 1) * M_PI / 4.0) / (M_PI * std::sqrt(u));
    const double j = (d == 2) ? bessel_j1(x) : bessel_j32(x);
    return j - lead;
}

} // namespace lab

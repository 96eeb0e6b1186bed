#ifndef LAB_BESSEL_HPP
#define LAB_BESSEL_HPP

// Bessel functions of the first kind as needed by the ball indicator
// transform: integer orders 0 and 1 (power series for small argument, Hankel
// asymptotic expansion with P/Q correction series for large), and the
// half-integer order 3/2 in closed form.

namespace lab {

double bessel_j0(double x);
double bessel_j1(double x);
// J_{3/2}(x) = sqrt(2/(pi x)) * (sin x / x - cos x), series-protected near 0.
double bessel_j32(double x);

// Fourier transform of the indicator of the ball of radius r in dimension d
// (2 or 3), evaluated at frequency magnitude |xi|:
//   r^{d/2} |xi|^{-d/2} J_{d/2}(2 pi r |xi|),
// with the |xi| -> 0 limit equal to the ball volume.
double ball_indicator_ft(int d, double r, double xi_norm);

// Remainder E_d(u) = J_{d/2}(2 pi u) - pi^{-1} u^{-1/2} cos(2 pi u - (d+1) pi/4).
// Theory bounds |E_d(u)| by a constant times u^{-3/2}.
double bessel_asymptotic_remainder(int d, double u);

} // namespace lab

#endif

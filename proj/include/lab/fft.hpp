#ifndef LAB_FFT_HPP
#define LAB_FFT_HPP

// Radix-2 complex FFT, sized for the square spectral rasters used by the
// frequency-side estimators.  Forward transform uses the e^{-2*pi*i*jk/n}
// kernel and no normalization; the inverse divides by n, so a forward
// followed by an inverse is the identity.

#include <complex>
#include <vector>

namespace lab {

// In-place transform of a power-of-two length vector.
void fft(std::vector<std::complex<double>>& a, bool inverse = false);

// In-place transform of a row-major L x L field (rows first, then columns),
// parallel over rows/columns.
void fft2d(std::vector<std::complex<double>>& a, int L, bool inverse = false);

} // namespace lab

#endif

#include "lab/fft.hpp"

#include <cmath>
#include <stdexcept>

#include "lab/parallel.hpp"

namespace lab {

namespace {

bool power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// twiddle table: w[k] = exp(-2*pi*i*k/n) for k < n/2
std::vector<std::complex<double>> twiddles(std::size_t n) {
    std::vector<std::complex<double>> w(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double t = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
        w[k] = {std::cos(t), std::sin(t)};
    }
    return w;
}

void fft_core(std::complex<double>* a, std::size_t n,
              const std::vector<std::complex<double>>& w, bool inverse) {
    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t step = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> tw = w[k * step];
                if (inverse) tw = std::conj(tw);
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * tw;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) a[i] *= inv;
    }
}

} // namespace

void fft(std::vector<std::complex<double>>& a, bool inverse) {
    if (!power_of_two(a.size()))
        throw std::invalid_argument("fft: length must be a power of two");
    if (a.size() == 1) return;
    fft_core(a.data(), a.size(), twiddles(a.size()), inverse);
}

void fft2d(std::vector<std::complex<double>>& a, int L, bool inverse) {
    const std::size_t n = static_cast<std::size_t>(L);
    if (L < 1 || !power_of_two(n))
        throw std::invalid_argument("fft2d: side must be a power of two");
    if (a.size() != n * n)
        throw std::invalid_argument("fft2d: field size does not match the side");
    if (L == 1) return;
    const auto w = twiddles(n);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t row = lo; row < hi; ++row)
            fft_core(a.data() + row * n, n, w, inverse);
    });
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        std::vector<std::complex<double>> col(n);
        for (std::size_t c = lo; c < hi; ++c) {
            for (std::size_t r = 0; r < n; ++r) col[r] = a[r * n + c];
            fft_core(col.data(), n, w, inverse);
            for (std::size_t r = 0; r < n; ++r) a[r * n + c] = col[r];
        }
    });
}

} // namespace lab

#include "modal/fft.hpp"

#include <cmath>

namespace modal {

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n)
        p <<= 1;
    return p;
}

void fft_inplace(std::vector<cplx>& a) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw input_error("fft_inplace: size must be a power of two");
    // bit reversal
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1)
            j ^= bit;
        j ^= bit;
        if (i < j)
            std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * M_PI / static_cast<double>(len);
        const cplx wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                cplx u = a[i + k];
                cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

std::vector<cplx> fft(std::span<const cplx> data, std::size_t nfft) {
    if (nfft == 0)
        nfft = next_pow2(data.size());
    std::vector<cplx> a(nfft, cplx(0.0, 0.0));
    std::copy(data.begin(), data.begin() + std::min(data.size(), nfft), a.begin());
    fft_inplace(a);
    return a;
}

std::vector<cplx> fft_real(std::span<const double> data, std::size_t nfft) {
    if (nfft == 0)
        nfft = next_pow2(data.size());
    std::vector<cplx> a(nfft, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < std::min(data.size(), nfft); ++i)
        a[i] = cplx(data[i], 0.0);
    fft_inplace(a);
    return a;
}

std::size_t peak_bin(std::span<const cplx> spectrum) {
    std::size_t best = 0;
    double best_mag = -1.0;
    for (std::size_t i = 0; i <= spectrum.size() / 2; ++i) {
        double m = std::abs(spectrum[i]);
        if (m > best_mag) {
            best_mag = m;
            best = i;
        }
    }
    return best;
}

} // namespace modal

#pragma once

#include <span>

#include "modal/types.hpp"

namespace modal {

std::size_t next_pow2(std::size_t n);

// In-place radix-2 DIT; size must be a power of two.
void fft_inplace(std::vector<cplx>& a);

// Zero-padded forward FFT of arbitrary-length data. nfft = 0 picks the next
// power of two >= data size.
std::vector<cplx> fft(std::span<const cplx> data, std::size_t nfft = 0);
std::vector<cplx> fft_real(std::span<const double> data, std::size_t nfft = 0);

// Bin index of the largest magnitude in [0, nfft/2].
std::size_t peak_bin(std::span<const cplx> spectrum);

} // namespace modal

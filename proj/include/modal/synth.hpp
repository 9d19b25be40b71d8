#pragma once

#include "modal/types.hpp"

namespace modal {

/// One resonator section b0 + b1 z^-1 over 1 + a1 z^-1 + a2 z^-2 (a0 = 1).
/// DC and Nyquist modes degenerate to first order (a2 = 0, b1 = 0).
struct BiquadCoeffs {
    double b0 = 0.0, b1 = 0.0;
    double a1 = 0.0, a2 = 0.0;
};

BiquadCoeffs biquad_coeffs(const Mode& mode);

/// Impulse response of one section by direct recursion.
std::vector<double> biquad_impulse(const BiquadCoeffs& c, std::size_t t_len);

/// Closed-form rendering of the modal sum with pairwise summation across
/// modes. Matches generate() on identical parameters.
Signal render(const ModeSet& modes, std::size_t t_len);

/// |sum of biquad transfer functions| on a uniform grid over [0, fs/2],
/// in dB floored at kDbFloor. Returns (freq_hz, dB) pairs.
std::vector<std::pair<double, double>> magnitude_response(const ModeSet& modes,
                                                          std::size_t n_points);

} // namespace modal

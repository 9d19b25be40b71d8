#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "modal/types.hpp"

namespace testutil {

// Deterministic uniform/normal source independent of the stdlib.
struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t seed) : state(seed) {}

    double uniform() { // (0, 1)
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return (static_cast<double>(z >> 11) + 0.5) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() {
        return std::sqrt(-2.0 * std::log(uniform())) * std::cos(2.0 * M_PI * uniform());
    }
};

// Largest-magnitude DFT bin over [0, n/2] by direct summation; independent
// of the library FFT.
inline std::size_t brute_peak_bin(const std::vector<double>& x, std::size_t nfft) {
    std::size_t best = 0;
    double best_mag = -1.0;
    for (std::size_t k = 0; k <= nfft / 2; ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t t = 0; t < x.size(); ++t) {
            const double ang = -2.0 * M_PI * static_cast<double>(k * t) /
                               static_cast<double>(nfft);
            re += x[t] * std::cos(ang);
            im += x[t] * std::sin(ang);
        }
        const double mag = re * re + im * im;
        if (mag > best_mag) {
            best_mag = mag;
            best = k;
        }
    }
    return best;
}

// Impulse response of a cascade of `sections` first-order allpass stages
// (z^-1 + rho)/(1 + rho z^-1), by explicit convolution of per-stage
// responses. Oracle for the chain-warp implementation.
inline std::vector<double> cascade_allpass_impulse(int sections, double rho,
                                                   std::size_t t_len) {
    std::vector<double> acc(t_len, 0.0);
    acc[0] = 1.0;
    std::vector<double> one(t_len, 0.0); // single-section impulse response
    // y[k] = rho x[k] + x[k-1] - rho y[k-1], x = delta
    double prev_in = 0.0, prev_out = 0.0;
    for (std::size_t k = 0; k < t_len; ++k) {
        const double x = k == 0 ? 1.0 : 0.0;
        one[k] = rho * x + prev_in - rho * prev_out;
        prev_in = x;
        prev_out = one[k];
    }
    for (int s = 0; s < sections; ++s) {
        std::vector<double> next(t_len, 0.0);
        for (std::size_t i = 0; i < t_len; ++i)
            for (std::size_t j = 0; i + j < t_len; ++j)
                next[i + j] += acc[i] * one[j];
        acc = std::move(next);
    }
    return acc;
}

// Brute-force knee point: max signed distance above the chord through the
// endpoints of the log10 curve, 1-based count.
inline std::size_t brute_knee(const std::vector<double>& sv) {
    const std::size_t n = sv.size();
    std::vector<double> logs(n);
    for (std::size_t i = 0; i < n; ++i)
        logs[i] = std::log10(std::max(sv[i], sv[0] * 1e-20));
    const double x1 = 0.0, y1 = logs[0];
    const double x2 = static_cast<double>(n - 1), y2 = logs[n - 1];
    // endpoints are on the chord by definition; ties break to index 0
    std::size_t best = 0;
    double best_d = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        // signed perpendicular distance from (i, logs[i]) to the chord
        const double d = ((y2 - y1) * static_cast<double>(i) - (x2 - x1) * logs[i] +
                          x2 * y1 - y2 * x1) /
                         -std::hypot(x2 - x1, y2 - y1);
        if (d > best_d) {
            best_d = d;
            best = i;
        }
    }
    return best + 1;
}

} // namespace testutil

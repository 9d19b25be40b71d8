#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "modal/types.hpp"

namespace modal {

/// One partial of a synthetic test signal: a cluster of 1..3 detuned modes
/// around a center frequency. Cluster layouts: {f}, {f - d, f + d},
/// {f - d, f, f + d}.
struct PartialSpec {
    double freq_hz = 0.0;
    int cluster = 1;
    double detune_hz = 0.0;
    std::array<double, 3> alpha{};   // nepers/sample, per member
    std::array<double, 3> gamma_s{};
    std::array<double, 3> gamma_c{};
};

struct SyntheticSpec {
    std::vector<PartialSpec> partials;
    std::optional<double> noise_snr_db;
    std::uint64_t noise_seed = 1;

    // Single mode at an explicit frequency.
    SyntheticSpec& add_mode(double freq_hz, double alpha, double gamma_c, double gamma_s = 0.0);
    // Cluster of `cluster` members detuned by +/- detune_hz, shared alpha/amplitude.
    SyntheticSpec& add_cluster(double center_hz, double detune_hz, int cluster, double alpha,
                               double gamma_c, double gamma_s = 0.0);

    // Stiff-string partial series f_n = n f0 sqrt(1 + B n^2), one partial each.
    static SyntheticSpec inharmonic_series(double f0_hz, double inharmonicity_b,
                                           int n_partials, double alpha, double gamma_c);
};

/// Flattened generator modes (frequency still in Hz). Validates frequencies
/// against Nyquist, naming the offending partial.
std::vector<Mode> expand_spec(const SyntheticSpec& spec, double sample_rate);

/// Direct evaluation of the modal sum, plus white Gaussian noise scaled to
/// noise_snr_db when set.
Signal generate(const SyntheticSpec& spec, std::size_t duration_samples, double sample_rate);

/// Energy-normalized mean squared error in dB, floored at kDbFloor:
/// 10 log10( sum |h - hhat|^2 / sum |h|^2 ).
double mse_db(const Signal& measured, const Signal& modeled);

} // namespace modal

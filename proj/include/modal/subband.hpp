#pragma once

#include <optional>

#include "modal/esprit.hpp"
#include "modal/types.hpp"

namespace modal {

struct FilterSpec {
    enum class Family { Butterworth };
    Family family = Family::Butterworth;
    int order = 4;
    double cutoff_hz = 0.0; // one-sided passband of the heterodyned band
    std::optional<double> stopband_db;
    std::optional<double> passband_ripple_db;
};

struct Band {
    double center_hz = 0.0;
    double half_bandwidth_hz = 0.0; // equals the filter cutoff
    int decimation = 1;
    FilterSpec filter;
    std::size_t max_modes = 100;
};

enum class BandScheme { HarmonicInharmonic, BarkSpaced, UniformGrid };

struct BandPlan {
    std::vector<Band> bands;
    BandScheme scheme = BandScheme::UniformGrid;
    double sample_rate = 0.0;
    int requested_decimation = 1;

    // Half-open ownership regions at midpoints between adjacent centers,
    // extended to 0 and fs/2 at the outer edges. Region b is
    // [edges[b], edges[b+1]).
    std::vector<double> ownership_edges() const;
    void validate() const;
};

/// Stiff-string band plan: centers f_n = n f0 sqrt(1 + B n^2); partials at or
/// above Nyquist are dropped. Per-band decimation is clamped so the passband
/// cannot alias.
BandPlan plan_harmonic(double f0_hz, double inharmonicity_b, int n_partials,
                       double sample_rate, int decimation, double bw_fraction = 0.1,
                       int filter_order = 4, std::size_t max_modes = 10);

/// Bark-like plan: uniform centers mapped through the compressive warp for
/// the given (positive) rho, bandwidths overlap_factor * half the gap to the
/// next center.
BandPlan plan_bark(int n_bands, double sample_rate, double rho, double overlap_factor = 1.2,
                   int decimation = 8, int filter_order = 14, std::size_t max_modes = 100);

/// Uniform centers f_n = (2n-1) fs / (4 Nb).
BandPlan plan_uniform(int n_bands, double sample_rate, double overlap_factor = 1.2,
                      int decimation = 8, int filter_order = 14, std::size_t max_modes = 100);

/// h(t) e^{-j 2 pi f t / fs}; output is flagged complex.
Signal heterodyne(const Signal& signal, double freq_hz);

/// One second-order section; a0 normalized to 1.
struct Sos {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
};

/// Bilinear-transform Butterworth lowpass as SOS cascade; cutoff_norm is the
/// cutoff over Nyquist, in (0, 1). Unity DC gain.
std::vector<Sos> butterworth_lowpass(int order, double cutoff_norm);

void sos_filter_inplace(std::vector<cplx>& x, const std::vector<Sos>& sections);
void sos_filter_inplace(std::vector<double>& x, const std::vector<Sos>& sections);

/// IIR lowpass then keep every r-th sample; output rate fs/r.
Signal lowpass_decimate(const Signal& signal, const FilterSpec& spec, int r);

/// Real band-limited slice via the difference of two Butterworth lowpasses;
/// used by the optimizer at full rate.
Signal bandlimit(const Signal& signal, double lo_hz, double hi_hz, int order);

/// Shift band-local estimates up the spectrum and unwind decimation:
/// omega_global = omega_band / r + 2 pi f / fs, alpha_global = alpha_band / r.
/// Results outside [0, pi) are dropped with a diagnostic.
std::vector<DampedPole> band_modes_to_global(const std::vector<DampedPole>& band_poles,
                                             double center_hz, int r, double sample_rate,
                                             EstimationLog* log = nullptr);

struct FzOptions {
    std::size_t max_hankel = 512;
    double transient_factor = 4.0; // discarded settle time ~ factor*order/cutoff
};

/// FZ-ESPRIT: per band heterodyne -> lowpass/decimate -> ESPRIT (capped) ->
/// shift back; overlap modes discarded by ownership region, unused budget
/// redistributed once, then one joint amplitude fit at the full rate.
ModeSet fz_esprit(const Signal& signal, const BandPlan& plan, const OrderSpec& order,
                  const FzOptions& opts = {}, EstimationLog* log = nullptr);

} // namespace modal

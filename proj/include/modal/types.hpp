#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace modal {

using cplx = std::complex<double>;

// Malformed input: bad files, bad arguments, violated preconditions.
struct input_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Computation cannot proceed: rank deficiency, unstable filter, divergence.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Slack for marginally unstable poles, |psi| <= 1 + kAlphaTol.
inline constexpr double kAlphaTol = 1e-9;

// Floor for all dB conversions so plots and reports stay finite.
inline constexpr double kDbFloor = -300.0;

/// Uniformly sampled time series. Real signals keep exact-zero imaginary
/// parts so downstream code can branch on is_real() without tolerances.
class Signal {
  public:
    Signal(std::vector<cplx> samples, double sample_rate, bool real);

    static Signal from_real(std::vector<double> samples, double sample_rate);
    static Signal from_complex(std::vector<cplx> samples, double sample_rate);

    std::size_t size() const { return samples_.size(); }
    double sample_rate() const { return sample_rate_; }
    bool is_real() const { return real_; }

    const std::vector<cplx>& samples() const { return samples_; }
    cplx operator[](std::size_t i) const { return samples_[i]; }

    // Real view; valid only when is_real().
    std::vector<double> real_samples() const;

    double energy() const;

  private:
    std::vector<cplx> samples_;
    double sample_rate_ = 0.0;
    bool real_ = true;
};

/// One damped sinusoid. omega in rad/sample on [0, pi]; alpha in
/// nepers/sample. Amplitudes are the sine/cosine pair of the real form
///   e^{-alpha t} (gamma_s sin(omega t) + gamma_c cos(omega t)),
/// equivalently Re(gamma e^{(j omega - alpha) t}) with
/// gamma = gamma_c - j gamma_s.
class Mode {
  public:
    Mode(double omega, double alpha, double gamma_s = 0.0, double gamma_c = 0.0);

    static Mode from_complex_gamma(double omega, double alpha, cplx gamma);

    double omega() const { return omega_; }
    double alpha() const { return alpha_; }
    double gamma_s() const { return gamma_s_; }
    double gamma_c() const { return gamma_c_; }

    cplx gamma() const { return {gamma_c_, -gamma_s_}; }
    cplx pole() const { return std::polar(std::exp(-alpha_), omega_); }

    double freq_hz(double sample_rate) const;
    // Time for the envelope to decay 60 dB, in seconds. +inf when alpha <= 0.
    double t60_seconds(double sample_rate) const;

  private:
    double omega_, alpha_, gamma_s_, gamma_c_;
};

enum class ModeSource { Plain, Warped, Merged, Subband, Optimized };

const char* to_string(ModeSource s);
ModeSource mode_source_from_string(const std::string& s);

/// Frequency-ordered mode collection. Construction sorts by (omega, alpha)
/// and rejects exact duplicates (both within 1e-12).
class ModeSet {
  public:
    ModeSet(std::vector<Mode> modes, ModeSource source, double sample_rate);

    const std::vector<Mode>& modes() const { return modes_; }
    std::size_t size() const { return modes_.size(); }
    const Mode& operator[](std::size_t i) const { return modes_[i]; }
    ModeSource source() const { return source_; }
    double sample_rate() const { return sample_rate_; }

  private:
    std::vector<Mode> modes_;
    ModeSource source_ = ModeSource::Plain;
    double sample_rate_ = 0.0;
};

/// (omega, alpha) pair before amplitudes are attached. omega may be signed
/// while a pole is still referenced to a heterodyned band.
struct DampedPole {
    double omega = 0.0;
    double alpha = 0.0;
};

/// Per-run diagnostics: pipelines count what they drop instead of failing.
struct EstimationLog {
    std::size_t dropped_origin = 0;        // poles at/near z = 0
    std::size_t dropped_unstable = 0;      // |psi| beyond tolerance
    std::size_t dropped_alpha_ceiling = 0; // numerically dead modes
    std::size_t dropped_out_of_band = 0;   // outside [0, pi) or ownership region
    std::size_t clamped_marginal = 0;      // snapped back to |psi| = 1 + tol
    std::size_t tie_breaks = 0;
    std::vector<std::string> notes;

    void note(std::string s) { notes.push_back(std::move(s)); }
};

} // namespace modal

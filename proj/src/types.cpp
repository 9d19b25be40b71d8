#include "modal/types.hpp"

#include <algorithm>
#include <cmath>

namespace modal {

Signal::Signal(std::vector<cplx> samples, double sample_rate, bool real)
    : samples_(std::move(samples)), sample_rate_(sample_rate), real_(real) {
    if (samples_.empty())
        throw input_error("Signal: length must be >= 1");
    if (!(sample_rate_ > 0.0))
        throw input_error("Signal: sample_rate must be positive");
    if (real_) {
        for (const cplx& s : samples_)
            if (s.imag() != 0.0)
                throw input_error("Signal: real signal has nonzero imaginary part");
    }
}

Signal Signal::from_real(std::vector<double> samples, double sample_rate) {
    std::vector<cplx> c(samples.size());
    std::transform(samples.begin(), samples.end(), c.begin(),
                   [](double x) { return cplx(x, 0.0); });
    return Signal(std::move(c), sample_rate, true);
}

Signal Signal::from_complex(std::vector<cplx> samples, double sample_rate) {
    return Signal(std::move(samples), sample_rate, false);
}

std::vector<double> Signal::real_samples() const {
    std::vector<double> r(samples_.size());
    std::transform(samples_.begin(), samples_.end(), r.begin(),
                   [](const cplx& s) { return s.real(); });
    return r;
}

double Signal::energy() const {
    double e = 0.0;
    for (const cplx& s : samples_)
        e += std::norm(s);
    return e;
}

Mode::Mode(double omega, double alpha, double gamma_s, double gamma_c)
    : omega_(omega), alpha_(alpha), gamma_s_(gamma_s), gamma_c_(gamma_c) {
    if (!(omega_ >= 0.0 && omega_ <= M_PI))
        throw input_error("Mode: omega must lie in [0, pi], got " + std::to_string(omega_));
    if (!(alpha_ >= -kAlphaTol))
        throw input_error("Mode: alpha below -tolerance (pole outside unit circle), got " +
                          std::to_string(alpha_));
    if (!std::isfinite(alpha_) || !std::isfinite(gamma_s_) || !std::isfinite(gamma_c_))
        throw input_error("Mode: non-finite parameter");
}

Mode Mode::from_complex_gamma(double omega, double alpha, cplx gamma) {
    return Mode(omega, alpha, -gamma.imag(), gamma.real());
}

double Mode::freq_hz(double sample_rate) const {
    return omega_ / (2.0 * M_PI) * sample_rate;
}

double Mode::t60_seconds(double sample_rate) const {
    if (alpha_ <= 0.0)
        return std::numeric_limits<double>::infinity();
    return std::log(1000.0) / alpha_ / sample_rate;
}

const char* to_string(ModeSource s) {
    switch (s) {
    case ModeSource::Plain: return "plain";
    case ModeSource::Warped: return "warped";
    case ModeSource::Merged: return "merged";
    case ModeSource::Subband: return "subband";
    case ModeSource::Optimized: return "optimized";
    }
    return "plain";
}

ModeSource mode_source_from_string(const std::string& s) {
    if (s == "warped") return ModeSource::Warped;
    if (s == "merged") return ModeSource::Merged;
    if (s == "subband") return ModeSource::Subband;
    if (s == "optimized") return ModeSource::Optimized;
    return ModeSource::Plain;
}

ModeSet::ModeSet(std::vector<Mode> modes, ModeSource source, double sample_rate)
    : modes_(std::move(modes)), source_(source), sample_rate_(sample_rate) {
    if (!(sample_rate_ > 0.0))
        throw input_error("ModeSet: sample_rate must be positive");
    std::sort(modes_.begin(), modes_.end(), [](const Mode& a, const Mode& b) {
        if (a.omega() != b.omega())
            return a.omega() < b.omega();
        return a.alpha() < b.alpha();
    });
    for (std::size_t i = 1; i < modes_.size(); ++i) {
        if (std::abs(modes_[i].omega() - modes_[i - 1].omega()) <= 1e-12 &&
            std::abs(modes_[i].alpha() - modes_[i - 1].alpha()) <= 1e-12)
            throw input_error("ModeSet: duplicate (omega, alpha) at index " + std::to_string(i));
    }
}

} // namespace modal

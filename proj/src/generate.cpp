#include "modal/generate.hpp"

#include <cmath>

namespace modal {

SyntheticSpec& SyntheticSpec::add_mode(double freq_hz, double alpha, double gamma_c,
                                       double gamma_s) {
    PartialSpec p;
    p.freq_hz = freq_hz;
    p.cluster = 1;
    p.alpha[0] = alpha;
    p.gamma_c[0] = gamma_c;
    p.gamma_s[0] = gamma_s;
    partials.push_back(p);
    return *this;
}

SyntheticSpec& SyntheticSpec::add_cluster(double center_hz, double detune_hz, int cluster,
                                          double alpha, double gamma_c, double gamma_s) {
    PartialSpec p;
    p.freq_hz = center_hz;
    p.cluster = cluster;
    p.detune_hz = detune_hz;
    p.alpha.fill(alpha);
    p.gamma_c.fill(gamma_c);
    p.gamma_s.fill(gamma_s);
    partials.push_back(p);
    return *this;
}

SyntheticSpec SyntheticSpec::inharmonic_series(double f0_hz, double inharmonicity_b,
                                               int n_partials, double alpha, double gamma_c) {
    SyntheticSpec spec;
    for (int n = 1; n <= n_partials; ++n) {
        double fn = n * f0_hz * std::sqrt(1.0 + inharmonicity_b * n * n);
        spec.add_mode(fn, alpha, gamma_c);
    }
    return spec;
}

std::vector<Mode> expand_spec(const SyntheticSpec& spec, double sample_rate) {
    if (!(sample_rate > 0.0))
        throw input_error("expand_spec: sample_rate must be positive");
    std::vector<Mode> modes;
    for (std::size_t i = 0; i < spec.partials.size(); ++i) {
        const PartialSpec& p = spec.partials[i];
        if (p.cluster < 1 || p.cluster > 3)
            throw input_error("expand_spec: partial " + std::to_string(i) +
                              " cluster size must be 1, 2 or 3");
        std::array<double, 3> freqs{};
        switch (p.cluster) {
        case 1: freqs = {p.freq_hz, 0, 0}; break;
        case 2: freqs = {p.freq_hz - p.detune_hz, p.freq_hz + p.detune_hz, 0}; break;
        case 3:
            freqs = {p.freq_hz - p.detune_hz, p.freq_hz, p.freq_hz + p.detune_hz};
            break;
        }
        for (int m = 0; m < p.cluster; ++m) {
            if (freqs[m] >= sample_rate / 2.0 || freqs[m] < 0.0)
                throw input_error("expand_spec: partial " + std::to_string(i) +
                                  " frequency " + std::to_string(freqs[m]) +
                                  " Hz outside [0, Nyquist)");
            double omega = 2.0 * M_PI * freqs[m] / sample_rate;
            modes.emplace_back(omega, p.alpha[m], p.gamma_s[m], p.gamma_c[m]);
        }
    }
    return modes;
}

namespace {

// splitmix64 + Box-Muller so the generator stream does not depend on the
// standard library's distribution implementation.
struct GaussianRng {
    std::uint64_t state;
    explicit GaussianRng(std::uint64_t seed) : state(seed) {}

    double uniform() {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return (static_cast<double>(z >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
};

} // namespace

Signal generate(const SyntheticSpec& spec, std::size_t duration_samples, double sample_rate) {
    if (duration_samples < 1)
        throw input_error("generate: duration must be >= 1 sample");
    std::vector<Mode> modes = expand_spec(spec, sample_rate);
    std::vector<double> x(duration_samples, 0.0);
    for (const Mode& m : modes) {
        const double w = m.omega(), a = m.alpha(), gs = m.gamma_s(), gc = m.gamma_c();
        for (std::size_t t = 0; t < duration_samples; ++t) {
            double td = static_cast<double>(t);
            x[t] += std::exp(-a * td) * (gs * std::sin(w * td) + gc * std::cos(w * td));
        }
    }
    if (spec.noise_snr_db) {
        double sig_energy = 0.0;
        for (double v : x)
            sig_energy += v * v;
        double noise_energy = sig_energy * std::pow(10.0, -*spec.noise_snr_db / 10.0);
        double scale = std::sqrt(noise_energy / static_cast<double>(duration_samples));
        GaussianRng rng(spec.noise_seed);
        for (double& v : x)
            v += scale * rng.normal();
    }
    return Signal::from_real(std::move(x), sample_rate);
}

double mse_db(const Signal& measured, const Signal& modeled) {
    if (measured.size() != modeled.size())
        throw input_error("mse_db: signals must have equal length");
    if (measured.sample_rate() != modeled.sample_rate())
        throw input_error("mse_db: signals must share a sample rate");
    double ref = measured.energy();
    if (ref == 0.0)
        throw input_error("mse_db: measured signal is all zero (undefined normalization)");
    double err = 0.0;
    for (std::size_t t = 0; t < measured.size(); ++t)
        err += std::norm(measured[t] - modeled[t]);
    if (err == 0.0)
        return kDbFloor;
    return std::max(kDbFloor, 10.0 * std::log10(err / ref));
}

} // namespace modal

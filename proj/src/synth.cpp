#include "modal/synth.hpp"

#include <cmath>

namespace modal {

namespace {

constexpr double kEdgeTol = 1e-12; // omega this close to 0 or pi is a real pole

}

BiquadCoeffs biquad_coeffs(const Mode& mode) {
    const double w = mode.omega(), a = mode.alpha();
    const double r = std::exp(-a);
    BiquadCoeffs c;
    if (w <= kEdgeTol) {
        c.b0 = mode.gamma_c();
        c.a1 = -r;
        return c;
    }
    if (w >= M_PI - kEdgeTol) {
        c.b0 = mode.gamma_c();
        c.a1 = r;
        return c;
    }
    const cplx g = mode.gamma();
    c.b0 = g.real();
    c.b1 = -r * (g * std::polar(1.0, -w)).real();
    c.a1 = -2.0 * r * std::cos(w);
    c.a2 = r * r;
    return c;
}

std::vector<double> biquad_impulse(const BiquadCoeffs& c, std::size_t t_len) {
    std::vector<double> y(t_len, 0.0);
    double y1 = 0.0, y2 = 0.0;
    for (std::size_t t = 0; t < t_len; ++t) {
        double x = (t == 0) ? c.b0 : (t == 1 ? c.b1 : 0.0);
        double out = x - c.a1 * y1 - c.a2 * y2;
        y[t] = out;
        y2 = y1;
        y1 = out;
    }
    return y;
}

namespace {

void render_one(const Mode& m, std::vector<double>& buf) {
    const double w = m.omega(), a = m.alpha(), gs = m.gamma_s(), gc = m.gamma_c();
    for (std::size_t t = 0; t < buf.size(); ++t) {
        const double td = static_cast<double>(t);
        buf[t] = std::exp(-a * td) * (gs * std::sin(w * td) + gc * std::cos(w * td));
    }
}

// Pairwise summation over the mode axis for a deterministic, drift-bounded
// accumulation order.
std::vector<double> render_range(const std::vector<Mode>& modes, std::size_t lo,
                                 std::size_t hi, std::size_t t_len) {
    if (hi - lo == 1) {
        std::vector<double> buf(t_len);
        render_one(modes[lo], buf);
        return buf;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    std::vector<double> left = render_range(modes, lo, mid, t_len);
    std::vector<double> right = render_range(modes, mid, hi, t_len);
    for (std::size_t t = 0; t < t_len; ++t)
        left[t] += right[t];
    return left;
}

} // namespace

Signal render(const ModeSet& modes, std::size_t t_len) {
    if (t_len < 1)
        throw input_error("render: length must be >= 1");
    if (modes.size() == 0)
        return Signal::from_real(std::vector<double>(t_len, 0.0), modes.sample_rate());
    return Signal::from_real(render_range(modes.modes(), 0, modes.size(), t_len),
                             modes.sample_rate());
}

std::vector<std::pair<double, double>> magnitude_response(const ModeSet& modes,
                                                          std::size_t n_points) {
    if (n_points < 2)
        throw input_error("magnitude_response: need at least 2 points");
    std::vector<BiquadCoeffs> sections;
    sections.reserve(modes.size());
    for (const Mode& m : modes.modes())
        sections.push_back(biquad_coeffs(m));

    std::vector<std::pair<double, double>> out;
    out.reserve(n_points);
    const double fs = modes.sample_rate();
    for (std::size_t i = 0; i < n_points; ++i) {
        const double w = M_PI * static_cast<double>(i) / static_cast<double>(n_points - 1);
        const cplx z1 = std::polar(1.0, -w);
        const cplx z2 = z1 * z1;
        cplx h(0.0, 0.0);
        for (const BiquadCoeffs& c : sections)
            h += (c.b0 + c.b1 * z1) / (1.0 + c.a1 * z1 + c.a2 * z2);
        const double mag = std::abs(h);
        const double db = mag > 0.0 ? std::max(kDbFloor, 20.0 * std::log10(mag)) : kDbFloor;
        out.emplace_back(w / (2.0 * M_PI) * fs, db);
    }
    return out;
}

} // namespace modal

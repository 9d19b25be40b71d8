#include "modal/subband.hpp"

#include <algorithm>
#include <cmath>

#include "modal/warp.hpp"

namespace modal {

namespace {

// Margin between the passband edge and the decimated Nyquist.
constexpr double kAliasMargin = 1.15;

int clamp_decimation(int requested, double cutoff_hz, double sample_rate) {
    const double bound = sample_rate / (2.0 * cutoff_hz * kAliasMargin);
    return std::max(1, std::min(requested, static_cast<int>(bound)));
}

} // namespace

std::vector<double> BandPlan::ownership_edges() const {
    std::vector<double> edges(bands.size() + 1);
    edges.front() = 0.0;
    for (std::size_t b = 1; b < bands.size(); ++b)
        edges[b] = 0.5 * (bands[b - 1].center_hz + bands[b].center_hz);
    edges.back() = sample_rate / 2.0;
    return edges;
}

void BandPlan::validate() const {
    if (bands.empty())
        throw input_error("BandPlan: no bands");
    if (!(sample_rate > 0.0))
        throw input_error("BandPlan: sample_rate must be positive");
    for (std::size_t b = 0; b < bands.size(); ++b) {
        const Band& band = bands[b];
        if (b > 0 && !(band.center_hz > bands[b - 1].center_hz))
            throw input_error("BandPlan: centers must be strictly increasing");
        if (!(band.center_hz < sample_rate / 2.0))
            throw input_error("BandPlan: center at or above Nyquist");
        if (band.filter.order < 1)
            throw input_error("BandPlan: filter order must be >= 1");
        if (!(band.half_bandwidth_hz * band.decimation < sample_rate / 2.0))
            throw input_error("BandPlan: band " + std::to_string(b) +
                              " passband aliases after decimation");
    }
}

BandPlan plan_harmonic(double f0_hz, double inharmonicity_b, int n_partials,
                       double sample_rate, int decimation, double bw_fraction,
                       int filter_order, std::size_t max_modes) {
    if (!(f0_hz > 0.0))
        throw input_error("plan_harmonic: f0 must be positive");
    if (n_partials < 1)
        throw input_error("plan_harmonic: need at least one partial");
    BandPlan plan;
    plan.scheme = BandScheme::HarmonicInharmonic;
    plan.sample_rate = sample_rate;
    plan.requested_decimation = decimation;
    const double cutoff = bw_fraction * f0_hz / 2.0;
    const int r = clamp_decimation(decimation, cutoff, sample_rate);
    for (int n = 1; n <= n_partials; ++n) {
        const double fn = n * f0_hz * std::sqrt(1.0 + inharmonicity_b * n * n);
        if (fn >= sample_rate / 2.0)
            break; // excess partials dropped
        Band band;
        band.center_hz = fn;
        band.half_bandwidth_hz = cutoff;
        band.decimation = r;
        band.filter = {FilterSpec::Family::Butterworth, filter_order, cutoff, {}, {}};
        band.max_modes = max_modes;
        plan.bands.push_back(band);
    }
    plan.validate();
    return plan;
}

namespace {

BandPlan plan_from_centers(std::vector<double> centers, BandScheme scheme, double sample_rate,
                           double overlap_factor, int decimation, int filter_order,
                           std::size_t max_modes, std::optional<double> stopband_db) {
    BandPlan plan;
    plan.scheme = scheme;
    plan.sample_rate = sample_rate;
    plan.requested_decimation = decimation;
    for (std::size_t b = 0; b < centers.size(); ++b) {
        const double gap = (b + 1 < centers.size()) ? centers[b + 1] - centers[b]
                                                    : centers[b] - centers[b - 1];
        const double cutoff = overlap_factor * gap / 2.0;
        Band band;
        band.center_hz = centers[b];
        band.half_bandwidth_hz = cutoff;
        band.decimation = clamp_decimation(decimation, cutoff, sample_rate);
        band.filter = {FilterSpec::Family::Butterworth, filter_order, cutoff, stopband_db, {}};
        band.max_modes = max_modes;
        plan.bands.push_back(band);
    }
    plan.validate();
    return plan;
}

} // namespace

BandPlan plan_bark(int n_bands, double sample_rate, double rho, double overlap_factor,
                   int decimation, int filter_order, std::size_t max_modes) {
    if (n_bands < 2)
        throw input_error("plan_bark: need at least 2 bands");
    std::vector<double> centers(static_cast<std::size_t>(n_bands));
    for (int n = 1; n <= n_bands; ++n) {
        const double uniform_hz = (2.0 * n - 1.0) * sample_rate / (4.0 * n_bands);
        const double w = 2.0 * M_PI * uniform_hz / sample_rate;
        // compressive direction: low bands end up narrow
        centers[static_cast<std::size_t>(n - 1)] =
            unwarp_frequency(w, rho) / (2.0 * M_PI) * sample_rate;
    }
    return plan_from_centers(std::move(centers), BandScheme::BarkSpaced, sample_rate,
                             overlap_factor, decimation, filter_order, max_modes, -80.0);
}

BandPlan plan_uniform(int n_bands, double sample_rate, double overlap_factor, int decimation,
                      int filter_order, std::size_t max_modes) {
    if (n_bands < 2)
        throw input_error("plan_uniform: need at least 2 bands");
    std::vector<double> centers(static_cast<std::size_t>(n_bands));
    for (int n = 1; n <= n_bands; ++n)
        centers[static_cast<std::size_t>(n - 1)] =
            (2.0 * n - 1.0) * sample_rate / (4.0 * n_bands);
    return plan_from_centers(std::move(centers), BandScheme::UniformGrid, sample_rate,
                             overlap_factor, decimation, filter_order, max_modes, {});
}

Signal heterodyne(const Signal& signal, double freq_hz) {
    const double step = -2.0 * M_PI * freq_hz / signal.sample_rate();
    std::vector<cplx> out(signal.size());
    for (std::size_t t = 0; t < signal.size(); ++t)
        out[t] = signal[t] * std::polar(1.0, step * static_cast<double>(t));
    return Signal::from_complex(std::move(out), signal.sample_rate());
}

std::vector<Sos> butterworth_lowpass(int order, double cutoff_norm) {
    if (order < 1)
        throw input_error("butterworth_lowpass: order must be >= 1");
    if (!(cutoff_norm > 0.0 && cutoff_norm < 1.0))
        throw input_error("butterworth_lowpass: cutoff must be inside (0, Nyquist)");
    const double warped = std::tan(M_PI * cutoff_norm / 2.0);
    std::vector<Sos> sections;
    const int n = order;
    for (int k = 0; k < n / 2; ++k) {
        const double theta = M_PI * (2.0 * k + n + 1.0) / (2.0 * n);
        const cplx p = warped * std::polar(1.0, theta);
        const cplx zp = (1.0 + p) / (1.0 - p);
        if (std::abs(zp) >= 1.0)
            throw numeric_error("butterworth_lowpass: unstable designed section");
        Sos s;
        s.a1 = -2.0 * zp.real();
        s.a2 = std::norm(zp);
        const double g = (1.0 + s.a1 + s.a2) / 4.0;
        s.b0 = g;
        s.b1 = 2.0 * g;
        s.b2 = g;
        sections.push_back(s);
    }
    if (n % 2 == 1) {
        const double p = -warped;
        const double zp = (1.0 + p) / (1.0 - p);
        if (std::abs(zp) >= 1.0)
            throw numeric_error("butterworth_lowpass: unstable designed section");
        Sos s;
        s.a1 = -zp;
        const double g = (1.0 + s.a1) / 2.0;
        s.b0 = g;
        s.b1 = g;
        sections.push_back(s);
    }
    return sections;
}

namespace {

template <typename T>
void sos_filter_impl(std::vector<T>& x, const std::vector<Sos>& sections) {
    for (const Sos& s : sections) {
        T z1{}, z2{};
        for (T& v : x) {
            const T in = v;
            const T out = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * out + z2;
            z2 = s.b2 * in - s.a2 * out;
            v = out;
        }
    }
}

} // namespace

void sos_filter_inplace(std::vector<cplx>& x, const std::vector<Sos>& sections) {
    sos_filter_impl(x, sections);
}

void sos_filter_inplace(std::vector<double>& x, const std::vector<Sos>& sections) {
    sos_filter_impl(x, sections);
}

Signal lowpass_decimate(const Signal& signal, const FilterSpec& spec, int r) {
    if (r < 1)
        throw input_error("lowpass_decimate: decimation must be >= 1");
    const double fs = signal.sample_rate();
    if (!(spec.cutoff_hz < fs / (2.0 * r)))
        throw input_error("lowpass_decimate: cutoff at or above decimated Nyquist");
    const std::vector<Sos> sections = butterworth_lowpass(spec.order, spec.cutoff_hz / (fs / 2.0));
    const std::size_t out_len = (signal.size() + static_cast<std::size_t>(r) - 1) /
                                static_cast<std::size_t>(r);
    if (signal.is_real()) {
        std::vector<double> x = signal.real_samples();
        sos_filter_inplace(x, sections);
        std::vector<double> y(out_len);
        for (std::size_t i = 0; i < out_len; ++i)
            y[i] = x[i * static_cast<std::size_t>(r)];
        return Signal::from_real(std::move(y), fs / r);
    }
    std::vector<cplx> x = signal.samples();
    sos_filter_inplace(x, sections);
    std::vector<cplx> y(out_len);
    for (std::size_t i = 0; i < out_len; ++i)
        y[i] = x[i * static_cast<std::size_t>(r)];
    return Signal::from_complex(std::move(y), fs / r);
}

namespace {

// Forward-backward pass: zero phase, |H|^2 magnitude. Subtraction of two
// such lowpasses is magnitude-complementary, which a single causal pass is
// not (passband phase mismatch would leak neighbors back in).
void sos_filtfilt(std::vector<double>& x, const std::vector<Sos>& sections) {
    sos_filter_inplace(x, sections);
    std::reverse(x.begin(), x.end());
    sos_filter_inplace(x, sections);
    std::reverse(x.begin(), x.end());
}

} // namespace

Signal bandlimit(const Signal& signal, double lo_hz, double hi_hz, int order) {
    if (!signal.is_real())
        throw input_error("bandlimit: expects a real signal");
    if (!(hi_hz > lo_hz))
        throw input_error("bandlimit: hi must exceed lo");
    const double fs = signal.sample_rate();
    std::vector<double> hi = signal.real_samples();
    if (hi_hz < 0.499 * fs)
        sos_filtfilt(hi, butterworth_lowpass(order, hi_hz / (fs / 2.0)));
    if (lo_hz > 0.0) {
        std::vector<double> lo = signal.real_samples();
        sos_filtfilt(lo, butterworth_lowpass(order, lo_hz / (fs / 2.0)));
        for (std::size_t t = 0; t < hi.size(); ++t)
            hi[t] -= lo[t];
    }
    return Signal::from_real(std::move(hi), fs);
}

std::vector<DampedPole> band_modes_to_global(const std::vector<DampedPole>& band_poles,
                                             double center_hz, int r, double sample_rate,
                                             EstimationLog* log) {
    std::vector<DampedPole> out;
    out.reserve(band_poles.size());
    const double shift = 2.0 * M_PI * center_hz / sample_rate;
    for (const DampedPole& p : band_poles) {
        const double omega = p.omega / r + shift;
        if (omega < 0.0 || omega >= M_PI) {
            if (log)
                ++log->dropped_out_of_band;
            continue;
        }
        out.push_back({omega, p.alpha / r});
    }
    return out;
}

namespace {

struct BandResult {
    std::vector<DampedPole> owned; // global-axis poles surviving ownership
    std::size_t selected = 0;      // order picked before the cap
    bool capped = false;
};

BandResult run_band(const Signal& signal, const BandPlan& plan, std::size_t b,
                    std::size_t cap, const OrderSpec& order, const FzOptions& opts,
                    const std::vector<double>& edges, EstimationLog* log) {
    const Band& band = plan.bands[b];
    BandResult res;

    Signal het = heterodyne(signal, band.center_hz);
    Signal dec = lowpass_decimate(het, band.filter, band.decimation);

    // discard the filter settle transient before Hankel construction
    const double fs_dec = dec.sample_rate();
    const double omega_cut = 2.0 * M_PI * band.filter.cutoff_hz / fs_dec;
    std::size_t settle = static_cast<std::size_t>(
        std::ceil(opts.transient_factor * band.filter.order / omega_cut));
    settle = std::min(settle, dec.size() / 4);
    std::vector<cplx> body(dec.samples().begin() + static_cast<std::ptrdiff_t>(settle),
                           dec.samples().end());
    if (body.size() < 8) {
        if (log)
            log->note("band " + std::to_string(b) + ": too few samples after decimation");
        return res;
    }
    Signal trimmed = Signal::from_complex(std::move(body), fs_dec);

    const std::size_t n = std::min(opts.max_hankel, trimmed.size() / 2);
    if (n < 2) {
        if (log)
            log->note("band " + std::to_string(b) + ": window too small");
        return res;
    }
    try {
        HankelPair pair = build_hankel(trimmed, n);
        PencilSvd svd = pencil_svd(pair);
        std::vector<double> sv(svd.singular_values.data(),
                               svd.singular_values.data() + svd.singular_values.size());
        res.selected = select_order(sv, order);
        res.capped = res.selected >= cap;
        const std::size_t m = std::min({res.selected, cap, n});
        std::vector<cplx> raw = pencil_poles(pair, svd, m);
        PoleFoldOptions fold;
        fold.real_signal = false;
        fold.alpha_ceiling = default_alpha_ceiling(n);
        std::vector<DampedPole> local = poles_to_modes(raw, fold, log);
        std::vector<DampedPole> global =
            band_modes_to_global(local, band.center_hz, band.decimation,
                                 signal.sample_rate(), log);
        for (const DampedPole& p : global) {
            const double f_hz = p.omega / (2.0 * M_PI) * signal.sample_rate();
            if (f_hz >= edges[b] && f_hz < edges[b + 1])
                res.owned.push_back(p);
            else if (log)
                ++log->dropped_out_of_band;
        }
    } catch (const numeric_error& e) {
        if (log)
            log->note("band " + std::to_string(b) + " failed: " + e.what());
    } catch (const input_error& e) {
        if (log)
            log->note("band " + std::to_string(b) + " skipped: " + e.what());
    }
    return res;
}

} // namespace

ModeSet fz_esprit(const Signal& signal, const BandPlan& plan, const OrderSpec& order,
                  const FzOptions& opts, EstimationLog* log) {
    plan.validate();
    if (plan.sample_rate != signal.sample_rate())
        throw input_error("fz_esprit: plan sample rate does not match the signal");
    const std::vector<double> edges = plan.ownership_edges();
    const std::size_t n_bands = plan.bands.size();

    std::vector<BandResult> results(n_bands);
    std::size_t leftover = 0;
    for (std::size_t b = 0; b < n_bands; ++b) {
        results[b] = run_band(signal, plan, b, plan.bands[b].max_modes, order, opts, edges, log);
        if (!results[b].capped)
            leftover += plan.bands[b].max_modes -
                        std::min(results[b].selected, plan.bands[b].max_modes);
    }

    // one redistribution pass: unused budget is split equally over the bands
    // that hit their cap
    std::vector<std::size_t> capped;
    for (std::size_t b = 0; b < n_bands; ++b)
        if (results[b].capped)
            capped.push_back(b);
    if (!capped.empty() && leftover > 0) {
        const std::size_t extra = leftover / capped.size();
        if (extra > 0)
            for (std::size_t b : capped)
                results[b] = run_band(signal, plan, b, plan.bands[b].max_modes + extra, order,
                                      opts, edges, log);
    }

    std::vector<DampedPole> all;
    for (const BandResult& r : results)
        all.insert(all.end(), r.owned.begin(), r.owned.end());
    resolve_pole_ties(all, signal, log);
    if (all.empty())
        return ModeSet({}, ModeSource::Subband, signal.sample_rate());
    return estimate_amplitudes(signal, all, ModeSource::Subband);
}

} // namespace modal

#include "modal/warp.hpp"

#include <algorithm>
#include <cmath>

namespace modal {

WarpConfig::WarpConfig(double rho_, double pre_damp_sigma_)
    : rho(rho_), omega_c(std::acos(std::abs(rho_))), pre_damp_sigma(pre_damp_sigma_) {
    if (!(std::abs(rho) < 1.0))
        throw input_error("WarpConfig: |rho| must be < 1");
    if (pre_damp_sigma < 0.0)
        throw input_error("WarpConfig: pre_damp_sigma must be >= 0");
}

WarpConfig WarpConfig::bark(double sample_rate, double pre_damp_sigma) {
    return WarpConfig(bark_rho(sample_rate), pre_damp_sigma);
}

double bark_rho(double sample_rate) {
    if (!(sample_rate > 0.0))
        throw input_error("bark_rho: sample_rate must be positive");
    const double fs_khz = sample_rate / 1000.0;
    return 1.0674 * std::sqrt(2.0 / M_PI * std::atan(0.06583 * fs_khz)) - 0.1916;
}

double rho_for_zoom(double zoom) {
    if (!(zoom >= 1.0))
        throw input_error("rho_for_zoom: zoom factor must be >= 1");
    return (zoom - 1.0) / (zoom + 1.0);
}

double warp_frequency(double omega, double rho) {
    // arg of the Blaschke factor (e^{jw} - rho)/(1 - rho e^{jw}); atan2 keeps
    // the branch continuous on [0, pi].
    const double num = (1.0 - rho * rho) * std::sin(omega);
    const double den = (1.0 + rho * rho) * std::cos(omega) - 2.0 * rho;
    return std::atan2(num, den);
}

double unwarp_frequency(double omega, double rho) {
    return warp_frequency(omega, -rho);
}

cplx warp_pole(cplx psi, double rho) {
    return (psi - rho) / (1.0 - rho * psi);
}

cplx unwarp_pole(cplx psi_tilde, double rho) {
    if (std::abs(psi_tilde) > 1.0 + kAlphaTol + 1e-12)
        throw input_error("unwarp_pole: pole outside the closed unit disk");
    return (psi_tilde + rho) / (1.0 + rho * psi_tilde);
}

Signal warp_signal(const Signal& signal, double rho, std::size_t out_len) {
    if (out_len < 1)
        throw input_error("warp_signal: out_len must be >= 1");
    if (!(std::abs(rho) < 1.0))
        throw input_error("warp_signal: |rho| must be < 1");

    // a_t accumulator: start at the unit impulse (zero sections) and push it
    // through one section per input sample. Section (z^-1 + rho)/(1 + rho z^-1)
    // maps a mode pole psi to (psi - rho)/(1 - rho psi), matching
    // warp_frequency on the unit circle.
    std::vector<double> tap(out_len, 0.0);
    tap[0] = 1.0;
    std::vector<double> y(out_len, 0.0);
    const auto& s = signal.samples();
    const std::size_t in_len = signal.size();
    for (std::size_t t = 0; t < in_len; ++t) {
        const double w = s[t].real();
        if (w != 0.0)
            for (std::size_t k = 0; k < out_len; ++k)
                y[k] += w * tap[k];
        if (t + 1 == in_len)
            break;
        double prev_in = 0.0, prev_out = 0.0;
        for (std::size_t k = 0; k < out_len; ++k) {
            const double cur = tap[k];
            const double out = rho * cur + prev_in - rho * prev_out;
            tap[k] = out;
            prev_in = cur;
            prev_out = out;
        }
    }
    return Signal::from_real(std::move(y), signal.sample_rate());
}

Signal pre_damp(const Signal& signal, double sigma_nepers_per_sec) {
    if (sigma_nepers_per_sec < 0.0)
        throw input_error("pre_damp: sigma must be >= 0");
    if (sigma_nepers_per_sec == 0.0)
        return signal;
    const double per_sample = sigma_nepers_per_sec / signal.sample_rate();
    std::vector<cplx> out(signal.size());
    for (std::size_t t = 0; t < signal.size(); ++t)
        out[t] = signal[t] * std::exp(-per_sample * static_cast<double>(t));
    return Signal(std::move(out), signal.sample_rate(), signal.is_real());
}

std::vector<DampedPole> undamp_poles(const std::vector<DampedPole>& poles, double sigma,
                                     double sample_rate, EstimationLog* log) {
    if (sigma < 0.0)
        throw input_error("undamp_poles: sigma must be >= 0");
    const double shift = sigma / sample_rate;
    std::vector<DampedPole> out;
    out.reserve(poles.size());
    for (const DampedPole& p : poles) {
        double alpha = p.alpha - shift;
        if (alpha < -std::log1p(1e-6)) {
            if (log)
                ++log->dropped_unstable;
            continue;
        }
        if (alpha < -kAlphaTol) {
            alpha = -kAlphaTol;
            if (log)
                ++log->clamped_marginal;
        }
        out.push_back({p.omega, alpha});
    }
    return out;
}

ModeSet merge_modes(const ModeSet& warped, const ModeSet& plain, double omega_c) {
    if (warped.sample_rate() != plain.sample_rate())
        throw input_error("merge_modes: mode sets must share a sample rate");
    std::vector<Mode> merged;
    for (const Mode& m : warped.modes())
        if (m.omega() < omega_c)
            merged.push_back(m);
    for (const Mode& m : plain.modes())
        if (m.omega() >= omega_c)
            merged.push_back(m);
    return ModeSet(std::move(merged), ModeSource::Merged, warped.sample_rate());
}

namespace {

// One ESPRIT branch down to folded (omega, alpha) pairs; no amplitude fit.
std::vector<DampedPole> branch_poles(const Signal& signal, std::size_t n,
                                     const OrderSpec& order, EstimationLog* log) {
    HankelPair pair = build_hankel(signal, n);
    PencilSvd svd = pencil_svd(pair);
    std::vector<double> sv(svd.singular_values.data(),
                           svd.singular_values.data() + svd.singular_values.size());
    std::size_t m = select_order(sv, order);
    std::vector<cplx> raw = pencil_poles(pair, svd, m);
    PoleFoldOptions fold;
    fold.real_signal = signal.is_real();
    fold.alpha_ceiling = default_alpha_ceiling(n);
    return poles_to_modes(raw, fold, log);
}

} // namespace

ModeSet fw_esprit(const Signal& signal, const WarpConfig& cfg, std::size_t n,
                  const OrderSpec& order, EstimationLog* log) {
    if (!signal.is_real())
        throw input_error("fw_esprit: expects a real signal");
    const double fs = signal.sample_rate();

    // Warped branch. The Hankel pencil only reads 2N samples, so the warped
    // signal need not be longer than that. The chain's direct-path sample
    // y(0) carries a delta component that is not part of the warped modal
    // sum; the pencil is built from y(1) on, which is exactly modal.
    const std::size_t warp_len = std::min(signal.size(), 2 * n + 65);
    Signal warped_sig = warp_signal(signal, cfg.rho, warp_len);
    std::vector<cplx> body(warped_sig.samples().begin() + 1, warped_sig.samples().end());
    Signal warped_body(std::move(body), signal.sample_rate(), true);
    std::vector<cplx> unwarped;
    {
        HankelPair pair = build_hankel(warped_body, n);
        PencilSvd svd = pencil_svd(pair);
        std::vector<double> sv(svd.singular_values.data(),
                               svd.singular_values.data() + svd.singular_values.size());
        std::size_t m = select_order(sv, order);
        for (cplx pt : pencil_poles(pair, svd, m)) {
            const double mag = std::abs(pt);
            if (mag > 1.0 + 1e-6) {
                if (log)
                    ++log->dropped_unstable;
                continue;
            }
            if (mag > 1.0 + kAlphaTol) {
                pt *= (1.0 + kAlphaTol) / mag;
                if (log)
                    ++log->clamped_marginal;
            }
            cplx psi = unwarp_pole(pt, cfg.rho);
            if (std::abs(psi) > 1.0 + 1e-6) {
                if (log)
                    ++log->dropped_unstable;
                continue;
            }
            unwarped.push_back(psi);
        }
    }
    PoleFoldOptions fold;
    fold.real_signal = true;
    fold.alpha_ceiling = default_alpha_ceiling(n);
    std::vector<DampedPole> warped_pairs = poles_to_modes(unwarped, fold, log);
    resolve_pole_ties(warped_pairs, signal, log);

    // Plain branch with optional exponential pre-damping.
    Signal damped = pre_damp(signal, cfg.pre_damp_sigma);
    std::vector<DampedPole> plain_pairs = branch_poles(damped, n, order, log);
    plain_pairs = undamp_poles(plain_pairs, cfg.pre_damp_sigma, fs, log);
    resolve_pole_ties(plain_pairs, signal, log);

    auto as_modeset = [fs](const std::vector<DampedPole>& ps, ModeSource src) {
        std::vector<Mode> ms;
        ms.reserve(ps.size());
        for (const DampedPole& p : ps)
            ms.emplace_back(p.omega, p.alpha);
        return ModeSet(std::move(ms), src, fs);
    };
    ModeSet merged = merge_modes(as_modeset(warped_pairs, ModeSource::Warped),
                                 as_modeset(plain_pairs, ModeSource::Plain), cfg.omega_c);
    if (merged.size() == 0)
        return merged;

    std::vector<DampedPole> all;
    all.reserve(merged.size());
    for (const Mode& m : merged.modes())
        all.push_back({m.omega(), m.alpha()});
    return estimate_amplitudes(signal, all, ModeSource::Merged);
}

} // namespace modal

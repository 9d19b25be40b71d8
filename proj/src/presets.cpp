#include "modal/presets.hpp"

namespace modal {

AnalysisParams AnalysisParams::piano() {
    AnalysisParams p;
    p.preset = "piano";
    p.method = Method::FrequencyWarped;
    p.hankel_n = 2048;
    p.order = OrderSpec::knee();
    p.rho = 0.0; // bark_rho(fs)
    p.pre_damp_sigma = 0.0;
    p.decimation = 5000;
    p.f0_hz = 220.0;
    p.inharmonicity_b = 1e-4;
    p.n_partials = 60;
    p.bw_fraction = 0.1;
    p.harmonic_filter_order = 4;
    p.max_modes_per_band = 10;
    p.opt.delta_omega_hz = 0.5;
    p.opt.delta_alpha_rel = 0.1;
    p.opt.max_fevals = 500;
    p.opt.cost_tol = 1e-4;
    p.opt.step_tol = 1e-9;
    return p;
}

AnalysisParams AnalysisParams::rir() {
    AnalysisParams p;
    p.preset = "rir";
    p.method = Method::FrequencyZoomed;
    p.hankel_n = 4096;
    p.order = OrderSpec::threshold_db(-18.0);
    p.rho = 0.0; // bark_rho(fs)
    p.pre_damp_sigma = 1.5;
    p.n_bands = 20;
    p.decimation = 8;
    p.band_overlap = 1.2;
    p.filter_order = 14;
    p.max_modes_per_band = 100;
    p.f0_hz = 0.0;
    p.opt.delta_omega_hz = 2.0;
    p.opt.delta_alpha_rel = 0.1;
    p.opt.max_fevals = 500;
    p.opt.cost_tol = 1e-4;
    p.opt.step_tol = 1e-9;
    p.opt.max_band_iters = 100;
    return p;
}

AnalysisParams AnalysisParams::custom() {
    AnalysisParams p = piano();
    p.preset = "custom";
    return p;
}

AnalysisParams AnalysisParams::by_name(const std::string& name) {
    if (name == "piano")
        return piano();
    if (name == "rir")
        return rir();
    if (name == "custom")
        return custom();
    throw input_error("unknown preset '" + name + "' (expected piano, rir or custom)");
}

double AnalysisParams::effective_rho(double sample_rate) const {
    return rho != 0.0 ? rho : bark_rho(sample_rate);
}

BandPlan AnalysisParams::make_plan(double sample_rate) const {
    if (f0_hz > 0.0)
        return plan_harmonic(f0_hz, inharmonicity_b, n_partials, sample_rate, decimation,
                             bw_fraction, harmonic_filter_order, max_modes_per_band);
    return plan_bark(n_bands, sample_rate, effective_rho(sample_rate), band_overlap,
                     decimation, filter_order, max_modes_per_band);
}

} // namespace modal

#pragma once

#include <string>

#include "modal/esprit.hpp"
#include "modal/optimize.hpp"
#include "modal/subband.hpp"
#include "modal/warp.hpp"

namespace modal {

enum class Method { Esprit, FrequencyWarped, FrequencyZoomed };

/// Bundle of analysis settings for one run. Presets carry the published
/// experiment values; "custom" starts from the piano numbers.
struct AnalysisParams {
    Method method = Method::FrequencyWarped;
    std::string preset = "custom";

    std::size_t hankel_n = 2048;
    OrderSpec order = OrderSpec::knee();
    double rho = 0.0; // 0 means derive bark_rho(fs) at analysis time
    double pre_damp_sigma = 0.0;

    // subband plan
    int n_bands = 20;
    int decimation = 8;
    double band_overlap = 1.2;
    int filter_order = 14;
    std::size_t max_modes_per_band = 100;
    // harmonic plan inputs
    double f0_hz = 0.0; // 0 means bark/uniform plan
    double inharmonicity_b = 1e-4;
    int n_partials = 60;
    double bw_fraction = 0.1;
    int harmonic_filter_order = 4;

    bool optimize = false;
    OptConfig opt;

    static AnalysisParams piano();
    static AnalysisParams rir();
    static AnalysisParams custom();
    static AnalysisParams by_name(const std::string& name);

    double effective_rho(double sample_rate) const;
    BandPlan make_plan(double sample_rate) const;
};

} // namespace modal

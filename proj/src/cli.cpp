#include "modal/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>

#include <CLI11.hpp>

#include "modal/fft.hpp"
#include "modal/generate.hpp"
#include "modal/mode_table.hpp"
#include "modal/presets.hpp"
#include "modal/synth.hpp"
#include "modal/wav.hpp"

namespace modal::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

OrderSpec parse_order(const std::string& text) {
    if (text == "knee")
        return OrderSpec::knee();
    if (text.rfind("db:", 0) == 0)
        return OrderSpec::threshold_db(std::stod(text.substr(3)));
    if (text.rfind("fixed:", 0) == 0)
        return OrderSpec::fixed(static_cast<std::size_t>(std::stoul(text.substr(6))));
    throw input_error("bad --order '" + text + "' (knee | db:<L> | fixed:<M>)");
}

std::vector<double> split_colon_doubles(const std::string& text) {
    std::vector<double> vals;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t next = text.find(':', pos);
        const std::string part =
            text.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
        if (part.empty())
            throw input_error("empty field in '" + text + "'");
        vals.push_back(std::stod(part));
        if (next == std::string::npos)
            break;
        pos = next + 1;
    }
    return vals;
}

Signal load_mono(const std::string& path) {
    WavFile wav = read_wav(path);
    bool downmixed = false;
    std::vector<double> mono = wav.mono(&downmixed);
    if (downmixed)
        std::fprintf(stderr, "warning: %zu channels downmixed to mono\n",
                     wav.channels.size());
    if (mono.empty())
        throw input_error("empty WAV file: " + path);
    Signal s = Signal::from_real(std::move(mono), wav.sample_rate);
    if (s.energy() == 0.0)
        throw input_error("silent input: " + path);
    return s;
}

struct GenArgs {
    std::string out = "out.wav";
    std::string truth;
    double fs = 44100.0;
    double dur = 2.0;
    std::vector<std::string> modes;    // f:alpha:gamma_c[:gamma_s]
    std::vector<std::string> triplets; // f0:detune[:alpha[:amp]]
    int partials = 0;
    double f0 = 220.0;
    double inharmonicity = 1e-4;
    double series_alpha = 1e-4;
    double series_amp = 1.0;
    std::optional<double> snr_db;
    std::uint64_t seed = 1;
};

int run_gen(const GenArgs& a) {
    SyntheticSpec spec;
    spec.noise_seed = a.seed;
    if (a.snr_db)
        spec.noise_snr_db = a.snr_db;
    for (const std::string& text : a.modes) {
        std::vector<double> v = split_colon_doubles(text);
        if (v.size() < 3 || v.size() > 4)
            throw input_error("--mode wants f:alpha:gamma_c[:gamma_s], got '" + text + "'");
        spec.add_mode(v[0], v[1], v[2], v.size() > 3 ? v[3] : 0.0);
    }
    for (const std::string& text : a.triplets) {
        std::vector<double> v = split_colon_doubles(text);
        if (v.size() < 2 || v.size() > 4)
            throw input_error("--triplet wants f0:detune[:alpha[:amp]], got '" + text + "'");
        spec.add_cluster(v[0], v[1], 3, v.size() > 2 ? v[2] : 1e-4,
                         v.size() > 3 ? v[3] : 1.0);
    }
    if (a.partials > 0) {
        SyntheticSpec series = SyntheticSpec::inharmonic_series(
            a.f0, a.inharmonicity, a.partials, a.series_alpha, a.series_amp);
        for (const PartialSpec& p : series.partials)
            spec.partials.push_back(p);
    }
    if (spec.partials.empty())
        throw input_error("gen: nothing to generate (use --mode/--triplet/--partials)");

    const auto t_len = static_cast<std::size_t>(std::llround(a.dur * a.fs));
    Signal sig = generate(spec, std::max<std::size_t>(t_len, 1), a.fs);
    write_wav_float32(a.out, sig.real_samples(), a.fs);
    std::printf("wrote %s: %zu samples at %.0f Hz\n", a.out.c_str(), sig.size(), a.fs);

    if (!a.truth.empty()) {
        ModeSet truth(expand_spec(spec, a.fs), ModeSource::Plain, a.fs);
        ModeTableMeta meta;
        meta.source = "synthetic";
        meta.params["duration_samples"] = static_cast<double>(sig.size());
        if (a.snr_db)
            meta.params["noise_snr_db"] = *a.snr_db;
        write_mode_table(a.truth, truth, meta);
        std::printf("wrote %s: %zu modes\n", a.truth.c_str(), truth.size());
    }
    return kExitOk;
}

struct AnalyzeArgs {
    std::string input;
    std::string out = "modes.json";
    std::string method;
    std::string preset = "custom";
    std::string order;
    std::size_t hankel = 0;
    double rho = 0.0;
    double zoom = 0.0;
    double pre_damp_sigma = -1.0;
    int bands = 0;
    int decimate = 0;
    double f0 = -1.0;
    int partials = 0;
    double inharmonicity = -1.0;
    bool optimize = false;
    double delta_omega = 0.0;
    double delta_alpha = 0.0;
};

void print_report(const char* method, const ModeSet& ms, double nmse, double seconds,
                  const EstimationLog& log) {
    std::printf("method: %s\n", method);
    std::printf("M: %zu\n", ms.size());
    std::printf("NMSE: %.2f dB\n", nmse);
    std::printf("time: %.2f s\n", seconds);
    std::printf("dropped: origin %zu, unstable %zu, alpha-ceiling %zu, out-of-band %zu, "
                "clamped %zu, tie-breaks %zu\n",
                log.dropped_origin, log.dropped_unstable, log.dropped_alpha_ceiling,
                log.dropped_out_of_band, log.clamped_marginal, log.tie_breaks);
    for (const std::string& note : log.notes)
        std::printf("note: %s\n", note.c_str());
}

int run_analyze(const AnalyzeArgs& a) {
    AnalysisParams params = AnalysisParams::by_name(a.preset);
    if (!a.method.empty()) {
        if (a.method == "esprit")
            params.method = Method::Esprit;
        else if (a.method == "fw")
            params.method = Method::FrequencyWarped;
        else if (a.method == "fz")
            params.method = Method::FrequencyZoomed;
        else
            throw input_error("bad --method '" + a.method + "' (esprit | fw | fz)");
    }
    if (!a.order.empty())
        params.order = parse_order(a.order);
    if (a.hankel > 0)
        params.hankel_n = a.hankel;
    if (a.rho != 0.0)
        params.rho = a.rho;
    if (a.zoom > 0.0)
        params.rho = rho_for_zoom(a.zoom);
    if (a.pre_damp_sigma >= 0.0)
        params.pre_damp_sigma = a.pre_damp_sigma;
    if (a.bands > 0)
        params.n_bands = a.bands;
    if (a.decimate > 0)
        params.decimation = a.decimate;
    if (a.f0 >= 0.0)
        params.f0_hz = a.f0;
    if (a.partials > 0)
        params.n_partials = a.partials;
    if (a.inharmonicity >= 0.0)
        params.inharmonicity_b = a.inharmonicity;
    if (a.optimize)
        params.optimize = true;
    if (a.delta_omega > 0.0)
        params.opt.delta_omega_hz = a.delta_omega;
    if (a.delta_alpha > 0.0)
        params.opt.delta_alpha_rel = a.delta_alpha;

    Signal sig = load_mono(a.input);
    const double fs = sig.sample_rate();
    EstimationLog log;
    const auto t0 = std::chrono::steady_clock::now();

    ModeSet ms({}, ModeSource::Plain, fs);
    const char* method_name = "esprit";
    switch (params.method) {
    case Method::Esprit:
        ms = esprit(sig, params.hankel_n, params.order, &log);
        break;
    case Method::FrequencyWarped: {
        method_name = "fw";
        WarpConfig cfg(params.effective_rho(fs), params.pre_damp_sigma);
        ms = fw_esprit(sig, cfg, params.hankel_n, params.order, &log);
        break;
    }
    case Method::FrequencyZoomed: {
        method_name = "fz";
        BandPlan plan = params.make_plan(fs);
        FzOptions opts;
        ms = fz_esprit(sig, plan, params.order, opts, &log);
        break;
    }
    }

    std::optional<BandPlan> opt_plan;
    if (params.optimize && ms.size() > 0) {
        if (params.f0_hz > 0.0 || params.method == Method::FrequencyZoomed)
            opt_plan = params.make_plan(fs);
        ms = optimize_all(sig, ms, opt_plan ? &*opt_plan : nullptr, params.opt, &log);
    }

    const auto t1 = std::chrono::steady_clock::now();
    const double seconds = std::chrono::duration<double>(t1 - t0).count();

    double nmse = 0.0;
    if (ms.size() > 0)
        nmse = mse_db(sig, render(ms, sig.size()));

    ModeTableMeta meta;
    meta.source = to_string(ms.source());
    meta.params["hankel_n"] = static_cast<double>(params.hankel_n);
    meta.params["rho"] = params.method == Method::Esprit ? 0.0 : params.effective_rho(fs);
    meta.params["pre_damp_sigma"] = params.pre_damp_sigma;
    meta.params["optimized"] = params.optimize ? 1.0 : 0.0;
    meta.params["nmse_db"] = nmse;
    write_mode_table(a.out, ms, meta);

    print_report(method_name, ms, nmse, seconds, log);
    std::printf("wrote %s\n", a.out.c_str());
    return kExitOk;
}

struct SynthArgs {
    std::string table;
    std::string out = "synth.wav";
    double duration = 0.0; // seconds; 0 = longest T60, capped
};

int run_synth(const SynthArgs& a) {
    ModeTableMeta meta;
    ModeSet ms = read_mode_table(a.table, &meta);
    if (ms.size() == 0)
        throw input_error("mode table has no modes: " + a.table);
    const double fs = ms.sample_rate();
    double dur = a.duration;
    if (dur <= 0.0) {
        dur = 1.0;
        for (const Mode& m : ms.modes()) {
            const double t60 = m.t60_seconds(fs);
            if (std::isfinite(t60))
                dur = std::max(dur, t60);
        }
        dur = std::min(dur, 30.0);
    }
    Signal sig = render(ms, static_cast<std::size_t>(std::llround(dur * fs)));
    std::vector<double> samples = sig.real_samples();
    double peak = 0.0;
    for (double v : samples)
        peak = std::max(peak, std::abs(v));
    double gain = 1.0;
    if (peak > 0.0) {
        gain = 0.999 / peak;
        for (double& v : samples)
            v *= gain;
    }
    write_wav_float32(a.out, samples, fs);
    std::printf("wrote %s: %zu samples at %.0f Hz, gain %.6g\n", a.out.c_str(),
                samples.size(), fs, gain);
    return kExitOk;
}

struct CompareArgs {
    std::string a, b;
    std::string csv_prefix;
    std::size_t window = 4096;
    std::size_t hop = 1024;
};

void write_spectrum_csv(const std::string& path, const Signal& a, const Signal& b) {
    const std::size_t nfft = std::min<std::size_t>(next_pow2(a.size()), 1u << 20);
    std::vector<cplx> fa = fft_real(a.real_samples(), nfft);
    std::vector<cplx> fb = fft_real(b.real_samples(), nfft);
    std::ofstream os(path, std::ios::trunc);
    if (!os)
        throw input_error("cannot write " + path);
    os << "# magnitude spectra, floor_db=" << kDbFloor << ", nfft=" << nfft << "\n";
    os << "freq_hz,a_db,b_db\n";
    const double fs = a.sample_rate();
    char buf[128];
    for (std::size_t k = 0; k <= nfft / 2; ++k) {
        auto db = [](const cplx& v) {
            const double m = std::abs(v);
            return m > 0.0 ? std::max(kDbFloor, 20.0 * std::log10(m)) : kDbFloor;
        };
        std::snprintf(buf, sizeof buf, "%.6f,%.3f,%.3f\n",
                      static_cast<double>(k) * fs / static_cast<double>(nfft), db(fa[k]),
                      db(fb[k]));
        os << buf;
    }
}

void write_spectrogram_csv(const std::string& path, const Signal& sig, std::size_t window,
                           std::size_t hop) {
    const std::vector<double> x = sig.real_samples();
    const std::size_t frames = x.size() >= window ? 1 + (x.size() - window) / hop : 1;
    const std::size_t bins = window / 2 + 1;
    std::ofstream os(path, std::ios::trunc);
    if (!os)
        throw input_error("cannot write " + path);
    os << "# log-time spectrogram frames: window=" << window << " hop=" << hop
       << " floor_db=" << kDbFloor << " frames=" << frames << " bins=" << bins << "\n";
    os << "time_s";
    for (std::size_t k = 0; k < bins; ++k)
        os << ",bin" << k;
    os << "\n";
    std::vector<double> segment(window);
    char buf[64];
    for (std::size_t f = 0; f < frames; ++f) {
        const std::size_t start = f * hop;
        for (std::size_t i = 0; i < window; ++i) {
            const double hann =
                0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) /
                                     static_cast<double>(window - 1));
            segment[i] = (start + i < x.size()) ? x[start + i] * hann : 0.0;
        }
        std::vector<cplx> spec = fft_real(segment, window);
        std::snprintf(buf, sizeof buf, "%.6f",
                      static_cast<double>(start) / sig.sample_rate());
        os << buf;
        for (std::size_t k = 0; k < bins; ++k) {
            const double m = std::abs(spec[k]);
            std::snprintf(buf, sizeof buf, ",%.2f",
                          m > 0.0 ? std::max(kDbFloor, 20.0 * std::log10(m)) : kDbFloor);
            os << buf;
        }
        os << "\n";
    }
}

int run_compare(const CompareArgs& args) {
    Signal a = load_mono(args.a);
    Signal b = load_mono(args.b);
    if (a.sample_rate() != b.sample_rate())
        throw input_error("sample rate mismatch: " + std::to_string(a.sample_rate()) +
                          " vs " + std::to_string(b.sample_rate()));
    const std::size_t len = std::min(a.size(), b.size());
    auto trunc = [len](const Signal& s) {
        std::vector<double> v = s.real_samples();
        v.resize(len);
        return Signal::from_real(std::move(v), s.sample_rate());
    };
    Signal ta = trunc(a), tb = trunc(b);
    std::printf("NMSE: %.2f dB over %zu samples\n", mse_db(ta, tb), len);
    if (!args.csv_prefix.empty()) {
        write_spectrum_csv(args.csv_prefix + "_spectrum.csv", ta, tb);
        write_spectrogram_csv(args.csv_prefix + "_spectrogram_a.csv", ta, args.window,
                              args.hop);
        write_spectrogram_csv(args.csv_prefix + "_spectrogram_b.csv", tb, args.window,
                              args.hop);
        std::printf("wrote %s_spectrum.csv and spectrogram CSVs\n",
                    args.csv_prefix.c_str());
    }
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"modal analysis of impulse responses: ESPRIT with frequency-warped "
                 "and frequency-zoomed variants, biquad resynthesis"};
    app.require_subcommand(1);

    GenArgs gen;
    CLI::App* cgen = app.add_subcommand("gen", "synthesize a test signal plus truth table");
    cgen->add_option("--out", gen.out, "output WAV path");
    cgen->add_option("--truth", gen.truth, "ground-truth mode table path");
    cgen->add_option("--fs", gen.fs, "sample rate, Hz");
    cgen->add_option("--dur", gen.dur, "duration, seconds");
    cgen->add_option("--mode", gen.modes, "mode f:alpha:gamma_c[:gamma_s]");
    cgen->add_option("--triplet", gen.triplets, "detuned triplet f0:detune[:alpha[:amp]]");
    cgen->add_option("--partials", gen.partials, "inharmonic series partial count");
    cgen->add_option("--f0", gen.f0, "series fundamental, Hz");
    cgen->add_option("--B", gen.inharmonicity, "series inharmonicity");
    cgen->add_option("--alpha", gen.series_alpha, "series decay, nepers/sample");
    cgen->add_option("--amp", gen.series_amp, "series amplitude");
    cgen->add_option("--snr", gen.snr_db, "noise SNR, dB");
    cgen->add_option("--seed", gen.seed, "noise RNG seed");

    AnalyzeArgs ana;
    CLI::App* cana = app.add_subcommand("analyze", "estimate modes from a WAV file");
    cana->add_option("input", ana.input, "input WAV")->required();
    cana->add_option("--out", ana.out, "mode table path");
    cana->add_option("--method", ana.method, "esprit | fw | fz");
    cana->add_option("--preset", ana.preset, "piano | rir | custom");
    cana->add_option("--order", ana.order, "knee | db:<L> | fixed:<M>");
    cana->add_option("--hankel", ana.hankel, "Hankel size N (needs 2N samples)");
    cana->add_option("--rho", ana.rho, "warping factor");
    cana->add_option("--zoom", ana.zoom, "zoom factor Kz; sets rho=(Kz-1)/(Kz+1)");
    cana->add_option("--pre-damp", ana.pre_damp_sigma, "pre-damping, nepers/second");
    cana->add_option("--bands", ana.bands, "subband count");
    cana->add_option("--decimate", ana.decimate, "subband decimation factor");
    cana->add_option("--f0", ana.f0, "harmonic plan fundamental, Hz");
    cana->add_option("--partials", ana.partials, "harmonic plan partial count");
    cana->add_option("--B", ana.inharmonicity, "harmonic plan inharmonicity");
    cana->add_flag("--optimize", ana.optimize, "refine modes in the time domain");
    cana->add_option("--delta-omega", ana.delta_omega, "optimizer frequency window, Hz");
    cana->add_option("--delta-alpha", ana.delta_alpha, "optimizer damping window, relative");

    SynthArgs syn;
    CLI::App* csyn = app.add_subcommand("synth", "render a mode table to WAV");
    csyn->add_option("table", syn.table, "mode table JSON")->required();
    csyn->add_option("--out", syn.out, "output WAV path");
    csyn->add_option("--duration", syn.duration, "seconds (default: longest T60)");

    CompareArgs cmp;
    CLI::App* ccmp = app.add_subcommand("compare", "NMSE and plot data for two WAVs");
    ccmp->add_option("a", cmp.a, "reference WAV")->required();
    ccmp->add_option("b", cmp.b, "candidate WAV")->required();
    ccmp->add_option("--csv", cmp.csv_prefix, "CSV plot data path prefix");
    ccmp->add_option("--window", cmp.window, "spectrogram window");
    ccmp->add_option("--hop", cmp.hop, "spectrogram hop");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (cgen->parsed())
            return run_gen(gen);
        if (cana->parsed())
            return run_analyze(ana);
        if (csyn->parsed())
            return run_synth(syn);
        if (ccmp->parsed())
            return run_compare(cmp);
    } catch (const input_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInput;
    } catch (const numeric_error& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInput;
    }
    return kExitInput;
}

} // namespace modal::cli

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "modal/generate.hpp"
#include "modal/optimize.hpp"
#include "test_helpers.hpp"

using namespace modal;

namespace {

Theta make_theta(std::initializer_list<double> alphas, std::initializer_list<double> omegas) {
    Theta t;
    t.alphas = Eigen::Map<const Eigen::VectorXd>(std::data(alphas),
                                                 static_cast<Eigen::Index>(alphas.size()));
    t.omegas = Eigen::Map<const Eigen::VectorXd>(std::data(omegas),
                                                 static_cast<Eigen::Index>(omegas.size()));
    return t;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
    return Eigen::Map<const Eigen::VectorXd>(std::data(v), static_cast<Eigen::Index>(v.size()));
}

} // namespace

TEST_CASE("model_signal: quarter-band cosine and zero amplitudes") {
    Theta t = make_theta({0.0}, {M_PI / 2.0});
    Signal s = model_signal(t, vec({0.0}), vec({1.0}), 4, 44100.0);
    CHECK(s[0].real() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s[1].real() == doctest::Approx(0.0).scale(1).epsilon(1e-15));
    CHECK(s[2].real() == doctest::Approx(-1.0).epsilon(1e-15));
    Signal z = model_signal(t, vec({0.0}), vec({0.0}), 4, 44100.0);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(z[i].real() == 0.0);
}

TEST_CASE("model_signal matches generate on identical parameters") {
    const double fs = 8000.0;
    SyntheticSpec spec;
    spec.add_mode(300.0, 1e-3, 0.7, 0.2);
    spec.add_mode(1200.0, 5e-4, -0.4, 0.9);
    Signal g = generate(spec, 512, fs);
    Theta t = make_theta({1e-3, 5e-4},
                         {2.0 * M_PI * 300.0 / fs, 2.0 * M_PI * 1200.0 / fs});
    Signal m = model_signal(t, vec({0.2, 0.9}), vec({0.7, -0.4}), 512, fs);
    for (std::size_t i = 0; i < 512; ++i)
        CHECK(m[i].real() == doctest::Approx(g[i].real()).scale(1).epsilon(1e-12));
}

TEST_CASE("cost: zero at exact model") {
    const double fs = 8000.0;
    Theta t = make_theta({1e-3}, {0.5});
    Eigen::VectorXd gs = vec({0.3}), gc = vec({0.8});
    Signal h = model_signal(t, gs, gc, 256, fs);
    CHECK(cost(t, gs, gc, h) == doctest::Approx(0.0).scale(1).epsilon(1e-18));
    Eigen::VectorXd g = gradient(t, gs, gc, h);
    CHECK(g.norm() == doctest::Approx(0.0).scale(1).epsilon(1e-12));
}

TEST_CASE("gradient: t=0 single sample annihilates the Jacobian") {
    Theta t = make_theta({0.1}, {0.7});
    Eigen::VectorXd gs = vec({0.5}), gc = vec({-0.2});
    Signal h = Signal::from_real({5.0}, 8000.0); // large residual at t=0
    Eigen::VectorXd g = gradient(t, gs, gc, h);
    CHECK(g.norm() == 0.0);
}

TEST_CASE("gradient matches central finite differences on random instances") {
    testutil::Rng rng(41);
    const std::size_t t_len = 512;
    const double fs = 8000.0;
    for (int trial = 0; trial < 50; ++trial) {
        const int m = 1 + static_cast<int>(rng.uniform(0.0, 5.0));
        Theta t;
        t.alphas.resize(m);
        t.omegas.resize(m);
        Eigen::VectorXd gs(m), gc(m);
        for (int i = 0; i < m; ++i) {
            t.alphas(i) = rng.uniform(1e-4, 1e-2);
            t.omegas(i) = rng.uniform(0.05, 3.0);
            gs(i) = rng.normal();
            gc(i) = rng.normal();
        }
        std::vector<double> noise(t_len);
        for (double& v : noise)
            v = rng.normal();
        Signal h = Signal::from_real(noise, fs);

        Eigen::VectorXd g = gradient(t, gs, gc, h);
        const double step = 1e-6;
        double max_rel = 0.0;
        for (int k = 0; k < 2 * m; ++k) {
            auto perturbed = [&](double delta) {
                Theta tp = t;
                if (k < m)
                    tp.alphas(k) += delta;
                else
                    tp.omegas(k - m) += delta;
                return cost(tp, gs, gc, h);
            };
            const double fd = (perturbed(step) - perturbed(-step)) / (2.0 * step);
            const double scale = std::max({std::abs(fd), std::abs(g(k)), 1e-6});
            max_rel = std::max(max_rel, std::abs(fd - g(k)) / scale);
        }
        CHECK(max_rel < 1e-6);
    }
}

TEST_CASE("refit_amplitudes: exact recovery and cost non-increase") {
    const double fs = 8000.0;
    Theta truth = make_theta({1e-3, 4e-4}, {0.4, 1.3});
    Eigen::VectorXd gs = vec({0.7, -0.3}), gc = vec({0.2, 0.9});
    Signal h = model_signal(truth, gs, gc, 512, fs);

    SUBCASE("refit at truth returns the generator amplitudes") {
        auto [rs, rc] = refit_amplitudes(truth, h);
        for (int i = 0; i < 2; ++i) {
            CHECK(rs(i) == doctest::Approx(gs(i)).epsilon(1e-10));
            CHECK(rc(i) == doctest::Approx(gc(i)).epsilon(1e-10));
        }
    }
    SUBCASE("refit never increases the cost") {
        Theta off = make_theta({1.05e-3, 4.2e-4}, {0.4003, 1.2996});
        const double j_before = cost(off, gs, gc, h);
        auto [rs, rc] = refit_amplitudes(off, h);
        CHECK(cost(off, rs, rc, h) <= j_before * (1.0 + 1e-12));
    }
}

TEST_CASE("optimize_band: init at ground truth returns immediately") {
    const double fs = 8000.0;
    SyntheticSpec spec;
    spec.add_mode(500.0, 1e-3, 1.0, 0.2);
    Signal h = generate(spec, 1024, fs);
    ModeSet init(expand_spec(spec, fs), ModeSource::Plain, fs);
    OptReport report;
    OptConfig cfg;
    ModeSet out = optimize_band(h, init, cfg, &report);
    CHECK(report.final_cost <= report.initial_cost);
    CHECK(report.final_cost <= cfg.cost_tol);
    CHECK(out[0].omega() == doctest::Approx(init[0].omega()).epsilon(1e-9));
    CHECK(out[0].alpha() == doctest::Approx(init[0].alpha()).epsilon(1e-6));
}

TEST_CASE("optimize_band: perturbed two-mode init recovers the truth") {
    const double fs = 8000.0;
    const double f1 = 500.0, f2 = 1400.0;
    const double a1 = 1e-3, a2 = 4e-4;
    SyntheticSpec spec;
    spec.add_mode(f1, a1, 1.0, 0.2);
    spec.add_mode(f2, a2, 0.6, -0.4);
    Signal h = generate(spec, 4096, fs);

    std::vector<Mode> init_modes{Mode(2.0 * M_PI * (f1 + 0.3) / fs, a1 * 1.05),
                                 Mode(2.0 * M_PI * (f2 + 0.3) / fs, a2 * 1.05)};
    ModeSet init(init_modes, ModeSource::Plain, fs);
    OptConfig cfg; // delta_omega 0.5 Hz, delta_alpha 0.1 alpha0
    OptReport report;
    ModeSet out = optimize_band(h, init, cfg, &report);
    REQUIRE(out.size() == 2);
    CHECK(std::abs(out[0].freq_hz(fs) - f1) < 0.01);
    CHECK(std::abs(out[1].freq_hz(fs) - f2) < 0.01);
    CHECK(std::abs(out[0].alpha() - a1) / a1 < 0.005);
    CHECK(std::abs(out[1].alpha() - a2) / a2 < 0.005);
    CHECK(report.fevals <= cfg.max_fevals);

    // monotone non-increase across accepted steps
    for (std::size_t i = 1; i < report.accepted_costs.size(); ++i)
        CHECK(report.accepted_costs[i] <= report.accepted_costs[i - 1] * (1.0 + 1e-12));

    // box feasibility, exactly
    for (std::size_t i = 0; i < 2; ++i) {
        const double w0 = init[i].omega(), a0 = init[i].alpha();
        const double dw = 2.0 * M_PI * cfg.delta_omega_hz / fs;
        CHECK(out[i].omega() >= w0 - dw - 1e-15);
        CHECK(out[i].omega() <= w0 + dw + 1e-15);
        CHECK(out[i].alpha() >= a0 * (1.0 - cfg.delta_alpha_rel) - 1e-18);
        CHECK(out[i].alpha() <= a0 * (1.0 + cfg.delta_alpha_rel) + 1e-18);
    }
    // ordering
    CHECK(out[0].omega() <= out[1].omega());
}

TEST_CASE("optimize_band: init beyond the window converges to the box edge") {
    const double fs = 8000.0;
    SyntheticSpec spec;
    spec.add_mode(500.0, 1e-3, 1.0);
    Signal h = generate(spec, 2048, fs);
    // init 2 Hz off with a 0.5 Hz window: truth is outside the box
    ModeSet init({Mode(2.0 * M_PI * 502.0 / fs, 1e-3)}, ModeSource::Plain, fs);
    OptConfig cfg;
    OptReport report;
    ModeSet out = optimize_band(h, init, cfg, &report);
    CHECK(report.final_cost <= report.initial_cost);
    const double w_lo = init[0].omega() - 2.0 * M_PI * 0.5 / fs;
    CHECK(out[0].omega() == doctest::Approx(w_lo).epsilon(1e-6));
}

TEST_CASE("optimize_band: non-finite initial cost errors") {
    Signal h = Signal::from_real({1.0, 2.0, 0.5, 0.1}, 8000.0);
    ModeSet init({Mode(0.5, 0.0, 1e200, 1e200)}, ModeSource::Plain, 8000.0);
    // gigantic amplitudes fed through refit are fine; force non-finite via
    // an absurd signal instead
    std::vector<double> bad(16, 0.0);
    bad[3] = std::numeric_limits<double>::infinity();
    CHECK_THROWS(optimize_band(Signal::from_real(bad, 8000.0), init, OptConfig{}));
}

TEST_CASE("optimize_all: single band equals whole-signal optimize_band") {
    const double fs = 8000.0;
    SyntheticSpec spec;
    spec.add_mode(600.0, 1e-3, 1.0, 0.1);
    Signal h = generate(spec, 2048, fs);
    ModeSet init({Mode(2.0 * M_PI * 600.2 / fs, 1.03e-3)}, ModeSource::Plain, fs);
    OptConfig cfg;
    ModeSet whole = optimize_band(h, init, cfg);
    ModeSet all = optimize_all(h, init, nullptr, cfg);
    REQUIRE(all.size() == whole.size());
    CHECK(all[0].omega() == doctest::Approx(whole[0].omega()).epsilon(1e-12));
    CHECK(all[0].alpha() == doctest::Approx(whole[0].alpha()).epsilon(1e-9));
}

TEST_CASE("optimize_all: disjoint bands match whole-signal optimization") {
    const double fs = 8000.0;
    const double f1 = 500.0, f2 = 2500.0;
    SyntheticSpec spec;
    spec.add_mode(f1, 1e-3, 1.0, 0.3);
    spec.add_mode(f2, 5e-4, 0.8, -0.2);
    Signal h = generate(spec, 4096, fs);
    ModeSet init({Mode(2.0 * M_PI * (f1 + 0.2) / fs, 1.04e-3),
                  Mode(2.0 * M_PI * (f2 + 0.2) / fs, 5.2e-4)},
                 ModeSource::Plain, fs);
    OptConfig cfg;
    ModeSet whole = optimize_band(h, init, cfg);
    BandPlan plan = plan_uniform(2, fs, 1.2, 8, 8, 10);
    ModeSet banded = optimize_all(h, init, &plan, cfg);
    REQUIRE(banded.size() == 2);
    CHECK(std::abs(banded[0].freq_hz(fs) - f1) < 0.01);
    CHECK(std::abs(banded[1].freq_hz(fs) - f2) < 0.01);
    CHECK(std::abs(banded[0].freq_hz(fs) - whole[0].freq_hz(fs)) < 0.01);
    CHECK(std::abs(banded[1].freq_hz(fs) - whole[1].freq_hz(fs)) < 0.01);
}

TEST_CASE("optimize_all: empty mode set is a no-op") {
    Signal h = Signal::from_real({1.0, 0.5, 0.2, 0.1}, 8000.0);
    ModeSet empty({}, ModeSource::Plain, 8000.0);
    ModeSet out = optimize_all(h, empty, nullptr, OptConfig{});
    CHECK(out.size() == 0);
    CHECK(out.source() == ModeSource::Optimized);
}

#include "modal/optimize.hpp"

#include <algorithm>
#include <cmath>

namespace modal {

namespace {

std::vector<DampedPole> to_poles(const Theta& theta) {
    std::vector<DampedPole> poles(theta.size());
    for (std::size_t m = 0; m < poles.size(); ++m)
        poles[m] = {theta.omegas(static_cast<Eigen::Index>(m)),
                    theta.alphas(static_cast<Eigen::Index>(m))};
    return poles;
}

} // namespace

Signal model_signal(const Theta& theta, const Eigen::VectorXd& gamma_s,
                    const Eigen::VectorXd& gamma_c, std::size_t t_len, double sample_rate) {
    if (theta.alphas.size() != theta.omegas.size() || gamma_s.size() != gamma_c.size() ||
        gamma_s.size() != theta.alphas.size())
        throw input_error("model_signal: inconsistent dimensions");
    Eigen::MatrixXd basis = real_mode_basis(to_poles(theta), t_len);
    const auto m = theta.alphas.size();
    Eigen::VectorXd coef(2 * m);
    coef << gamma_s, gamma_c;
    Eigen::VectorXd y = basis * coef;
    return Signal::from_real(std::vector<double>(y.data(), y.data() + y.size()), sample_rate);
}

namespace {

Eigen::VectorXd residual(const Theta& theta, const Eigen::VectorXd& gamma_s,
                         const Eigen::VectorXd& gamma_c, const Signal& h) {
    const std::size_t t_len = h.size();
    const std::size_t m = theta.size();
    Eigen::VectorXd r(static_cast<Eigen::Index>(t_len));
    for (std::size_t t = 0; t < t_len; ++t) {
        const double td = static_cast<double>(t);
        double model = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            model += std::exp(-theta.alphas(ii) * td) *
                     (gamma_s(ii) * std::sin(theta.omegas(ii) * td) +
                      gamma_c(ii) * std::cos(theta.omegas(ii) * td));
        }
        r(static_cast<Eigen::Index>(t)) = h[t].real() - model;
    }
    return r;
}

} // namespace

double cost(const Theta& theta, const Eigen::VectorXd& gamma_s, const Eigen::VectorXd& gamma_c,
            const Signal& h) {
    return 0.5 * residual(theta, gamma_s, gamma_c, h).squaredNorm();
}

Eigen::VectorXd gradient(const Theta& theta, const Eigen::VectorXd& gamma_s,
                         const Eigen::VectorXd& gamma_c, const Signal& h) {
    const std::size_t t_len = h.size();
    const auto m = static_cast<Eigen::Index>(theta.size());
    Eigen::VectorXd r = residual(theta, gamma_s, gamma_c, h);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(2 * m);
    // grad J = D^T (hat h - h) = -D^T r, with Jacobian entries
    //   d hat h / d alpha_m = -t e^{-a t} (gs sin + gc cos)
    //   d hat h / d omega_m =  t e^{-a t} (gs cos - gc sin)
    for (Eigen::Index i = 0; i < m; ++i) {
        const double a = theta.alphas(i), w = theta.omegas(i);
        const double gs = gamma_s(i), gc = gamma_c(i);
        double acc_a = 0.0, acc_w = 0.0;
        for (std::size_t t = 0; t < t_len; ++t) {
            const double td = static_cast<double>(t);
            const double env = td * std::exp(-a * td);
            const double s = std::sin(w * td), c = std::cos(w * td);
            const double da = -env * (gs * s + gc * c);
            const double dw = env * (gs * c - gc * s);
            const double rt = r(static_cast<Eigen::Index>(t));
            acc_a -= da * rt;
            acc_w -= dw * rt;
        }
        g(i) = acc_a;
        g(m + i) = acc_w;
    }
    return g;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> refit_amplitudes(const Theta& theta,
                                                             const Signal& h) {
    ModeSet fitted = estimate_amplitudes(h, to_poles(theta), ModeSource::Optimized);
    const auto m = static_cast<Eigen::Index>(theta.size());
    Eigen::VectorXd gs(m), gc(m);
    // estimate_amplitudes sorts by omega; map the fit back onto theta's order
    std::vector<std::size_t> order(theta.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
        if (theta.omegas(ia) != theta.omegas(ib))
            return theta.omegas(ia) < theta.omegas(ib);
        return theta.alphas(ia) < theta.alphas(ib);
    });
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const Mode& mode = fitted[rank];
        gs(static_cast<Eigen::Index>(order[rank])) = mode.gamma_s();
        gc(static_cast<Eigen::Index>(order[rank])) = mode.gamma_c();
    }
    return {gs, gc};
}

namespace {

struct Box {
    Eigen::VectorXd alpha_lo, alpha_hi;
    Eigen::VectorXd omega_lo, omega_hi;
};

Box make_box(const Theta& theta0, const OptConfig& cfg, double sample_rate) {
    const double dw = 2.0 * M_PI * cfg.delta_omega_hz / sample_rate;
    Box box;
    box.alpha_lo = theta0.alphas * (1.0 - cfg.delta_alpha_rel);
    box.alpha_hi = theta0.alphas * (1.0 + cfg.delta_alpha_rel);
    // alpha0 may sit at zero; keep lo <= hi regardless of sign
    for (Eigen::Index i = 0; i < box.alpha_lo.size(); ++i)
        if (box.alpha_lo(i) > box.alpha_hi(i))
            std::swap(box.alpha_lo(i), box.alpha_hi(i));
    box.omega_lo = theta0.omegas.array() - dw;
    box.omega_hi = theta0.omegas.array() + dw;
    for (Eigen::Index i = 0; i < box.omega_lo.size(); ++i) {
        box.omega_lo(i) = std::max(box.omega_lo(i), 0.0);
        box.omega_hi(i) = std::min(box.omega_hi(i), M_PI);
    }
    return box;
}

// Pool-adjacent-violators: Euclidean projection onto ascending sequences.
void isotonic_inplace(Eigen::VectorXd& x) {
    const auto n = x.size();
    std::vector<double> value(static_cast<std::size_t>(n));
    std::vector<double> weight(static_cast<std::size_t>(n));
    std::vector<Eigen::Index> count(static_cast<std::size_t>(n));
    std::size_t top = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        value[top] = x(i);
        weight[top] = 1.0;
        count[top] = 1;
        ++top;
        while (top > 1 && value[top - 2] > value[top - 1]) {
            const double w = weight[top - 2] + weight[top - 1];
            value[top - 2] = (weight[top - 2] * value[top - 2] +
                              weight[top - 1] * value[top - 1]) / w;
            weight[top - 2] = w;
            count[top - 2] += count[top - 1];
            --top;
        }
    }
    Eigen::Index pos = 0;
    for (std::size_t blk = 0; blk < top; ++blk)
        for (Eigen::Index k = 0; k < count[blk]; ++k)
            x(pos++) = value[blk];
}

// Project onto {box} intersect {omega ascending}. All omegas share one
// delta, so the box bounds are ascending whenever theta0 is, and clipping
// after PAV preserves the ordering exactly.
Theta project(Theta theta, const Box& box) {
    isotonic_inplace(theta.omegas);
    for (Eigen::Index i = 0; i < theta.omegas.size(); ++i) {
        theta.omegas(i) = std::clamp(theta.omegas(i), box.omega_lo(i), box.omega_hi(i));
        theta.alphas(i) = std::clamp(theta.alphas(i), box.alpha_lo(i), box.alpha_hi(i));
    }
    return theta;
}

Eigen::VectorXd pack(const Theta& t) {
    Eigen::VectorXd v(2 * t.alphas.size());
    v << t.alphas, t.omegas;
    return v;
}

Theta unpack(const Eigen::VectorXd& v) {
    const auto m = v.size() / 2;
    Theta t;
    t.alphas = v.head(m);
    t.omegas = v.tail(m);
    return t;
}

} // namespace

ModeSet optimize_band(const Signal& h, const ModeSet& init, const OptConfig& cfg,
                      OptReport* report) {
    if (init.size() == 0)
        throw input_error("optimize_band: initial mode set is empty");
    if (!h.is_real())
        throw input_error("optimize_band: expects a real signal");

    const auto m = static_cast<Eigen::Index>(init.size());
    Theta theta;
    theta.alphas.resize(m);
    theta.omegas.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        theta.alphas(i) = init[static_cast<std::size_t>(i)].alpha();
        theta.omegas(i) = init[static_cast<std::size_t>(i)].omega();
    }
    const Box box = make_box(theta, cfg, h.sample_rate());

    auto [gs, gc] = refit_amplitudes(theta, h);
    double j = cost(theta, gs, gc, h);
    std::size_t fevals = 1;
    if (!std::isfinite(j))
        throw numeric_error("optimize_band: non-finite cost at the initial point");
    const double j0 = j;

    Eigen::VectorXd g = gradient(theta, gs, gc, h);
    Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(2 * m, 2 * m);
    std::size_t iters = 0;
    bool converged = j <= cfg.cost_tol;
    if (report)
        report->accepted_costs.assign(1, j);

    // Backtracking search along dir; accepts only strict decrease, with the
    // Armijo slope term applied to the actual (projected) displacement.
    auto line_search = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& dir, Theta& cand,
                           double& j_cand) {
        double step = 1.0;
        while (fevals < cfg.max_fevals && step >= 1e-14) {
            cand = project(unpack(x + step * dir), box);
            const Eigen::VectorXd dx = pack(cand) - x;
            if (dx.norm() <= cfg.step_tol)
                return false;
            j_cand = cost(cand, gs, gc, h);
            ++fevals;
            if (j_cand < j && j_cand <= j + 1e-4 * std::min(0.0, g.dot(dx)))
                return true;
            step *= 0.5;
        }
        return false;
    };

    while (!converged && iters < cfg.max_band_iters && fevals < cfg.max_fevals) {
        ++iters;
        Eigen::VectorXd dir = -(hinv * g);
        bool bfgs_dir = true;
        if (dir.dot(g) >= 0.0) {
            dir = -g; // curvature went bad; fall back to steepest descent
            bfgs_dir = false;
        }

        const Eigen::VectorXd x = pack(theta);
        Theta cand;
        double j_cand = j;
        bool accepted = line_search(x, dir, cand, j_cand);
        if (!accepted && bfgs_dir)
            accepted = line_search(x, -g, cand, j_cand);
        if (!accepted) {
            converged = true; // no feasible descent step above step_tol
            break;
        }

        const Eigen::VectorXd s = pack(cand) - x;
        theta = cand;
        try {
            auto refit = refit_amplitudes(theta, h);
            gs = refit.first;
            gc = refit.second;
            const double j_refit = cost(theta, gs, gc, h);
            ++fevals;
            j = std::min(j_cand, j_refit);
        } catch (const numeric_error&) {
            j = j_cand; // keep previous amplitudes when the refit basis collides
        }
        if (report)
            report->accepted_costs.push_back(j);

        Eigen::VectorXd g_new = gradient(theta, gs, gc, h);
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            // BFGS inverse update
            const Eigen::VectorXd hy = hinv * y;
            const double yhy = y.dot(hy);
            hinv += ((sy + yhy) / (sy * sy)) * (s * s.transpose());
            hinv -= (hy * s.transpose() + s * hy.transpose()) / sy;
        }
        g = std::move(g_new);

        if (j <= cfg.cost_tol || s.norm() <= cfg.step_tol)
            converged = true;
    }

    if (report) {
        report->fevals = fevals;
        report->iterations = iters;
        report->initial_cost = j0;
        report->final_cost = j;
        report->converged = converged;
    }

    std::vector<Mode> out;
    out.reserve(init.size());
    for (Eigen::Index i = 0; i < m; ++i)
        out.emplace_back(theta.omegas(i), theta.alphas(i), gs(i), gc(i));
    return ModeSet(std::move(out), ModeSource::Optimized, h.sample_rate());
}

ModeSet optimize_all(const Signal& h, const ModeSet& modes, const BandPlan* plan,
                     const OptConfig& cfg, EstimationLog* log) {
    if (modes.size() == 0)
        return ModeSet({}, ModeSource::Optimized, h.sample_rate());
    if (!plan)
        return optimize_band(h, modes, cfg);

    plan->validate();
    const std::vector<double> edges = plan->ownership_edges();
    const double fs = h.sample_rate();

    std::vector<std::vector<Mode>> groups(plan->bands.size());
    std::vector<Mode> outside;
    for (const Mode& mode : modes.modes()) {
        const double f_hz = mode.freq_hz(fs);
        const auto it = std::upper_bound(edges.begin(), edges.end(), f_hz);
        if (it == edges.begin() || it == edges.end()) {
            outside.push_back(mode); // beyond the plan; left unoptimized
            continue;
        }
        groups[static_cast<std::size_t>(it - edges.begin()) - 1].push_back(mode);
    }

    std::vector<DampedPole> refined;
    for (std::size_t b = 0; b < groups.size(); ++b) {
        if (groups[b].empty())
            continue;
        ModeSet band_init(groups[b], modes.source(), fs);
        try {
            Signal band_sig = bandlimit(h, edges[b], edges[b + 1],
                                        plan->bands[b].filter.order);
            ModeSet band_out = optimize_band(band_sig, band_init, cfg);
            for (const Mode& mode : band_out.modes())
                refined.push_back({mode.omega(), mode.alpha()});
        } catch (const std::exception& e) {
            if (log)
                log->note("optimize band " + std::to_string(b) + " failed: " + e.what());
            for (const Mode& mode : band_init.modes())
                refined.push_back({mode.omega(), mode.alpha()});
        }
    }
    for (const Mode& mode : outside)
        refined.push_back({mode.omega(), mode.alpha()});

    resolve_pole_ties(refined, h, log);
    return estimate_amplitudes(h, refined, ModeSource::Optimized);
}

} // namespace modal

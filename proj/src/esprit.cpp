#include "modal/esprit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace modal {

namespace {

constexpr double kTieTol = 1e-12;
// Poles outside |psi| = 1 + kUnstableTol are discarded; radii between the
// Mode tolerance and this are clamped back onto the admissible disk.
constexpr double kUnstableTol = 1e-6;
constexpr std::size_t kDirectLsMaxElems = 8'000'000;

} // namespace

double default_alpha_ceiling(std::size_t n) {
    return std::log(1e6) / static_cast<double>(std::max<std::size_t>(n, 1));
}

HankelPair build_hankel(const Signal& signal, std::size_t n) {
    if (n < 2)
        throw input_error("build_hankel: N must be >= 2");
    if (signal.size() < 2 * n)
        throw input_error("build_hankel: need at least " + std::to_string(2 * n) +
                          " samples, got " + std::to_string(signal.size()));
    HankelPair pair;
    pair.n = n;
    pair.real = signal.is_real();
    const auto& s = signal.samples();
    if (pair.real) {
        pair.Hr.resize(n, n);
        pair.Kr.resize(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                pair.Hr(i, j) = s[i + j].real();
                pair.Kr(i, j) = s[i + j + 1].real();
            }
    } else {
        pair.Hc.resize(n, n);
        pair.Kc.resize(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                pair.Hc(i, j) = s[i + j];
                pair.Kc(i, j) = s[i + j + 1];
            }
    }
    return pair;
}

PencilSvd pencil_svd(const HankelPair& pair) {
    PencilSvd out;
    out.real = pair.real;
    if (pair.real) {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(pair.Hr, Eigen::ComputeThinU | Eigen::ComputeThinV);
        out.Ur = svd.matrixU();
        out.Vr = svd.matrixV();
        out.singular_values = svd.singularValues();
    } else {
        Eigen::BDCSVD<Eigen::MatrixXcd> svd(pair.Hc, Eigen::ComputeThinU | Eigen::ComputeThinV);
        out.Uc = svd.matrixU();
        out.Vc = svd.matrixV();
        out.singular_values = svd.singularValues();
    }
    return out;
}

std::size_t select_order(const std::vector<double>& singular_values, const OrderSpec& method) {
    const std::size_t n = singular_values.size();
    if (n < 2)
        throw input_error("select_order: need at least 2 singular values");
    for (std::size_t i = 0; i < n; ++i) {
        if (singular_values[i] < 0.0)
            throw input_error("select_order: negative singular value");
        if (i > 0 && singular_values[i] > singular_values[i - 1])
            throw input_error("select_order: singular values must be descending");
    }
    if (singular_values[0] == 0.0)
        throw input_error("select_order: all singular values are zero (empty signal)");

    switch (method.kind) {
    case OrderSpec::Kind::Fixed:
        if (method.fixed_m < 1)
            throw input_error("select_order: fixed order must be >= 1");
        return std::min(method.fixed_m, n);
    case OrderSpec::Kind::ThresholdDb: {
        std::size_t m = 0;
        for (double sv : singular_values)
            if (sv > 0.0 && 20.0 * std::log10(sv / singular_values[0]) > method.level_db)
                ++m;
        return std::max<std::size_t>(m, 1);
    }
    case OrderSpec::Kind::KneePoint: {
        // Signed distance above the chord on the log-magnitude curve; the
        // knee of a descending scree curve is the last point before the
        // drop-off, which lies above the chord.
        const double floor_sv = singular_values[0] * 1e-20;
        std::vector<double> logs(n);
        for (std::size_t i = 0; i < n; ++i)
            logs[i] = std::log10(std::max(singular_values[i], floor_sv));
        // Endpoints sit on the chord (distance 0 by construction); ties break
        // to the smallest index, so a curve with no interior knee gives M = 1.
        const double slope = (logs[n - 1] - logs[0]) / static_cast<double>(n - 1);
        std::size_t best = 0;
        double best_d = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            double d = logs[i] - (logs[0] + slope * static_cast<double>(i));
            if (d > best_d) {
                best_d = d;
                best = i;
            }
        }
        return best + 1;
    }
    }
    throw input_error("select_order: unknown method");
}

std::vector<cplx> pencil_poles(const HankelPair& pair, const PencilSvd& svd, std::size_t m) {
    if (m < 1 || m > pair.n)
        throw input_error("pencil_poles: M must satisfy 1 <= M <= N");
    if (svd.singular_values(static_cast<Eigen::Index>(m) - 1) <= 0.0)
        throw numeric_error("pencil_poles: rank deficient below requested order M=" +
                            std::to_string(m));
    const auto mi = static_cast<Eigen::Index>(m);
    std::vector<cplx> poles;
    poles.reserve(m);
    if (pair.real) {
        Eigen::MatrixXd kv = pair.Kr * svd.Vr.leftCols(mi);
        Eigen::MatrixXd phi = svd.singular_values.head(mi).cwiseInverse().asDiagonal() *
                              (svd.Ur.leftCols(mi).transpose() * kv);
        Eigen::EigenSolver<Eigen::MatrixXd> es(phi);
        if (es.info() != Eigen::Success)
            throw numeric_error("pencil_poles: eigen solver failed");
        for (Eigen::Index i = 0; i < mi; ++i)
            poles.push_back(es.eigenvalues()(i));
    } else {
        Eigen::MatrixXcd kv = pair.Kc * svd.Vc.leftCols(mi);
        Eigen::MatrixXcd phi = svd.singular_values.head(mi).cwiseInverse().asDiagonal() *
                               (svd.Uc.leftCols(mi).adjoint() * kv);
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(phi);
        if (es.info() != Eigen::Success)
            throw numeric_error("pencil_poles: eigen solver failed");
        for (Eigen::Index i = 0; i < mi; ++i)
            poles.push_back(es.eigenvalues()(i));
    }
    return poles;
}

std::vector<cplx> estimate_poles(const HankelPair& pair, std::size_t m) {
    return pencil_poles(pair, pencil_svd(pair), m);
}

std::vector<DampedPole> poles_to_modes(const std::vector<cplx>& poles,
                                       const PoleFoldOptions& opts, EstimationLog* log) {
    EstimationLog scratch;
    EstimationLog& lg = log ? *log : scratch;

    struct Classified {
        double omega, alpha;
        cplx psi;
    };
    std::vector<Classified> kept;
    kept.reserve(poles.size());
    for (const cplx& psi : poles) {
        const double mag = std::abs(psi);
        if (mag < 1e-12) {
            ++lg.dropped_origin;
            continue;
        }
        double alpha = -std::log(mag);
        if (alpha > opts.alpha_ceiling) {
            ++lg.dropped_alpha_ceiling;
            continue;
        }
        if (alpha < -std::log1p(kUnstableTol)) {
            ++lg.dropped_unstable;
            continue;
        }
        if (alpha < -kAlphaTol) {
            alpha = -kAlphaTol;
            ++lg.clamped_marginal;
        }
        kept.push_back({std::arg(psi), alpha, psi});
    }

    std::vector<DampedPole> out;
    if (!opts.real_signal) {
        for (const auto& c : kept)
            out.push_back({c.omega, c.alpha});
    } else {
        // Fold conjugate pairs: keep real poles and upper-half poles, and
        // skip lower-half poles matching the conjugate of a kept one.
        constexpr double im_tol = 1e-11;
        std::vector<const Classified*> upper;
        std::vector<const Classified*> lower;
        for (const auto& c : kept) {
            if (std::abs(c.psi.imag()) <= im_tol) {
                out.push_back({c.psi.real() >= 0.0 ? 0.0 : M_PI, c.alpha});
            } else if (c.psi.imag() > 0.0) {
                upper.push_back(&c);
            } else {
                lower.push_back(&c);
            }
        }
        std::vector<bool> consumed(upper.size(), false);
        for (const Classified* lo : lower) {
            const cplx conj_lo = std::conj(lo->psi);
            std::size_t best = upper.size();
            double best_d = 1e-6 * (1.0 + std::abs(lo->psi));
            for (std::size_t i = 0; i < upper.size(); ++i) {
                if (consumed[i])
                    continue;
                double d = std::abs(conj_lo - upper[i]->psi);
                if (d < best_d) {
                    best_d = d;
                    best = i;
                }
            }
            if (best < upper.size())
                consumed[best] = true; // conjugate duplicate, drop the lower twin
            else
                out.push_back({std::abs(lo->omega), lo->alpha}); // lone pole, fold
        }
        for (const Classified* up : upper)
            out.push_back({up->omega, up->alpha});
    }
    std::sort(out.begin(), out.end(), [](const DampedPole& a, const DampedPole& b) {
        return a.omega != b.omega ? a.omega < b.omega : a.alpha < b.alpha;
    });
    return out;
}

namespace {

// |<psi^t, h>| / ||psi^t||^2 -- cheap single-pole amplitude score.
double projection_score(const DampedPole& p, const Signal& signal) {
    cplx acc(0.0, 0.0);
    double nrm = 0.0;
    const cplx step = std::polar(std::exp(-p.alpha), p.omega);
    cplx basis(1.0, 0.0);
    for (std::size_t t = 0; t < signal.size(); ++t) {
        acc += std::conj(basis) * signal[t];
        nrm += std::norm(basis);
        basis *= step;
        if (nrm > 1e300)
            break;
    }
    return nrm > 0.0 ? std::abs(acc) / nrm : 0.0;
}

} // namespace

void resolve_pole_ties(std::vector<DampedPole>& poles, const Signal& signal,
                       EstimationLog* log) {
    std::sort(poles.begin(), poles.end(), [](const DampedPole& a, const DampedPole& b) {
        return a.omega != b.omega ? a.omega < b.omega : a.alpha < b.alpha;
    });
    std::vector<DampedPole> out;
    for (const DampedPole& p : poles) {
        if (!out.empty() && std::abs(p.omega - out.back().omega) <= kTieTol &&
            std::abs(p.alpha - out.back().alpha) <= kTieTol) {
            if (projection_score(p, signal) > projection_score(out.back(), signal))
                out.back() = p;
            if (log)
                ++log->tie_breaks;
            continue;
        }
        out.push_back(p);
    }
    poles = std::move(out);
}

Eigen::MatrixXd real_mode_basis(const std::vector<DampedPole>& poles, std::size_t t_len) {
    const auto m = static_cast<Eigen::Index>(poles.size());
    Eigen::MatrixXd basis(static_cast<Eigen::Index>(t_len), 2 * m);
    for (Eigen::Index c = 0; c < m; ++c) {
        const double w = poles[static_cast<std::size_t>(c)].omega;
        const double a = poles[static_cast<std::size_t>(c)].alpha;
        for (std::size_t t = 0; t < t_len; ++t) {
            const double td = static_cast<double>(t);
            const double env = std::exp(-a * td);
            basis(static_cast<Eigen::Index>(t), c) = env * std::sin(w * td);
            basis(static_cast<Eigen::Index>(t), m + c) = env * std::cos(w * td);
        }
    }
    return basis;
}

namespace {

[[noreturn]] void throw_colliding(const std::vector<DampedPole>& poles) {
    std::size_t ia = 0, ib = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < poles.size(); ++i)
        for (std::size_t j = i + 1; j < poles.size(); ++j) {
            double d = std::hypot(poles[i].omega - poles[j].omega,
                                  poles[i].alpha - poles[j].alpha);
            if (d < best) {
                best = d;
                ia = i;
                ib = j;
            }
        }
    throw numeric_error("estimate_amplitudes: singular basis; closest modes are indices " +
                        std::to_string(ia) + " and " + std::to_string(ib) +
                        " (distance " + std::to_string(best) + ")");
}

// Columns with identically-zero norm (the sine of a DC or Nyquist mode) are
// excluded from the solve and their coefficient pinned to zero.
ModeSet solve_real_amplitudes(const Signal& signal, const std::vector<DampedPole>& poles,
                              ModeSource source) {
    const std::size_t t_len = signal.size();
    const std::size_t m = poles.size();
    const std::size_t cols = 2 * m;

    Eigen::VectorXd h(static_cast<Eigen::Index>(t_len));
    for (std::size_t t = 0; t < t_len; ++t)
        h(static_cast<Eigen::Index>(t)) = signal[t].real();

    Eigen::VectorXd coef = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cols));

    if (t_len * cols <= kDirectLsMaxElems) {
        Eigen::MatrixXd basis = real_mode_basis(poles, t_len);
        std::vector<Eigen::Index> active;
        for (Eigen::Index c = 0; c < basis.cols(); ++c)
            if (basis.col(c).squaredNorm() > 0.0)
                active.push_back(c);
        Eigen::MatrixXd ab(basis.rows(), static_cast<Eigen::Index>(active.size()));
        for (std::size_t i = 0; i < active.size(); ++i)
            ab.col(static_cast<Eigen::Index>(i)) = basis.col(active[i]);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(ab);
        qr.setThreshold(1e-13);
        if (static_cast<std::size_t>(qr.rank()) < active.size())
            throw_colliding(poles);
        Eigen::VectorXd sol = qr.solve(h);
        for (std::size_t i = 0; i < active.size(); ++i)
            coef(active[i]) = sol(static_cast<Eigen::Index>(i));
    } else {
        // Chunked normal equations; the basis never materializes whole.
        const std::size_t chunk = 16384;
        const auto nc = static_cast<Eigen::Index>(cols);
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(nc, nc);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nc);
        for (std::size_t t0 = 0; t0 < t_len; t0 += chunk) {
            const std::size_t rows = std::min(chunk, t_len - t0);
            Eigen::MatrixXd block(static_cast<Eigen::Index>(rows), nc);
            for (std::size_t c = 0; c < m; ++c) {
                const double w = poles[c].omega, a = poles[c].alpha;
                for (std::size_t r = 0; r < rows; ++r) {
                    const double td = static_cast<double>(t0 + r);
                    const double env = std::exp(-a * td);
                    block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                        env * std::sin(w * td);
                    block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(m + c)) =
                        env * std::cos(w * td);
                }
            }
            gram.selfadjointView<Eigen::Lower>().rankUpdate(block.transpose());
            rhs.noalias() += block.transpose() * h.segment(static_cast<Eigen::Index>(t0),
                                                           static_cast<Eigen::Index>(rows));
        }
        gram = gram.selfadjointView<Eigen::Lower>();
        std::vector<Eigen::Index> active;
        for (Eigen::Index c = 0; c < nc; ++c)
            if (gram(c, c) > 0.0)
                active.push_back(c);
        const auto na = static_cast<Eigen::Index>(active.size());
        Eigen::MatrixXd ga(na, na);
        Eigen::VectorXd ra(na);
        for (Eigen::Index i = 0; i < na; ++i) {
            ra(i) = rhs(active[static_cast<std::size_t>(i)]);
            for (Eigen::Index j = 0; j < na; ++j)
                ga(i, j) = gram(active[static_cast<std::size_t>(i)],
                                active[static_cast<std::size_t>(j)]);
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(ga);
        if (ldlt.info() != Eigen::Success)
            throw_colliding(poles);
        Eigen::VectorXd sol = ldlt.solve(ra);
        // one refinement pass against the normal equations
        sol += ldlt.solve(ra - ga * sol);
        if (!sol.allFinite())
            throw_colliding(poles);
        for (Eigen::Index i = 0; i < na; ++i)
            coef(active[static_cast<std::size_t>(i)]) = sol(i);
    }

    std::vector<Mode> modes;
    modes.reserve(m);
    for (std::size_t i = 0; i < m; ++i)
        modes.emplace_back(poles[i].omega, poles[i].alpha,
                           coef(static_cast<Eigen::Index>(i)),
                           coef(static_cast<Eigen::Index>(m + i)));
    return ModeSet(std::move(modes), source, signal.sample_rate());
}

ModeSet solve_complex_amplitudes(const Signal& signal, const std::vector<DampedPole>& poles,
                                 ModeSource source) {
    const std::size_t t_len = signal.size();
    const auto m = static_cast<Eigen::Index>(poles.size());
    Eigen::MatrixXcd basis(static_cast<Eigen::Index>(t_len), m);
    for (Eigen::Index c = 0; c < m; ++c) {
        const cplx step = std::polar(std::exp(-poles[static_cast<std::size_t>(c)].alpha),
                                     poles[static_cast<std::size_t>(c)].omega);
        cplx v(1.0, 0.0);
        for (std::size_t t = 0; t < t_len; ++t) {
            basis(static_cast<Eigen::Index>(t), c) = v;
            v *= step;
        }
    }
    Eigen::VectorXcd h(static_cast<Eigen::Index>(t_len));
    for (std::size_t t = 0; t < t_len; ++t)
        h(static_cast<Eigen::Index>(t)) = signal[t];
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(basis);
    qr.setThreshold(1e-13);
    if (qr.rank() < m)
        throw_colliding(poles);
    Eigen::VectorXcd gamma = qr.solve(h);
    std::vector<Mode> modes;
    modes.reserve(poles.size());
    for (Eigen::Index i = 0; i < m; ++i)
        modes.push_back(Mode::from_complex_gamma(poles[static_cast<std::size_t>(i)].omega,
                                                 poles[static_cast<std::size_t>(i)].alpha,
                                                 gamma(i)));
    return ModeSet(std::move(modes), source, signal.sample_rate());
}

} // namespace

ModeSet estimate_amplitudes(const Signal& signal, const std::vector<DampedPole>& poles,
                            ModeSource source) {
    if (poles.empty())
        throw input_error("estimate_amplitudes: mode list is empty");
    if (signal.size() < 2 * poles.size())
        throw input_error("estimate_amplitudes: signal shorter than 2 x mode count");
    if (signal.is_real())
        return solve_real_amplitudes(signal, poles, source);
    return solve_complex_amplitudes(signal, poles, source);
}

ModeSet esprit(const Signal& signal, std::size_t n, const OrderSpec& order,
               EstimationLog* log) {
    HankelPair pair = build_hankel(signal, n);
    PencilSvd svd = pencil_svd(pair);
    std::vector<double> sv(svd.singular_values.data(),
                           svd.singular_values.data() + svd.singular_values.size());
    const std::size_t m = select_order(sv, order);
    std::vector<cplx> raw = pencil_poles(pair, svd, m);

    PoleFoldOptions fold;
    fold.real_signal = signal.is_real();
    fold.alpha_ceiling = default_alpha_ceiling(n);
    std::vector<DampedPole> poles = poles_to_modes(raw, fold, log);
    if (!signal.is_real()) {
        // The public API returns ModeSet, whose omega lives on [0, pi].
        std::vector<DampedPole> kept;
        for (const DampedPole& p : poles) {
            if (p.omega >= 0.0 && p.omega <= M_PI)
                kept.push_back(p);
            else if (log)
                ++log->dropped_out_of_band;
        }
        poles = std::move(kept);
    }
    resolve_pole_ties(poles, signal, log);
    if (poles.empty())
        return ModeSet({}, ModeSource::Plain, signal.sample_rate());
    return estimate_amplitudes(signal, poles, ModeSource::Plain);
}

} // namespace modal

#pragma once

#include <Eigen/Dense>

#include "modal/subband.hpp"
#include "modal/types.hpp"

namespace modal {

struct OptConfig {
    double delta_omega_hz = 0.5;  // box half-width on each frequency
    double delta_alpha_rel = 0.1; // box half-width on alpha, relative to alpha0
    std::size_t max_fevals = 500; // cost evaluations, line-search probes included
    double cost_tol = 1e-4;
    double step_tol = 1e-9;
    std::size_t max_band_iters = 100;
};

/// Packed parameter vector theta = [alpha; omega].
struct Theta {
    Eigen::VectorXd alphas;
    Eigen::VectorXd omegas;

    std::size_t size() const { return static_cast<std::size_t>(alphas.size()); }
};

/// hat h(t) = sum_m e^{-alpha_m t} (gamma_s_m sin(omega_m t) + gamma_c_m cos(omega_m t)).
Signal model_signal(const Theta& theta, const Eigen::VectorXd& gamma_s,
                    const Eigen::VectorXd& gamma_c, std::size_t t_len, double sample_rate);

/// J = 1/2 ||h - hat h||^2.
double cost(const Theta& theta, const Eigen::VectorXd& gamma_s, const Eigen::VectorXd& gamma_c,
            const Signal& h);

/// Analytic gradient [dJ/d alpha; dJ/d omega] from the modal Jacobian.
Eigen::VectorXd gradient(const Theta& theta, const Eigen::VectorXd& gamma_s,
                         const Eigen::VectorXd& gamma_c, const Signal& h);

/// LS amplitude refit at fixed theta.
std::pair<Eigen::VectorXd, Eigen::VectorXd> refit_amplitudes(const Theta& theta,
                                                             const Signal& h);

struct OptReport {
    std::size_t fevals = 0;
    std::size_t iterations = 0;
    double initial_cost = 0.0;
    double final_cost = 0.0;
    bool converged = false;
    std::vector<double> accepted_costs; // J after each accepted step, J0 first
};

/// Projected quasi-Newton descent within the boxes around the initial modes,
/// with ascending-omega ordering enforced by projection and amplitudes refit
/// after every accepted step. Cost never increases.
ModeSet optimize_band(const Signal& h, const ModeSet& init, const OptConfig& cfg,
                      OptReport* report = nullptr);

/// Band-by-band refinement: modes grouped by the plan's ownership regions,
/// each group optimized against the band-limited signal at the full rate,
/// then one joint amplitude fit on the unfiltered signal. A null plan
/// optimizes the whole set against the whole signal.
ModeSet optimize_all(const Signal& h, const ModeSet& modes, const BandPlan* plan,
                     const OptConfig& cfg, EstimationLog* log = nullptr);

} // namespace modal

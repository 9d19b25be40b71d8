#pragma once

#include <Eigen/Dense>
#include <limits>

#include "modal/types.hpp"

namespace modal {

/// Model-order selection rule applied to the descending singular values of
/// the Hankel matrix.
struct OrderSpec {
    enum class Kind { KneePoint, ThresholdDb, Fixed };
    Kind kind = Kind::KneePoint;
    double level_db = -18.0;
    std::size_t fixed_m = 1;

    static OrderSpec knee() { return {Kind::KneePoint, 0.0, 0}; }
    static OrderSpec threshold_db(double level) { return {Kind::ThresholdDb, level, 0}; }
    static OrderSpec fixed(std::size_t m) { return {Kind::Fixed, 0.0, m}; }
};

/// H(i,j) = h(i+j), K(i,j) = h(i+j+1), both N x N from the first 2N samples.
/// Real signals get a real pencil, complex signals a complex one.
struct HankelPair {
    Eigen::MatrixXd Hr, Kr;
    Eigen::MatrixXcd Hc, Kc;
    std::size_t n = 0;
    bool real = true;

    cplx h(std::size_t i, std::size_t j) const { return real ? cplx(Hr(i, j), 0.0) : Hc(i, j); }
    cplx k(std::size_t i, std::size_t j) const { return real ? cplx(Kr(i, j), 0.0) : Kc(i, j); }
};

HankelPair build_hankel(const Signal& signal, std::size_t n);

/// Thin SVD of H, kept around so order selection and the pencil projection
/// share one decomposition.
struct PencilSvd {
    Eigen::MatrixXd Ur, Vr;
    Eigen::MatrixXcd Uc, Vc;
    Eigen::VectorXd singular_values;
    bool real = true;
};

PencilSvd pencil_svd(const HankelPair& pair);

std::size_t select_order(const std::vector<double>& singular_values, const OrderSpec& method);

/// Eigenvalues of Phi = S^-1 U^H K V restricted to the leading M-dimensional
/// signal subspace.
std::vector<cplx> pencil_poles(const HankelPair& pair, const PencilSvd& svd, std::size_t m);

/// Convenience wrapper: one SVD + projection.
std::vector<cplx> estimate_poles(const HankelPair& pair, std::size_t m);

struct PoleFoldOptions {
    bool real_signal = true;
    double alpha_ceiling = std::numeric_limits<double>::infinity();
};

/// log of each pole: omega = arg psi, alpha = -ln|psi|. For real signals,
/// conjugate pairs collapse to one mode on [0, pi]; for complex signals the
/// signed omega is kept. Invalid poles are dropped and counted.
std::vector<DampedPole> poles_to_modes(const std::vector<cplx>& poles,
                                       const PoleFoldOptions& opts = {},
                                       EstimationLog* log = nullptr);

/// Merges (omega, alpha) pairs identical within 1e-12, keeping the one whose
/// single-pole projection onto the signal is larger.
void resolve_pole_ties(std::vector<DampedPole>& poles, const Signal& signal,
                       EstimationLog* log = nullptr);

/// Eq.-(19)-style basis [Im V | Re V]: column m is e^{-a_m t} sin(w_m t),
/// column M+m is e^{-a_m t} cos(w_m t), T rows.
Eigen::MatrixXd real_mode_basis(const std::vector<DampedPole>& poles, std::size_t t_len);

/// Least-squares amplitude fit. Real signals solve the real sine/cosine
/// system; complex signals solve the complex Vandermonde system.
ModeSet estimate_amplitudes(const Signal& signal, const std::vector<DampedPole>& poles,
                            ModeSource source = ModeSource::Plain);

/// Full plain-ESPRIT pipeline of build_hankel -> SVD -> select_order ->
/// pencil poles -> fold -> LS amplitudes.
ModeSet esprit(const Signal& signal, std::size_t n, const OrderSpec& order,
               EstimationLog* log = nullptr);

/// Modes with alpha above ln(1e6)/N are treated as numerically dead.
double default_alpha_ceiling(std::size_t n);

} // namespace modal

#pragma once

#include "modal/esprit.hpp"
#include "modal/types.hpp"

namespace modal {

/// Frequency-warping configuration. Positive rho expands low frequencies by
/// (1+rho)/(1-rho) at DC; omega_c is the natural/warped crossover where the
/// map slope is 1, arccos(|rho|) when auto-derived.
struct WarpConfig {
    double rho = 0.0;
    double omega_c = M_PI;
    double pre_damp_sigma = 0.0; // nepers/second, 0 disables

    WarpConfig() = default;
    WarpConfig(double rho_, double pre_damp_sigma_ = 0.0);

    static WarpConfig bark(double sample_rate, double pre_damp_sigma = 0.0);
};

/// Smith-Abel optimal Bark warping factor (fs in kHz inside the formula).
double bark_rho(double sample_rate);

/// rho = (Kz - 1)/(Kz + 1) for a DC zoom factor Kz >= 1.
double rho_for_zoom(double zoom);

/// Allpass phase map, continuous and increasing on [0, pi], fixing 0 and pi.
double warp_frequency(double omega, double rho);

/// Inverse of warp_frequency (the same Blaschke map with -rho).
double unwarp_frequency(double omega, double rho);

/// Pole maps matching warp_signal: a mode at psi in the input appears at
/// warp_pole(psi) in the warped signal.
cplx warp_pole(cplx psi, double rho);
cplx unwarp_pole(cplx psi_tilde, double rho);

/// Tapped-allpass-chain warping: y(k) = sum_t h(t) a_t(k) where a_t is the
/// impulse response of t cascaded first-order allpass sections. O(len*out_len)
/// state propagation. rho = 0 reduces to the identity (up to out_len).
Signal warp_signal(const Signal& signal, double rho, std::size_t out_len);

/// Multiplies sample n by e^{-sigma n / fs}.
Signal pre_damp(const Signal& signal, double sigma_nepers_per_sec);

/// Removes the pre-damping bias: alpha -= sigma/fs. Poles pushed outside the
/// stability tolerance are dropped, marginal ones clamped.
std::vector<DampedPole> undamp_poles(const std::vector<DampedPole>& poles, double sigma,
                                     double sample_rate, EstimationLog* log = nullptr);

/// Warped modes below omega_c joined with plain modes at or above omega_c.
/// Amplitudes are carried as-is; callers re-fit jointly afterwards.
ModeSet merge_modes(const ModeSet& warped, const ModeSet& plain, double omega_c);

/// FW-ESPRIT: warped branch (warp -> ESPRIT -> unwarp) merged at omega_c with
/// the plain branch (pre-damp -> ESPRIT -> undamp), then one joint amplitude
/// fit on the original signal.
ModeSet fw_esprit(const Signal& signal, const WarpConfig& cfg, std::size_t n,
                  const OrderSpec& order, EstimationLog* log = nullptr);

} // namespace modal

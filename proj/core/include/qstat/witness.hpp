#ifndef QSTAT_WITNESS_HPP
#define QSTAT_WITNESS_HPP

#include "qstat/detect.hpp"
#include "qstat/fock.hpp"

namespace qstat::witness {

/// Single-event and coincidence probabilities feeding the
/// non-classicality witness.
struct NcWitnessInput {
    double p_s = 0;
    double p_c = 0;

    void validate() const;
};

/// Result of the linear quantum non-Gaussianity witness
/// W(a) = a p0 + p1 against the Gaussian boundary W_G(a), maximized
/// over the free parameter a. delta_w > 0 certifies a state outside
/// the convex hull of Gaussian states.
struct QngWitnessResult {
    double a_opt = 0;
    double w = 0;
    double w_g = 0;
    double delta_w = 0;    // w - w_g exactly
    double r_boundary = 0; // squeezing parameter of the touching boundary state
};

/// Quantum non-Gaussian depth: the attenuation budget in dB before the
/// witness stops certifying. depth_db is +infinity when p2+ = 0.
struct QngDepthResult {
    double t_min = 0;
    double depth_db = 0;
};

/// W_NC = P_S - 2(sqrt(P_C) - P_C); positive values certify that the
/// state is no mixture of coherent states.
double nc_witness(const NcWitnessInput& in);

/// P_C = R_C/N_P, P_S = (R_SA + R_SB - 2 R_C)/N_P.
NcWitnessInput rates_to_witness_input(const detect::ClickRecord& rec);

/// Probabilities of the extremal Gaussian boundary family at squeezing
/// r (displacement tied as d^2 = (e^{4r}-1)/4).
double boundary_p0(double r);
double boundary_p1(double r);

struct GaussianBoundary {
    double w_g = 0;
    double r_star = 0;
};

/// W_G(a) = max_{r>=0} [a p0(r) + p1(r)]: dense grid over r (step 1e-3,
/// base range [0, 2], extended adaptively while the maximum sits on the
/// right edge) refined by golden-section to 1e-8.
GaussianBoundary gaussian_boundary(double a);

/// Maximize a p0 + p1 - W_G(a) over a (grid step 0.05 on [-50, 50],
/// widened when the optimum touches the range edge, then refined).
QngWitnessResult qng_witness(const detect::PhotonProbabilities& p);

/// T_min = (3/2) p2+/p1^3, depth = -10 log10(T_min) dB.
QngDepthResult qng_depth(const detect::PhotonProbabilities& p);

/// E_N = log2(||rho^{T_B}||_1 / tr rho), clamped to >= 0; the trace
/// normalization keeps separable states at exactly zero even when the
/// stored state carries truncation leakage.
double log_negativity(const fock::DensityMatrix& rho);

} // namespace qstat::witness

#endif

#ifndef QSTAT_DETECT_HPP
#define QSTAT_DETECT_HPP

#include <cstdint>

#include "qstat/fock.hpp"

namespace qstat::detect {

/// On/off detector arrangement: one herald detector on mode 1, a
/// splitter of transmittance t_split feeding detectors A and B on
/// mode 0. No dark counts, no afterpulsing; one binary outcome per
/// excitation pulse.
struct DetectorSetup {
    double eta_h = 1.0;
    double eta_a = 1.0;
    double eta_b = 1.0;
    double t_split = 0.5;
    std::int64_t n_pulses = 10'000'000;

    void validate() const;
};

/// Raw event counts of one measurement run. Deterministic expectation
/// records carry real-valued counts; sampled records are integral.
struct ClickRecord {
    double r0 = 0;    // herald singles
    double r1a = 0;   // herald & A twofold coincidences
    double r1b = 0;   // herald & B twofold coincidences
    double r2 = 0;    // herald & A & B threefold coincidences
    double rs_a = 0;  // unheralded singles on A
    double rs_b = 0;  // unheralded singles on B
    double rc = 0;    // unheralded A & B coincidences
    std::int64_t n_pulses = 0;

    void validate() const;
};

/// (p0, p1, p2+) with the estimated splitter transmittance, as obtained
/// from the count-rate estimators. Sums to one by construction.
struct PhotonProbabilities {
    double p0 = 0;
    double p1 = 0;
    double p2plus = 0;
    double t_est = 0.5;
};

/// Joint on/off outcome distribution over (herald, A, B).
struct ClickDistribution {
    double p[2][2][2] = {};

    double herald() const;        // P(H)
    double herald_and_a() const;  // P(H & A)
    double herald_and_b() const;
    double herald_and_ab() const;
    double a() const;
    double b() const;
    double ab() const;
    double sum() const;
};

/// Clicks of a two-detector arrangement (either one splitter arm pair
/// or one detector per mode for cross-correlations).
struct PairClicks {
    double p_a = 0;
    double p_b = 0;
    double p_ab = 0;

    /// Probability of exactly one click, P_S of the witness input.
    double single_only() const { return p_a + p_b - 2.0 * p_ab; }
};

/// Exact joint click distribution from the photon-number distribution
/// with per-photon independent routing and inclusion-exclusion over the
/// no-click events. Mode 0 is the signal, mode 1 the herald.
ClickDistribution click_probabilities(const fock::DensityMatrix& rho, const DetectorSetup& setup);

/// Expected counts (probability times n_pulses), deterministic.
ClickRecord simulate_record(const fock::DensityMatrix& rho, const DetectorSetup& setup);

/// Monte-Carlo record: the eight joint click patterns are drawn as
/// independent Poisson counts with the expected means and aggregated,
/// which keeps every count-set inclusion exact.
ClickRecord sample_record(const fock::DensityMatrix& rho, const DetectorSetup& setup,
                          std::uint64_t seed);

/// Count-rate estimators: p0 = 1 - (R1A+R1B+R2)/R0, the
/// transmittance-corrected p1, p2+ = 1 - p0 - p1 and
/// T_est = R1A/(R1A+R1B).
PhotonProbabilities probabilities_from_record(const ClickRecord& rec);

/// The two algebraic forms of the heralded g2 identity. They agree to
/// first order in p2+/p1 and are both exposed.
enum class G2Form { probability, vacuum_single };

/// probability form: 2 p2+ / p1^2; vacuum_single form:
/// 2(1 - p0 - p1) / (2(1 - p0) - p1)^2.
double heralded_g2_from_probs(const PhotonProbabilities& p, G2Form form);

/// g2_h = R2 R0 / (R1A R1B), directly from count rates.
double heralded_g2_from_record(const ClickRecord& rec);

/// Normalized intensity correlation <a†i a†j ai aj>/(<ni><nj>); the
/// i == j case uses normal ordering <n(n-1)>.
double unheralded_g2(const fock::DensityMatrix& rho, int mode_i, int mode_j);

/// Signal state conditioned on a herald click:
/// Tr_h[(I (x) Pi) rho]/Tr[(I (x) Pi) rho] with
/// Pi = I - sum_n (1-eta_h)^n |n><n|.
fock::DensityMatrix herald_condition(const fock::DensityMatrix& rho, const DetectorSetup& setup);

/// Click probabilities of one photon-number distribution through a
/// t : (1-t) splitter onto two detectors.
PairClicks hbt_clicks(const Eigen::VectorXd& dist, double eta_a, double eta_b, double t_split);

/// Click probabilities with one detector per mode of a joint
/// distribution; p_ab is the cross-coincidence probability.
PairClicks cross_clicks(const Eigen::MatrixXd& joint, double eta_0, double eta_1);

/// Binomial thinning of a photon-number distribution by a survival
/// probability (pre-detection linear loss).
Eigen::VectorXd lossy_distribution(const Eigen::VectorXd& dist, double survival);

} // namespace qstat::detect

#endif

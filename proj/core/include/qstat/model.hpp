#ifndef QSTAT_MODEL_HPP
#define QSTAT_MODEL_HPP

#include <array>
#include <vector>

#include "qstat/fock.hpp"

namespace qstat::model {

inline constexpr double kPi = 3.14159265358979323846;

/// Mode roles in the two-mode register. Signal is mode 0, herald mode 1.
enum class Mode { signal = 0, herald = 1 };

/// value(I) = scale * I^exponent.
struct PowerLaw {
    double scale = 0.0;
    double exponent = 0.0;
    double operator()(double i) const;
};

/// Parameters of the generalized two-mode Gaussian state, one entry per
/// mode in {signal, herald} order. Thermal occupation and squeezing
/// follow s*I^beta; the displacement amplitude follows s*I^{beta/2}.
/// The displacement phase is fixed to 0 (real positive alpha) by
/// convention. `intensity_factor` is carried opaquely unless
/// `normalize_by_i0` is set, in which case the power laws act on
/// I/intensity_factor.
struct ModelParams {
    double intensity_factor = 1.0;
    std::array<PowerLaw, 2> thermal{};
    std::array<PowerLaw, 2> squeezing{};
    std::array<double, 2> squeezing_phase{kPi, kPi};
    std::array<PowerLaw, 2> displacement{};
    double bs1_theta = 0.0;
    double bs1_phi = 0.0;
    double bs2_theta = 0.0;
    double bs2_phi = 0.0;
    bool normalize_by_i0 = false;

    void validate() const;
};

/// Per-mode values after evaluating the power laws at one intensity.
struct ScaledParams {
    std::array<double, 2> n_th{};
    std::array<double, 2> r{};
    std::array<double, 2> alpha{};
};

/// Strictly increasing positive intensity values.
struct IntensityGrid {
    std::vector<double> values;

    static IntensityGrid linspace(double i_min, double i_max, int n);
    void validate() const;
};

/// Evaluate the power laws at intensity `i`. Throws OverflowError when
/// a scaled value violates the Fock-layer preconditions for `cfg`.
ScaledParams scale_params(const ModelParams& p, double i,
                          const fock::FockConfig& cfg = fock::FockConfig{});

/// Caches the intensity-independent beamsplitter unitaries of one
/// parameter set so that a sweep over I only rebuilds the single-mode
/// squeezers and displacements.
class StateBuilder {
public:
    StateBuilder(const ModelParams& p, const fock::FockConfig& cfg);

    /// rho(I) = D * BS2 * S * BS1 * (th1 (x) th2) * ... reversed; the
    /// whole sequence is applied on the n_work box and projected to
    /// n_max once at the end.
    fock::DensityMatrix state(double i) const;

    const ModelParams& params() const { return params_; }
    const fock::FockConfig& config() const { return cfg_; }

private:
    ModelParams params_;
    fock::FockConfig cfg_;
    Eigen::MatrixXcd bs1_;
    Eigen::MatrixXcd bs2_;
};

/// One-shot convenience wrapper around StateBuilder.
fock::DensityMatrix build_state(const ModelParams& p, double i, const fock::FockConfig& cfg);

using fock::mean_photons;

} // namespace qstat::model

#endif

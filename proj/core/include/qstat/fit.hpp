#ifndef QSTAT_FIT_HPP
#define QSTAT_FIT_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qstat/detect.hpp"
#include "qstat/model.hpp"

namespace qstat::fit {

/// The five observables the model is optimized against simultaneously.
enum class ObservableKind {
    heralded_g2 = 0,
    nc_witness_signal = 1,
    nc_witness_herald = 2,
    nc_witness_cross = 3,
    qng_depth = 4,
};

inline constexpr std::array<ObservableKind, 5> kAllKinds = {
    ObservableKind::heralded_g2,    ObservableKind::nc_witness_signal,
    ObservableKind::nc_witness_herald, ObservableKind::nc_witness_cross,
    ObservableKind::qng_depth,
};

std::string to_string(ObservableKind kind);
ObservableKind kind_from_string(const std::string& name);

/// One observable sweep. x is the mean photon number axis; sigma may be
/// empty (uncertainties are carried for reporting, the loss is
/// range-normalized).
struct ObservableCurve {
    ObservableKind kind = ObservableKind::heralded_g2;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> sigma;

    void validate() const;
};

/// Parameter-vector layout. fixed_phases freezes phi_sq = pi and
/// phi_BS1 = 0 (16 free parameters); free_squeezing_phase adds one
/// shared squeezing phase (17).
enum class ParamMode { fixed_phases, free_squeezing_phase };

/// Ordered names of the free parameters for a mode; the same names key
/// the bounds map and the params file.
const std::vector<std::string>& parameter_names(ParamMode mode);

std::vector<double> encode_params(const model::ModelParams& p, ParamMode mode);
model::ModelParams decode_params(const std::vector<double>& v, ParamMode mode,
                                 bool normalize_by_i0);

struct StageTrace {
    std::string stage;
    std::int64_t evaluations = 0;
    double best_loss = 0;
};

struct FitConfig {
    ParamMode mode = ParamMode::fixed_phases;
    std::map<std::string, std::pair<double, double>> bounds;  // name -> [lo, hi]
    std::map<ObservableKind, double> weights;                 // default 1 per kind
    double endpoint_weight_factor = 3.0;
    double range_penalty_factor = 2.0;
    int random_draws = 2000;
    int keep_top = 20;
    int de_population = 0;  // 0 -> 15 x dimension
    int de_generations = 60;
    double de_crossover = 0.7;
    int annealing_iterations = 5000;
    int local_search_every = 500;
    std::optional<std::uint64_t> seed;  // mandatory for fit()
    model::IntensityGrid grid = model::IntensityGrid::linspace(0.15, 0.55, 12);
    detect::DetectorSetup setup{};
    fock::FockConfig fock{};
    bool normalize_by_i0 = false;
    bool g2_use_rate_form = true;
    int threads = 0;  // 0 -> QSTAT_THREADS env or hardware

    /// Bounds for every parameter name, with Table-S1-scale defaults
    /// filled in where the config does not override them.
    std::map<std::string, std::pair<double, double>> effective_bounds() const;
    void validate() const;
};

struct FitResult {
    model::ModelParams params;
    double loss = 0;
    std::map<ObservableKind, double> per_observable_loss;
    std::vector<StageTrace> stage_trace;
    bool no_improvement_warning = false;
};

/// Model curves on the intensity grid. Values are NaN where the
/// observable is undefined (no clicks); extras are filled on request.
struct ForwardResult {
    std::vector<double> intensity;
    std::vector<double> mean_signal;
    std::vector<double> mean_herald;
    std::array<std::vector<double>, 5> values;  // indexed by ObservableKind
    std::vector<double> log_negativity;         // only with with_entanglement
    std::vector<double> delta_w;                // only with with_delta_w

    /// Fit-ready curve: x is the kind's mean-photon axis (herald mean
    /// for the herald witness, signal mean otherwise).
    ObservableCurve curve(ObservableKind kind) const;
};

struct ForwardOptions {
    fock::FockConfig fock{};
    bool g2_use_rate_form = true;
    bool with_entanglement = false;
    bool with_delta_w = false;
};

/// Evaluate all five observables of the model over the grid with
/// deterministic expectation-mode detection.
ForwardResult forward(const model::ModelParams& p, const model::IntensityGrid& grid,
                      const detect::DetectorSetup& setup, const ForwardOptions& opts = {});

/// Weighted range-normalized RMSE over the kinds present in `data`,
/// with endpoint emphasis and a quadratic penalty when the model range
/// overshoots the data range by more than the configured factor. The
/// model is interpolated linearly onto the data x positions.
double loss(const std::vector<ObservableCurve>& model_curves,
            const std::vector<ObservableCurve>& data_curves, const FitConfig& cfg,
            std::map<ObservableKind, double>* per_kind = nullptr);

/// Random search -> differential evolution -> annealing with periodic
/// pattern-search descent. Fully reproducible for a given seed; invalid
/// parameter regions evaluate to a large finite loss.
FitResult fit(const std::vector<ObservableCurve>& data, const FitConfig& cfg);

/// Large sentinel loss for parameter regions the Fock layer rejects.
inline constexpr double kInvalidLoss = 1e6;

} // namespace qstat::fit

#endif

#include "qstat/fit.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <thread>

#include "qstat/witness.hpp"

namespace qstat::fit {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double uniform01(std::mt19937_64& rng) {
    // 53 mantissa bits straight from the generator; identical on every platform.
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double reflect_into(double v, double lo, double hi) {
    if (!(hi > lo)) return lo;
    const double width = hi - lo;
    double t = std::fmod(v - lo, 2.0 * width);
    if (t < 0) t += 2.0 * width;
    return t <= width ? lo + t : hi - (t - width);
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("QSTAT_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Evaluate f(i) for i in [0, n) on `threads` workers; results are
/// written by index so the outcome is identical to a serial loop.
template <typename F>
std::vector<double> parallel_map(std::int64_t n, int threads, F&& f) {
    std::vector<double> out(static_cast<size_t>(n));
    if (threads <= 1 || n < 2) {
        for (std::int64_t i = 0; i < n; ++i) out[static_cast<size_t>(i)] = f(i);
        return out;
    }
    std::atomic<std::int64_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::int64_t i = next.fetch_add(1);
            if (i >= n) return;
            out[static_cast<size_t>(i)] = f(i);
        }
    };
    std::vector<std::thread> pool;
    const int n_workers = static_cast<int>(std::min<std::int64_t>(threads, n));
    pool.reserve(static_cast<size_t>(n_workers));
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return out;
}

struct LinearInterpolant {
    std::vector<double> x, y;  // x sorted strictly increasing

    bool valid() const { return x.size() >= 2; }
    double operator()(double xi) const {
        const auto it = std::upper_bound(x.begin(), x.end(), xi);
        size_t hi = static_cast<size_t>(it - x.begin());
        if (hi == 0) hi = 1;
        if (hi == x.size()) hi = x.size() - 1;
        const size_t lo = hi - 1;
        const double t = (xi - x[lo]) / (x[hi] - x[lo]);
        return y[lo] + t * (y[hi] - y[lo]);
    }
};

/// Finite, x-sorted view of a model curve (duplicate x collapse keeps
/// the first sample).
LinearInterpolant make_interpolant(const ObservableCurve& c) {
    std::vector<size_t> idx;
    for (size_t i = 0; i < c.x.size(); ++i)
        if (std::isfinite(c.x[i]) && std::isfinite(c.y[i])) idx.push_back(i);
    std::stable_sort(idx.begin(), idx.end(),
                     [&c](size_t a, size_t b) { return c.x[a] < c.x[b]; });
    LinearInterpolant out;
    for (size_t i : idx) {
        if (!out.x.empty() && !(c.x[i] > out.x.back())) continue;
        out.x.push_back(c.x[i]);
        out.y.push_back(c.y[i]);
    }
    return out;
}

} // namespace

std::string to_string(ObservableKind kind) {
    switch (kind) {
        case ObservableKind::heralded_g2: return "heralded_g2";
        case ObservableKind::nc_witness_signal: return "nc_witness_signal";
        case ObservableKind::nc_witness_herald: return "nc_witness_herald";
        case ObservableKind::nc_witness_cross: return "nc_witness_cross";
        case ObservableKind::qng_depth: return "qng_depth";
    }
    throw Error("unknown observable kind");
}

ObservableKind kind_from_string(const std::string& name) {
    for (ObservableKind k : kAllKinds)
        if (to_string(k) == name) return k;
    throw SchemaError("unknown observable kind '" + name + "'");
}

void ObservableCurve::validate() const {
    if (x.size() != y.size()) throw Error("ObservableCurve: x and y lengths differ");
    if (!sigma.empty() && sigma.size() != x.size())
        throw Error("ObservableCurve: sigma length differs");
    for (double s : sigma)
        if (!(s > 0)) throw Error("ObservableCurve: sigma values must be positive");
}

const std::vector<std::string>& parameter_names(ParamMode mode) {
    static const std::vector<std::string> fixed = {
        "intensity_factor",
        "thermal_scale_signal", "thermal_exponent_signal",
        "thermal_scale_herald", "thermal_exponent_herald",
        "squeezing_scale_signal", "squeezing_exponent_signal",
        "squeezing_scale_herald", "squeezing_exponent_herald",
        "displacement_scale_signal", "displacement_exponent_signal",
        "displacement_scale_herald", "displacement_exponent_herald",
        "bs1_theta", "bs2_theta", "bs2_phi",
    };
    static const std::vector<std::string> with_phase = [] {
        std::vector<std::string> v = fixed;
        v.push_back("squeezing_phase");
        return v;
    }();
    return mode == ParamMode::fixed_phases ? fixed : with_phase;
}

std::vector<double> encode_params(const model::ModelParams& p, ParamMode mode) {
    std::vector<double> v = {
        p.intensity_factor,
        p.thermal[0].scale, p.thermal[0].exponent,
        p.thermal[1].scale, p.thermal[1].exponent,
        p.squeezing[0].scale, p.squeezing[0].exponent,
        p.squeezing[1].scale, p.squeezing[1].exponent,
        p.displacement[0].scale, p.displacement[0].exponent,
        p.displacement[1].scale, p.displacement[1].exponent,
        p.bs1_theta, p.bs2_theta, p.bs2_phi,
    };
    if (mode == ParamMode::free_squeezing_phase) v.push_back(p.squeezing_phase[0]);
    return v;
}

model::ModelParams decode_params(const std::vector<double>& v, ParamMode mode,
                                 bool normalize_by_i0) {
    if (v.size() != parameter_names(mode).size())
        throw Error("decode_params: wrong parameter vector length");
    model::ModelParams p;
    p.intensity_factor = v[0];
    p.thermal[0] = {v[1], v[2]};
    p.thermal[1] = {v[3], v[4]};
    p.squeezing[0] = {v[5], v[6]};
    p.squeezing[1] = {v[7], v[8]};
    p.displacement[0] = {v[9], v[10]};
    p.displacement[1] = {v[11], v[12]};
    p.bs1_theta = v[13];
    p.bs2_theta = v[14];
    p.bs2_phi = v[15];
    p.bs1_phi = 0.0;
    const double phase = mode == ParamMode::free_squeezing_phase ? v[16] : model::kPi;
    p.squeezing_phase = {phase, phase};
    p.normalize_by_i0 = normalize_by_i0;
    return p;
}

std::map<std::string, std::pair<double, double>> FitConfig::effective_bounds() const {
    static const std::map<std::string, std::pair<double, double>> defaults = {
        {"intensity_factor", {1.0, 500.0}},
        {"thermal_scale_signal", {0.0, 0.02}},
        {"thermal_exponent_signal", {0.0, 2.0}},
        {"thermal_scale_herald", {0.0, 0.02}},
        {"thermal_exponent_herald", {0.0, 2.0}},
        {"squeezing_scale_signal", {0.0, 0.8}},
        {"squeezing_exponent_signal", {0.5, 2.5}},
        {"squeezing_scale_herald", {0.0, 0.8}},
        {"squeezing_exponent_herald", {0.5, 2.5}},
        {"displacement_scale_signal", {0.0, 1.2}},
        {"displacement_exponent_signal", {0.5, 3.0}},
        {"displacement_scale_herald", {0.0, 1.2}},
        {"displacement_exponent_herald", {0.5, 3.0}},
        {"bs1_theta", {0.0, model::kPi / 2}},
        {"bs2_theta", {0.0, model::kPi / 2}},
        {"bs2_phi", {-model::kPi, model::kPi}},
        {"squeezing_phase", {0.0, 2 * model::kPi}},
    };
    std::map<std::string, std::pair<double, double>> out;
    for (const std::string& name : parameter_names(mode)) {
        auto it = bounds.find(name);
        out[name] = it != bounds.end() ? it->second : defaults.at(name);
    }
    for (const auto& [name, b] : bounds)
        if (!out.count(name)) throw Error("FitConfig: bound for unknown parameter '" + name + "'");
    return out;
}

void FitConfig::validate() const {
    for (const auto& [name, b] : effective_bounds())
        if (!std::isfinite(b.first) || !std::isfinite(b.second) || b.first > b.second)
            throw Error("FitConfig: bounds for '" + name + "' must be finite and ordered");
    for (const auto& [kind, w] : weights)
        if (!(w >= 0)) throw Error("FitConfig: weights must be >= 0");
    if (endpoint_weight_factor < 1.0)
        throw Error("FitConfig: endpoint_weight_factor must be >= 1");
    if (range_penalty_factor <= 0) throw Error("FitConfig: range_penalty_factor must be > 0");
    if (random_draws < 1 || keep_top < 1 || de_generations < 0 || annealing_iterations < 0)
        throw Error("FitConfig: stage budgets must be positive");
    grid.validate();
    setup.validate();
    fock.validate();
}

ObservableCurve ForwardResult::curve(ObservableKind kind) const {
    ObservableCurve c;
    c.kind = kind;
    c.x = kind == ObservableKind::nc_witness_herald ? mean_herald : mean_signal;
    c.y = values[static_cast<size_t>(kind)];
    return c;
}

ForwardResult forward(const model::ModelParams& p, const model::IntensityGrid& grid,
                      const detect::DetectorSetup& setup, const ForwardOptions& opts) {
    grid.validate();
    setup.validate();
    const model::StateBuilder builder(p, opts.fock);
    ForwardResult out;
    const size_t n = grid.values.size();
    out.intensity = grid.values;
    out.mean_signal.assign(n, kNan);
    out.mean_herald.assign(n, kNan);
    for (auto& v : out.values) v.assign(n, kNan);
    if (opts.with_entanglement) out.log_negativity.assign(n, kNan);
    if (opts.with_delta_w) out.delta_w.assign(n, kNan);

    for (size_t i = 0; i < n; ++i) {
        std::optional<fock::DensityMatrix> rho;
        try {
            rho.emplace(builder.state(grid.values[i]));
        } catch (const Error&) {
            continue;  // out-of-range parameters: leave the point missing
        }
        out.mean_signal[i] = fock::mean_photons(*rho, 0);
        out.mean_herald[i] = fock::mean_photons(*rho, 1);
        const detect::ClickRecord rec = detect::simulate_record(*rho, setup);

        auto& val = out.values;
        try {
            if (rec.rs_a + rec.rs_b > 0)  // no events at all: leave missing
                val[size_t(ObservableKind::nc_witness_signal)][i] =
                    witness::nc_witness(witness::rates_to_witness_input(rec));
        } catch (const Error&) {
        }
        try {
            const detect::PhotonProbabilities probs = detect::probabilities_from_record(rec);
            val[size_t(ObservableKind::heralded_g2)][i] =
                opts.g2_use_rate_form
                    ? detect::heralded_g2_from_record(rec)
                    : detect::heralded_g2_from_probs(probs, detect::G2Form::probability);
            val[size_t(ObservableKind::qng_depth)][i] = witness::qng_depth(probs).depth_db;
            if (opts.with_delta_w)
                out.delta_w[i] = witness::qng_witness(probs).delta_w;
        } catch (const Error&) {
        }
        try {
            const detect::PairClicks herald_pair = detect::hbt_clicks(
                fock::number_distribution(*rho, 1), setup.eta_h, setup.eta_h, setup.t_split);
            if (herald_pair.p_a + herald_pair.p_b > 0)
                val[size_t(ObservableKind::nc_witness_herald)][i] = witness::nc_witness(
                    {herald_pair.single_only(), herald_pair.p_ab});
        } catch (const Error&) {
        }
        try {
            const detect::PairClicks cross = detect::cross_clicks(
                fock::joint_number_distribution(*rho), setup.t_split * setup.eta_a, setup.eta_h);
            if (cross.p_a + cross.p_b > 0)
                val[size_t(ObservableKind::nc_witness_cross)][i] =
                    witness::nc_witness({cross.single_only(), cross.p_ab});
        } catch (const Error&) {
        }
        if (opts.with_entanglement) out.log_negativity[i] = witness::log_negativity(*rho);
    }
    return out;
}

double loss(const std::vector<ObservableCurve>& model_curves,
            const std::vector<ObservableCurve>& data_curves, const FitConfig& cfg,
            std::map<ObservableKind, double>* per_kind) {
    std::map<ObservableKind, double> contributions;
    for (const ObservableCurve& dc : data_curves) {
        dc.validate();
        if (contributions.count(dc.kind))
            throw Error("loss: duplicate data curve for kind " + to_string(dc.kind));
        const auto mc = std::find_if(model_curves.begin(), model_curves.end(),
                                     [&dc](const ObservableCurve& c) { return c.kind == dc.kind; });
        if (mc == model_curves.end())
            throw Error("loss: no model curve for kind " + to_string(dc.kind));
        mc->validate();

        const LinearInterpolant interp = make_interpolant(*mc);
        if (!interp.valid() || dc.x.empty()) {
            contributions[dc.kind] = kInvalidLoss;
            continue;
        }
        double y_lo = *std::min_element(dc.y.begin(), dc.y.end());
        double y_hi = *std::max_element(dc.y.begin(), dc.y.end());
        double range = y_hi - y_lo;
        if (!(range > 1e-12)) range = 1.0;

        const size_t n = dc.x.size();
        double wsum = 0.0, acc = 0.0;
        double m_lo = std::numeric_limits<double>::infinity(), m_hi = -m_lo;
        bool bad = false;
        for (size_t i = 0; i < n; ++i) {
            const double m = interp(dc.x[i]);
            if (!std::isfinite(m)) {
                bad = true;
                break;
            }
            m_lo = std::min(m_lo, m);
            m_hi = std::max(m_hi, m);
            const double u = (i == 0 || i == n - 1) ? cfg.endpoint_weight_factor : 1.0;
            const double e = (m - dc.y[i]) / range;
            acc += u * e * e;
            wsum += u;
        }
        if (bad) {
            contributions[dc.kind] = kInvalidLoss;
            continue;
        }
        const double nrmse = std::sqrt(acc / wsum);
        const double excess = std::max(0.0, (m_hi - m_lo) / range - cfg.range_penalty_factor);
        contributions[dc.kind] = nrmse + excess * excess;
    }
    double total = 0.0;
    for (const auto& [kind, value] : contributions) {
        const auto w = cfg.weights.find(kind);
        total += (w != cfg.weights.end() ? w->second : 1.0) * value;
    }
    if (per_kind) *per_kind = std::move(contributions);
    return total;
}

namespace {

struct Objective {
    const std::vector<ObservableCurve>& data;
    const FitConfig& cfg;
    ParamMode mode;

    double operator()(const std::vector<double>& v) const {
        try {
            const model::ModelParams p = decode_params(v, mode, cfg.normalize_by_i0);
            ForwardOptions opts;
            opts.fock = cfg.fock;
            opts.g2_use_rate_form = cfg.g2_use_rate_form;
            const ForwardResult fwd = forward(p, cfg.grid, cfg.setup, opts);
            std::vector<ObservableCurve> model_curves;
            for (const ObservableCurve& dc : data) model_curves.push_back(fwd.curve(dc.kind));
            return loss(model_curves, data, cfg);
        } catch (const Error&) {
            return kInvalidLoss;
        }
    }
};

struct Candidate {
    std::vector<double> x;
    double loss = kInvalidLoss;
};

/// Golden-section minimization of f along x + t d inside the box;
/// returns the accepted step and updates (x, fx). One-sided brackets
/// keep every probe feasible.
template <typename F>
std::int64_t line_minimize(F&& f, std::vector<double>& x, double& fx,
                           const std::vector<double>& d, const std::vector<double>& lo,
                           const std::vector<double>& hi) {
    double t_lo = -std::numeric_limits<double>::infinity();
    double t_hi = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < x.size(); ++j) {
        if (d[j] == 0.0) continue;
        const double a = (lo[j] - x[j]) / d[j];
        const double b = (hi[j] - x[j]) / d[j];
        t_lo = std::max(t_lo, std::min(a, b));
        t_hi = std::min(t_hi, std::max(a, b));
    }
    if (!(t_hi > t_lo) || !std::isfinite(t_hi - t_lo)) return 0;

    auto probe = [&](double t) {
        std::vector<double> p(x.size());
        for (size_t j = 0; j < x.size(); ++j) p[j] = std::clamp(x[j] + t * d[j], lo[j], hi[j]);
        return f(p);
    };
    std::int64_t evals = 0;

    // Coarse scan first: the loss along a box-wide chord is not
    // unimodal (sentinel plateaus, multiple valleys), so locate the
    // best cell before the golden-section refinement.
    const int cells = 16;
    double best_t = 0.0, best_f = fx;
    for (int k = 0; k <= cells; ++k) {
        const double t = t_lo + (t_hi - t_lo) * k / cells;
        const double ft = probe(t);
        ++evals;
        if (ft < best_f) {
            best_f = ft;
            best_t = t;
        }
    }
    const double cell = (t_hi - t_lo) / cells;
    double a = std::max(t_lo, best_t - cell);
    double b = std::min(t_hi, best_t + cell);

    const double inv_phi = 0.6180339887498949;
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double f1 = probe(x1), f2 = probe(x2);
    evals += 2;
    for (int it = 0; it < 40 && b - a > 1e-12 * (t_hi - t_lo); ++it) {
        if (f1 > f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = probe(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = probe(x1);
        }
        ++evals;
    }
    double t_best = f1 < f2 ? x1 : x2;
    double f_best = std::min(f1, f2);
    if (best_f < f_best) {
        t_best = best_t;
        f_best = best_f;
    }
    if (f_best < fx) {
        for (size_t j = 0; j < x.size(); ++j)
            x[j] = std::clamp(x[j] + t_best * d[j], lo[j], hi[j]);
        fx = f_best;
    }
    return evals;
}

/// Powell direction-set descent; deterministic, derivative-free, suits
/// the smooth tightly-bounded refinement the annealing stage ends with.
template <typename F>
std::int64_t powell(F&& f, Candidate& best, const std::vector<double>& lo,
                    const std::vector<double>& hi, std::int64_t max_evals) {
    const size_t dim = best.x.size();
    std::vector<std::vector<double>> dirs;
    for (size_t j = 0; j < dim; ++j) {
        if (!(hi[j] > lo[j])) continue;
        std::vector<double> d(dim, 0.0);
        d[j] = hi[j] - lo[j];
        dirs.push_back(std::move(d));
    }
    if (dirs.empty()) return 0;

    std::vector<double> x = best.x;
    double fx = best.loss;
    std::int64_t evals = 0;
    while (evals < max_evals) {
        const double f_start = fx;
        const std::vector<double> x_start = x;
        size_t drop = 0;
        double biggest = -1.0;
        for (size_t i = 0; i < dirs.size() && evals < max_evals; ++i) {
            const double before = fx;
            evals += line_minimize(f, x, fx, dirs[i], lo, hi);
            if (before - fx > biggest) {
                biggest = before - fx;
                drop = i;
            }
        }
        std::vector<double> extrapolated(dim);
        double span = 0.0;
        for (size_t j = 0; j < dim; ++j) {
            extrapolated[j] = x[j] - x_start[j];
            span += std::abs(extrapolated[j]) / std::max(1e-300, hi[j] - lo[j]);
        }
        if (span > 1e-14 && evals < max_evals) {
            evals += line_minimize(f, x, fx, extrapolated, lo, hi);
            dirs[drop] = std::move(extrapolated);
        }
        if (f_start - fx < 1e-15 * std::max(1.0, std::abs(f_start))) break;
    }
    if (fx < best.loss) best = Candidate{std::move(x), fx};
    return evals;
}

/// Greedy coordinate pattern search with shrinking steps; deterministic.
template <typename F>
std::int64_t pattern_search(F&& f, Candidate& best, const std::vector<double>& lo,
                            const std::vector<double>& hi) {
    const size_t dim = best.x.size();
    std::vector<double> step(dim);
    for (size_t j = 0; j < dim; ++j) step[j] = 0.02 * (hi[j] - lo[j]);
    std::int64_t evals = 0;
    for (int shrink = 0; shrink < 4; ++shrink) {
        bool improved = true;
        for (int sweep = 0; sweep < 10 && improved; ++sweep) {
            improved = false;
            for (size_t j = 0; j < dim; ++j) {
                if (step[j] == 0.0) continue;
                for (double dir : {1.0, -1.0}) {
                    std::vector<double> trial = best.x;
                    trial[j] = std::clamp(trial[j] + dir * step[j], lo[j], hi[j]);
                    if (trial[j] == best.x[j]) continue;
                    const double l = f(trial);
                    ++evals;
                    if (l < best.loss) {
                        best.x = std::move(trial);
                        best.loss = l;
                        improved = true;
                        break;
                    }
                }
            }
        }
        for (double& s : step) s *= 0.5;
    }
    return evals;
}

} // namespace

FitResult fit(const std::vector<ObservableCurve>& data, const FitConfig& cfg) {
    cfg.validate();
    if (!cfg.seed) throw Error("fit: a seed is mandatory");
    {
        std::vector<ObservableKind> kinds;
        for (const auto& c : data) kinds.push_back(c.kind);
        std::sort(kinds.begin(), kinds.end());
        if (std::unique(kinds.begin(), kinds.end()) - kinds.begin() < 2)
            throw Error("fit: at least two observable kinds are required");
    }

    const auto& names = parameter_names(cfg.mode);
    const size_t dim = names.size();
    const auto bounds_map = cfg.effective_bounds();
    std::vector<double> lo(dim), hi(dim);
    for (size_t j = 0; j < dim; ++j) {
        lo[j] = bounds_map.at(names[j]).first;
        hi[j] = bounds_map.at(names[j]).second;
    }

    const Objective objective{data, cfg, cfg.mode};
    const int threads = resolve_threads(cfg.threads);
    std::vector<Candidate> batch_storage;
    auto evaluate_batch = [&](std::vector<Candidate>& batch) -> std::int64_t {
        const auto losses = parallel_map(
            static_cast<std::int64_t>(batch.size()), threads,
            [&](std::int64_t i) { return objective(batch[static_cast<size_t>(i)].x); });
        for (size_t i = 0; i < batch.size(); ++i) batch[i].loss = losses[i];
        return static_cast<std::int64_t>(batch.size());
    };

    FitResult result;

    // Stage 1: uniform random search.
    std::mt19937_64 rng(*cfg.seed);
    std::vector<Candidate> pool(static_cast<size_t>(cfg.random_draws));
    for (auto& c : pool) {
        c.x.resize(dim);
        for (size_t j = 0; j < dim; ++j) c.x[j] = lo[j] + (hi[j] - lo[j]) * uniform01(rng);
    }
    std::int64_t evals = evaluate_batch(pool);
    std::stable_sort(pool.begin(), pool.end(),
                     [](const Candidate& a, const Candidate& b) { return a.loss < b.loss; });
    result.stage_trace.push_back({"random_search", evals, pool.front().loss});

    // Stage 2: differential evolution seeded from the best draws.
    const int pop_size = cfg.de_population > 0 ? cfg.de_population
                                               : 15 * static_cast<int>(dim);
    std::vector<Candidate> pop;
    for (int i = 0; i < std::min<int>(cfg.keep_top, pop_size) &&
                    i < static_cast<int>(pool.size());
         ++i)
        pop.push_back(pool[static_cast<size_t>(i)]);
    std::vector<Candidate> fresh;
    while (static_cast<int>(pop.size() + fresh.size()) < pop_size) {
        Candidate c;
        c.x.resize(dim);
        for (size_t j = 0; j < dim; ++j) c.x[j] = lo[j] + (hi[j] - lo[j]) * uniform01(rng);
        fresh.push_back(std::move(c));
    }
    evals = evaluate_batch(fresh);
    pop.insert(pop.end(), std::make_move_iterator(fresh.begin()),
               std::make_move_iterator(fresh.end()));

    for (int gen = 0; gen < cfg.de_generations; ++gen) {
        const double f_weight = 0.5 + 0.5 * uniform01(rng);  // dithered mutation weight
        std::vector<Candidate> trials(pop.size());
        for (size_t i = 0; i < pop.size(); ++i) {
            size_t r1, r2, r3;
            do r1 = static_cast<size_t>(uniform01(rng) * pop.size()); while (r1 == i);
            do r2 = static_cast<size_t>(uniform01(rng) * pop.size());
            while (r2 == i || r2 == r1);
            do r3 = static_cast<size_t>(uniform01(rng) * pop.size());
            while (r3 == i || r3 == r1 || r3 == r2);
            const size_t j_forced = static_cast<size_t>(uniform01(rng) * dim);
            std::vector<double> trial = pop[i].x;
            for (size_t j = 0; j < dim; ++j) {
                if (j == j_forced || uniform01(rng) < cfg.de_crossover) {
                    const double m =
                        pop[r1].x[j] + f_weight * (pop[r2].x[j] - pop[r3].x[j]);
                    trial[j] = std::clamp(m, lo[j], hi[j]);
                }
            }
            trials[i].x = std::move(trial);
        }
        evals += evaluate_batch(trials);
        for (size_t i = 0; i < pop.size(); ++i)
            if (trials[i].loss <= pop[i].loss) pop[i] = std::move(trials[i]);
    }
    Candidate best = *std::min_element(
        pop.begin(), pop.end(),
        [](const Candidate& a, const Candidate& b) { return a.loss < b.loss; });
    result.stage_trace.push_back({"differential_evolution", evals, best.loss});
    const double loss_after_de = best.loss;

    // Stage 3: annealing with periodic deterministic local descent.
    evals = 0;
    Candidate current = best;
    const double t0 = std::max(1e-2, 0.5 * best.loss);
    const double t_end = 1e-8;
    const int n_iter = cfg.annealing_iterations;
    for (int k = 0; k < n_iter; ++k) {
        const double temp = t0 * std::pow(t_end / t0, double(k) / std::max(1, n_iter - 1));
        std::vector<double> proposal = current.x;
        const size_t j_forced = static_cast<size_t>(uniform01(rng) * dim);
        for (size_t j = 0; j < dim; ++j) {
            if (j != j_forced && uniform01(rng) >= 0.3) continue;
            const double cauchy = std::tan(model::kPi * (uniform01(rng) - 0.5));
            const double scale = 0.1 * (hi[j] - lo[j]) * std::max(temp / t0, 1e-4);
            proposal[j] = reflect_into(proposal[j] + cauchy * scale, lo[j], hi[j]);
        }
        const double l = objective(proposal);
        ++evals;
        const double delta = l - current.loss;
        if (delta <= 0 || uniform01(rng) < std::exp(-delta / std::max(temp, 1e-300))) {
            current.x = std::move(proposal);
            current.loss = l;
        }
        if (current.loss < best.loss) best = current;
        if (cfg.local_search_every > 0 && (k + 1) % cfg.local_search_every == 0) {
            evals += pattern_search(objective, best, lo, hi);
            current = best;  // restart the walk from the incumbent
        }
    }
    const std::int64_t polish_budget =
        std::clamp<std::int64_t>(cfg.annealing_iterations, 2000, 6000);
    evals += powell(objective, best, lo, hi, polish_budget);
    result.stage_trace.push_back({"dual_annealing", evals, best.loss});
    result.no_improvement_warning = loss_after_de - best.loss < 1e-6;

    result.params = decode_params(best.x, cfg.mode, cfg.normalize_by_i0);
    {
        ForwardOptions opts;
        opts.fock = cfg.fock;
        opts.g2_use_rate_form = cfg.g2_use_rate_form;
        const ForwardResult fwd = forward(result.params, cfg.grid, cfg.setup, opts);
        std::vector<ObservableCurve> model_curves;
        for (const ObservableCurve& dc : data) model_curves.push_back(fwd.curve(dc.kind));
        result.loss = loss(model_curves, data, cfg, &result.per_observable_loss);
    }
    return result;
}

} // namespace qstat::fit

#include <doctest.h>

#include <cmath>

#include "qstat/fit.hpp"

using namespace qstat;

namespace {

// Truth parameters in the Table-S1 ballpark, small enough for a compact
// Fock box.
model::ModelParams truth_params() {
    model::ModelParams p;
    p.intensity_factor = 230.0;
    p.thermal = {{{0.002, 0.6}, {0.001, 0.5}}};
    p.squeezing = {{{0.08, 1.2}, {0.5, 1.7}}};
    p.displacement = {{{0.8, 2.2}, {0.45, 1.6}}};
    p.bs1_theta = 0.5;
    p.bs2_theta = 1.5;
    p.bs2_phi = -1.45;
    return p;
}

fit::FitConfig small_config() {
    fit::FitConfig cfg;
    cfg.fock = fock::FockConfig{10, 26, 1e-6};
    cfg.grid = model::IntensityGrid::linspace(0.2, 0.55, 6);
    cfg.seed = 7;
    cfg.random_draws = 40;
    cfg.keep_top = 6;
    cfg.de_population = 12;
    cfg.de_generations = 6;
    cfg.annealing_iterations = 60;
    cfg.local_search_every = 30;
    return cfg;
}

std::vector<fit::ObservableCurve> synthetic_data(const model::ModelParams& p,
                                                 const fit::FitConfig& cfg) {
    fit::ForwardOptions opts;
    opts.fock = cfg.fock;
    const fit::ForwardResult fwd = fit::forward(p, cfg.grid, cfg.setup, opts);
    std::vector<fit::ObservableCurve> data;
    for (fit::ObservableKind kind : fit::kAllKinds) data.push_back(fwd.curve(kind));
    return data;
}

} // namespace

TEST_SUITE_BEGIN("fit");

TEST_CASE("observable kinds round-trip through their names") {
    for (fit::ObservableKind kind : fit::kAllKinds)
        CHECK(fit::kind_from_string(fit::to_string(kind)) == kind);
    CHECK_THROWS_AS(fit::kind_from_string("nonsense"), SchemaError);
}

TEST_CASE("parameter vector: 16 fixed-phase entries, 17 with the shared phase") {
    CHECK(fit::parameter_names(fit::ParamMode::fixed_phases).size() == 16);
    CHECK(fit::parameter_names(fit::ParamMode::free_squeezing_phase).size() == 17);

    const model::ModelParams p = truth_params();
    for (auto mode : {fit::ParamMode::fixed_phases, fit::ParamMode::free_squeezing_phase}) {
        const auto v = fit::encode_params(p, mode);
        const model::ModelParams q = fit::decode_params(v, mode, false);
        CHECK(q.bs2_phi == p.bs2_phi);
        CHECK(q.squeezing[1].scale == p.squeezing[1].scale);
        CHECK(q.bs1_phi == 0.0);
    }
    const auto v16 = fit::encode_params(p, fit::ParamMode::fixed_phases);
    const model::ModelParams q = fit::decode_params(v16, fit::ParamMode::fixed_phases, false);
    CHECK(q.squeezing_phase[0] == model::kPi);
    CHECK(q.squeezing_phase[1] == model::kPi);
}

TEST_CASE("loss: zero on itself, offset rule, weight linearity") {
    fit::ObservableCurve c;
    c.kind = fit::ObservableKind::heralded_g2;
    c.x = {0.1, 0.2, 0.3, 0.4};
    c.y = {0.5, 0.6, 0.8, 0.9};
    fit::ObservableCurve d = c;
    d.kind = fit::ObservableKind::qng_depth;
    d.y = {1.0, 2.0, 3.0, 4.0};

    fit::FitConfig cfg;
    cfg.seed = 1;
    CHECK(fit::loss({c, d}, {c, d}, cfg) == doctest::Approx(0.0));

    // constant offset on one kind: that kind contributes offset/range
    fit::ObservableCurve shifted = c;
    for (double& y : shifted.y) y += 0.04;
    std::map<fit::ObservableKind, double> per_kind;
    const double l = fit::loss({shifted, d}, {c, d}, cfg, &per_kind);
    CHECK(per_kind.at(c.kind) == doctest::Approx(0.04 / 0.4).epsilon(1e-12));
    CHECK(per_kind.at(d.kind) == doctest::Approx(0.0));
    CHECK(l == doctest::Approx(0.1).epsilon(1e-12));

    cfg.weights[c.kind] = 2.0;
    CHECK(fit::loss({shifted, d}, {c, d}, cfg) == doctest::Approx(0.2).epsilon(1e-12));

    fit::ObservableCurve wrong = c;
    wrong.kind = fit::ObservableKind::nc_witness_cross;
    CHECK_THROWS_AS(fit::loss({wrong, d}, {c, d}, cfg), Error);
}

TEST_CASE("loss: range overshoot penalty is quadratic in the excess") {
    fit::ObservableCurve data;
    data.kind = fit::ObservableKind::heralded_g2;
    data.x = {0.0, 0.5, 1.0};
    data.y = {0.0, 0.5, 1.0};  // range 1
    fit::FitConfig cfg;
    cfg.seed = 1;
    cfg.endpoint_weight_factor = 1.0;  // isolate the penalty term

    fit::ObservableCurve wide = data;
    wide.y = {-1.0, 0.5, 2.0};  // range 3, excess 1 over factor 2
    std::map<fit::ObservableKind, double> per_kind;
    fit::loss({wide}, {data}, cfg, &per_kind);
    const double nrmse = std::sqrt((1.0 + 0.0 + 1.0) / 3.0);
    CHECK(per_kind.at(data.kind) == doctest::Approx(nrmse + 1.0).epsilon(1e-12));
}

TEST_CASE("forward: dark source reports missing points, not zeros") {
    const model::ModelParams dark;  // all scales zero
    fit::FitConfig cfg = small_config();
    fit::ForwardOptions opts;
    opts.fock = cfg.fock;
    const auto fwd = fit::forward(dark, cfg.grid, cfg.setup, opts);
    for (fit::ObservableKind kind : fit::kAllKinds)
        for (double v : fwd.values[static_cast<size_t>(kind)]) CHECK(std::isnan(v));
}

TEST_CASE("forward: truth parameters give finite curves on the grid") {
    const fit::FitConfig cfg = small_config();
    const auto data = synthetic_data(truth_params(), cfg);
    for (const auto& curve : data) {
        REQUIRE(curve.x.size() == cfg.grid.values.size());
        for (size_t i = 0; i < curve.x.size(); ++i) {
            CHECK(std::isfinite(curve.x[i]));
            CHECK(std::isfinite(curve.y[i]));
        }
    }
}

TEST_CASE("fit: bounds collapsed to a point return that point") {
    const model::ModelParams p = truth_params();
    fit::FitConfig cfg = small_config();
    cfg.random_draws = 3;
    cfg.de_population = 4;
    cfg.de_generations = 1;
    cfg.annealing_iterations = 5;
    cfg.local_search_every = 0;
    const auto v = fit::encode_params(p, cfg.mode);
    const auto& names = fit::parameter_names(cfg.mode);
    for (size_t j = 0; j < names.size(); ++j) cfg.bounds[names[j]] = {v[j], v[j]};

    const auto data = synthetic_data(p, cfg);
    const auto result = fit::fit(data, cfg);
    CHECK(fit::encode_params(result.params, cfg.mode) == v);
    CHECK(result.loss == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("fit: recovery with tight bounds and a reproducible seed") {
    const model::ModelParams p = truth_params();
    fit::FitConfig cfg = small_config();
    const auto v = fit::encode_params(p, cfg.mode);
    const auto& names = fit::parameter_names(cfg.mode);
    for (size_t j = 0; j < names.size(); ++j) {
        const double lo = v[j] - 0.015 * std::max(1.0, std::abs(v[j]));
        const double hi = v[j] + 0.015 * std::max(1.0, std::abs(v[j]));
        cfg.bounds[names[j]] = {lo, hi};
    }

    const auto data = synthetic_data(p, cfg);
    const auto result = fit::fit(data, cfg);
    CHECK(result.loss < 1e-3);

    // best loss never increases across stages
    for (size_t s = 1; s < result.stage_trace.size(); ++s)
        CHECK(result.stage_trace[s].best_loss <= result.stage_trace[s - 1].best_loss + 1e-15);

    // forward curves of the result match the synthetic data within 1%
    fit::ForwardOptions opts;
    opts.fock = cfg.fock;
    const auto fwd = fit::forward(result.params, cfg.grid, cfg.setup, opts);
    fit::FitConfig plain = cfg;
    plain.endpoint_weight_factor = 1.0;
    for (const auto& dc : data) {
        std::map<fit::ObservableKind, double> per_kind;
        fit::loss({fwd.curve(dc.kind)}, {dc}, plain, &per_kind);
        CHECK(per_kind.at(dc.kind) < 0.01);
    }

    // determinism: the same seed reproduces the result bit for bit
    const auto again = fit::fit(data, cfg);
    CHECK(fit::encode_params(again.params, cfg.mode) ==
          fit::encode_params(result.params, cfg.mode));
    CHECK(again.loss == result.loss);
}

TEST_CASE("fit: seed is mandatory and two kinds are required") {
    fit::FitConfig cfg = small_config();
    const auto data = synthetic_data(truth_params(), cfg);
    fit::FitConfig unseeded = cfg;
    unseeded.seed.reset();
    CHECK_THROWS_AS(fit::fit(data, unseeded), Error);
    CHECK_THROWS_AS(fit::fit({data[0]}, cfg), Error);
}

TEST_SUITE_END();

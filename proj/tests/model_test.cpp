#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qstat/model.hpp"
#include "qstat/witness.hpp"

using namespace qstat;

namespace {

const fock::FockConfig kCfg{};
const fock::FockConfig kSmall{12, 24, 1e-6};

model::ModelParams table_h12_11() {
    model::ModelParams p;
    p.intensity_factor = 231.65;
    p.thermal = {{{1.0e-5, 0.52}, {1.0e-5, 0.54}}};
    p.squeezing = {{{0.071, 1.18}, {0.571, 1.75}}};
    p.squeezing_phase = {3.132, 3.132};
    p.displacement = {{{0.864, 2.21}, {0.482, 1.64}}};
    p.bs1_theta = 0.509;
    p.bs1_phi = 0.021;
    p.bs2_theta = 1.558;
    p.bs2_phi = -1.48;
    return p;
}

} // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("scale_params: flat laws, table values, half-exponent displacement") {
    model::ModelParams p;
    p.thermal[0] = {1.0, 0.0};
    for (double i : {0.2, 1.0, 3.0})
        CHECK(model::scale_params(p, i).n_th[0] == doctest::Approx(1.0));

    model::ModelParams t;
    t.squeezing[1] = {0.571, 1.75};
    t.displacement[1] = {0.482, 1.64};
    const auto at_one = model::scale_params(t, 1.0);
    CHECK(at_one.r[1] == doctest::Approx(0.571));
    CHECK(at_one.alpha[1] == doctest::Approx(0.482));

    // the displacement exponent enters as I^{beta/2}
    model::ModelParams d;
    d.displacement[1] = {0.482, 1.64};
    const auto at_four = model::scale_params(d, 4.0, fock::FockConfig{25, 60, 1e-6});
    CHECK(at_four.alpha[1] == doctest::Approx(0.482 * std::pow(4.0, 0.82)).epsilon(1e-12));
}

TEST_CASE("scale_params: overflow errors at the fock preconditions") {
    model::ModelParams p;
    p.squeezing[0] = {1.0, 1.0};
    CHECK_THROWS_AS(model::scale_params(p, 2.0), OverflowError);  // r = 2 > 1.5

    model::ModelParams q;
    q.displacement[0] = {4.0, 0.0};  // |alpha|^2 = 16 > n_work/4
    CHECK_THROWS_AS(model::scale_params(q, 1.0), OverflowError);
}

TEST_CASE("scale_params: monotone in intensity for positive exponents") {
    const model::ModelParams p = table_h12_11();
    double prev_r = -1, prev_a = -1, prev_n = -1;
    for (double i : model::IntensityGrid::linspace(0.1, 1.0, 7).values) {
        const auto s = model::scale_params(p, i);
        CHECK(s.r[1] > prev_r);
        CHECK(s.alpha[0] > prev_a);
        CHECK(s.n_th[0] > prev_n);
        prev_r = s.r[1];
        prev_a = s.alpha[0];
        prev_n = s.n_th[0];
    }
}

TEST_CASE("build_state: zero scales give the two-mode vacuum") {
    const model::ModelParams p;  // all scales zero, all angles zero
    const auto rho = model::build_state(p, 0.7, kSmall);
    CHECK(rho.elements()(0, 0).real() == doctest::Approx(1.0).epsilon(1e-12));
    rho.require_valid();
}

TEST_CASE("build_state: thermal through BS1 splits evenly") {
    model::ModelParams p;
    p.thermal[0] = {0.3, 0.0};
    p.bs1_theta = model::kPi / 4;
    const auto rho = model::build_state(p, 1.0, kCfg);
    // oracle: partial trace and a geometric-distribution fit per mode
    for (int mode : {0, 1}) {
        const auto reduced = fock::partial_trace(rho, mode);
        const Eigen::VectorXd expected = oracles::thermal_distribution(0.15, kCfg.n_max + 1);
        for (int n = 0; n < 8; ++n)
            CHECK(reduced.elements()(n, n).real() ==
                  doctest::Approx(expected(n)).epsilon(1e-6));
        CHECK(fock::mean_photons(rho, mode) == doctest::Approx(0.15).epsilon(1e-6));
    }
}

TEST_CASE("build_state: operation order matters and matches the apply chain") {
    const model::ModelParams p = table_h12_11();
    const double i = 0.5;
    const auto rho = model::build_state(p, i, kCfg);
    rho.require_valid();

    // Same sequence through the public operator path.
    const auto sp = model::scale_params(p, i, kCfg);
    auto chain = fock::product_state(fock::thermal_state(sp.n_th[0], kCfg),
                                     fock::thermal_state(sp.n_th[1], kCfg));
    chain = fock::apply(fock::beamsplitter(p.bs1_theta, p.bs1_phi, kCfg), chain);
    chain = fock::apply(fock::squeezer(sp.r[0], p.squeezing_phase[0], 0, 2, kCfg), chain);
    chain = fock::apply(fock::squeezer(sp.r[1], p.squeezing_phase[1], 1, 2, kCfg), chain);
    chain = fock::apply(fock::beamsplitter(p.bs2_theta, p.bs2_phi, kCfg), chain);
    chain = fock::apply(fock::displacement(sp.alpha[0], 0, 2, kCfg), chain);
    chain = fock::apply(fock::displacement(sp.alpha[1], 1, 2, kCfg), chain);
    CHECK((rho.elements() - chain.elements()).cwiseAbs().maxCoeff() < 1e-8);

    // Swapping squeeze and BS2 produces a different state.
    auto swapped = fock::product_state(fock::thermal_state(sp.n_th[0], kCfg),
                                       fock::thermal_state(sp.n_th[1], kCfg));
    swapped = fock::apply(fock::beamsplitter(p.bs1_theta, p.bs1_phi, kCfg), swapped);
    swapped = fock::apply(fock::beamsplitter(p.bs2_theta, p.bs2_phi, kCfg), swapped);
    swapped = fock::apply(fock::squeezer(sp.r[0], p.squeezing_phase[0], 0, 2, kCfg), swapped);
    swapped = fock::apply(fock::squeezer(sp.r[1], p.squeezing_phase[1], 1, 2, kCfg), swapped);
    swapped = fock::apply(fock::displacement(sp.alpha[0], 0, 2, kCfg), swapped);
    swapped = fock::apply(fock::displacement(sp.alpha[1], 1, 2, kCfg), swapped);
    CHECK(std::abs(fock::mean_photons(swapped, 0) - fock::mean_photons(rho, 0)) > 1e-4);
}

TEST_CASE("build_state: means agree with the covariance oracle") {
    const model::ModelParams p = table_h12_11();
    for (double i : {0.2, 0.6, 1.0}) {
        const auto sp = model::scale_params(p, i, kCfg);
        const auto rho = model::build_state(p, i, kCfg);
        oracles::GaussianOracle g =
            oracles::GaussianOracle::thermal_pair(sp.n_th[0], sp.n_th[1]);
        g.beamsplit(p.bs1_theta, p.bs1_phi);
        g.squeeze(0, sp.r[0], p.squeezing_phase[0]);
        g.squeeze(1, sp.r[1], p.squeezing_phase[1]);
        g.beamsplit(p.bs2_theta, p.bs2_phi);
        g.displace(0, sp.alpha[0]);
        g.displace(1, sp.alpha[1]);
        CHECK(fock::mean_photons(rho, 0) == doctest::Approx(g.mean_photons(0)).epsilon(1e-6));
        CHECK(fock::mean_photons(rho, 1) == doctest::Approx(g.mean_photons(1)).epsilon(1e-6));
    }
}

TEST_CASE("build_state: Table column yields an entangled state at I = 1") {
    const auto rho = model::build_state(table_h12_11(), 1.0, kCfg);
    rho.require_valid();
    CHECK(witness::log_negativity(rho) > 0.0);
}

TEST_CASE("build_state: no mixing and equal parameters give a product state") {
    model::ModelParams p;
    p.thermal = {{{0.05, 1.0}, {0.05, 1.0}}};
    p.squeezing = {{{0.3, 1.0}, {0.3, 1.0}}};
    p.displacement = {{{0.4, 1.0}, {0.4, 1.0}}};
    const auto rho = model::build_state(p, 0.8, kCfg);
    CHECK(witness::log_negativity(rho) < 1e-6);
}

TEST_CASE("build_state passes the density-matrix invariants over the table range") {
    // 0.1x to 1.2x of the plotted intensity window [0.15, 0.55].
    const model::ModelParams p = table_h12_11();
    for (double i : {0.015, 0.3, 0.66}) {
        const auto rho = model::build_state(p, i, kCfg);
        rho.require_valid();
    }
}

TEST_CASE("mean_photons: vacuum and pure coherent displacement") {
    const model::ModelParams vac;
    CHECK(fock::mean_photons(model::build_state(vac, 1.0, kSmall), 0) ==
          doctest::Approx(0.0));

    model::ModelParams coh;
    coh.displacement[0] = {0.5, 0.0};  // alpha = 0.5 at any intensity
    const auto rho = model::build_state(coh, 1.0, kSmall);
    CHECK(fock::mean_photons(rho, 0) == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("IntensityGrid: validation and linspace") {
    const model::IntensityGrid with_zero{{0.0, 1.0}};
    const model::IntensityGrid not_increasing{{0.5, 0.5}};
    CHECK_THROWS_AS(with_zero.validate(), Error);
    CHECK_THROWS_AS(not_increasing.validate(), Error);
    const auto g = model::IntensityGrid::linspace(0.1, 1.0, 10);
    CHECK(g.values.size() == 10);
    CHECK(g.values.front() == doctest::Approx(0.1));
    CHECK(g.values.back() == doctest::Approx(1.0));
}

TEST_CASE("StateBuilder reuses beamsplitters consistently") {
    const model::ModelParams p = table_h12_11();
    const model::StateBuilder builder(p, kSmall);
    const auto a = builder.state(0.5);
    const auto b = model::build_state(p, 0.5, kSmall);
    CHECK((a.elements() - b.elements()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_SUITE_END();

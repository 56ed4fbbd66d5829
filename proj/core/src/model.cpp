#include "qstat/model.hpp"

#include <algorithm>
#include <cmath>

namespace qstat::model {

double PowerLaw::operator()(double i) const { return scale * std::pow(i, exponent); }

void ModelParams::validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    for (int k = 0; k < 2; ++k) {
        if (thermal[k].scale < 0 || squeezing[k].scale < 0 || displacement[k].scale < 0)
            throw Error("ModelParams: scale factors must be >= 0");
        if (!finite(thermal[k].exponent) || !finite(squeezing[k].exponent) ||
            !finite(displacement[k].exponent))
            throw Error("ModelParams: exponents must be finite");
        if (!finite(squeezing_phase[k])) throw Error("ModelParams: phases must be finite");
    }
    const double two_pi = 2.0 * kPi;
    for (double angle : {bs1_theta, bs1_phi, bs2_theta, bs2_phi})
        if (!(angle > -two_pi && angle < two_pi))
            throw Error("ModelParams: beamsplitter angles must lie in (-2pi, 2pi)");
    if (!(intensity_factor > 0) && normalize_by_i0)
        throw Error("ModelParams: intensity_factor must be positive when used as normalizer");
}

IntensityGrid IntensityGrid::linspace(double i_min, double i_max, int n) {
    if (n < 1) throw Error("IntensityGrid: need at least one point");
    IntensityGrid g;
    g.values.resize(static_cast<size_t>(n));
    if (n == 1) {
        g.values[0] = i_min;
    } else {
        for (int k = 0; k < n; ++k)
            g.values[static_cast<size_t>(k)] = i_min + (i_max - i_min) * k / (n - 1);
    }
    g.validate();
    return g;
}

void IntensityGrid::validate() const {
    if (values.empty()) throw Error("IntensityGrid: empty");
    double prev = 0.0;
    for (double v : values) {
        if (!(v > prev)) throw Error("IntensityGrid: values must be strictly increasing and > 0");
        prev = v;
    }
}

ScaledParams scale_params(const ModelParams& p, double i, const fock::FockConfig& cfg) {
    if (!(i > 0)) throw Error("scale_params: intensity must be positive");
    p.validate();
    cfg.validate();
    const double x = p.normalize_by_i0 ? i / p.intensity_factor : i;
    ScaledParams s;
    for (int k = 0; k < 2; ++k) {
        s.n_th[k] = p.thermal[k](x);
        s.r[k] = p.squeezing[k](x);
        s.alpha[k] = p.displacement[k].scale * std::pow(x, p.displacement[k].exponent / 2.0);
        if (!std::isfinite(s.n_th[k]) || !std::isfinite(s.r[k]) || !std::isfinite(s.alpha[k]))
            throw OverflowError("scale_params: non-finite scaled value");
        if (s.r[k] > 1.5)
            throw OverflowError("scale_params: squeezing r = " + std::to_string(s.r[k]) +
                                " above the supported 1.5");
        if (s.alpha[k] * s.alpha[k] > cfg.n_work / 4.0)
            throw OverflowError("scale_params: |alpha|^2 exceeds n_work/4");
    }
    return s;
}

StateBuilder::StateBuilder(const ModelParams& p, const fock::FockConfig& cfg)
    : params_(p), cfg_(cfg) {
    p.validate();
    cfg.validate();
    bs1_ = fock::detail::beamsplitter_matrix(p.bs1_theta, p.bs1_phi, cfg.n_work + 1);
    bs2_ = fock::detail::beamsplitter_matrix(p.bs2_theta, p.bs2_phi, cfg.n_work + 1);
}

fock::DensityMatrix StateBuilder::state(double i) const {
    namespace fd = fock::detail;
    const ScaledParams sp = scale_params(params_, i, cfg_);
    const int dw = cfg_.n_work + 1;
    const int db = cfg_.n_max + 1;

    double tail0 = 0.0, tail1 = 0.0;
    const Eigen::VectorXd q0 = fd::thermal_diagonal(sp.n_th[0], dw, &tail0);
    const Eigen::VectorXd q1 = fd::thermal_diagonal(sp.n_th[1], dw, &tail1);
    if (tail0 > cfg_.leak_tol || tail1 > cfg_.leak_tol)
        throw CutoffError("build_state: thermal tail mass exceeds leak_tol");

    const Eigen::MatrixXcd s0 = fd::squeeze_matrix(sp.r[0], params_.squeezing_phase[0], dw);
    const Eigen::MatrixXcd s1 = fd::squeeze_matrix(sp.r[1], params_.squeezing_phase[1], dw);
    const Eigen::MatrixXcd d0 = fd::displacement_matrix(sp.alpha[0], dw);
    const Eigen::MatrixXcd d1 = fd::displacement_matrix(sp.alpha[1], dw);
    for (const auto* u : {&s0, &s1, &d0, &d1})
        if (fd::edge_band_mass(*u, fd::guard_columns(cfg_)) > cfg_.leak_tol)
            throw LeakageError("build_state: n_work box too small for scaled parameters");

    // The input is diagonal, so the conjugation is a weighted sum of
    // transported basis columns. Keep thermal weights until the dropped
    // mass is negligible against the leak budget.
    struct Term {
        int j0, j1;
        double w;
    };
    std::vector<Term> terms;
    for (int j0 = 0; j0 < dw; ++j0)
        for (int j1 = 0; j1 < dw; ++j1)
            if (q0(j0) * q1(j1) > 1e-18) terms.push_back({j0, j1, q0(j0) * q1(j1)});
    std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) {
        if (a.w != b.w) return a.w > b.w;
        return a.j0 * 100000 + a.j1 < b.j0 * 100000 + b.j1;
    });
    const double drop_budget = cfg_.leak_tol / 100.0;
    double kept_mass = 0.0;
    size_t n_terms = 0;
    while (n_terms < terms.size() && kept_mass < 1.0 - drop_budget)
        kept_mass += terms[n_terms++].w;

    // Transport all kept columns together so each beamsplitter matrix is
    // traversed once.
    Eigen::MatrixXcd cols(dw * dw, n_terms);
    for (size_t t = 0; t < n_terms; ++t)
        cols.col(static_cast<Eigen::Index>(t)) = bs1_.col(terms[t].j0 * dw + terms[t].j1);
    for (size_t t = 0; t < n_terms; ++t)
        cols.col(static_cast<Eigen::Index>(t)) =
            fd::kron2_apply_vec(s0, s1, cols.col(static_cast<Eigen::Index>(t)));
    cols = bs2_ * cols;
    for (size_t t = 0; t < n_terms; ++t)
        cols.col(static_cast<Eigen::Index>(t)) =
            fd::kron2_apply_vec(d0, d1, cols.col(static_cast<Eigen::Index>(t)));

    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(db * db, db * db);
    Eigen::VectorXcd boxed(db * db);
    double trace = 0.0;
    for (size_t t = 0; t < n_terms; ++t) {
        for (int i0 = 0; i0 < db; ++i0)
            boxed.segment(i0 * db, db) =
                cols.col(static_cast<Eigen::Index>(t)).segment(i0 * dw, db);
        rho.noalias() += terms[t].w * (boxed * boxed.adjoint());
        trace += terms[t].w * boxed.squaredNorm();
    }
    if (1.0 - trace > cfg_.leak_tol)
        throw LeakageError("build_state: projection to n_max lost trace " +
                           std::to_string(1.0 - trace));
    return fock::DensityMatrix({cfg_.n_max, cfg_.n_max}, std::move(rho));
}

fock::DensityMatrix build_state(const ModelParams& p, double i, const fock::FockConfig& cfg) {
    return StateBuilder(p, cfg).state(i);
}

} // namespace qstat::model

#include "qstat/detect.hpp"

#include <cmath>
#include <random>

namespace qstat::detect {

namespace {

/// E[x^{n0} y^{n1}] under the joint photon-number distribution.
double moment(const Eigen::MatrixXd& joint, double x, double y) {
    const Eigen::Index d0 = joint.rows(), d1 = joint.cols();
    double acc = 0.0;
    double xp = 1.0;
    for (Eigen::Index n0 = 0; n0 < d0; ++n0) {
        double yp = 1.0;
        double row = 0.0;
        for (Eigen::Index n1 = 0; n1 < d1; ++n1) {
            row += joint(n0, n1) * yp;
            yp *= y;
        }
        acc += row * xp;
        xp *= x;
    }
    return acc;
}

double moment1(const Eigen::VectorXd& dist, double x) {
    double acc = 0.0, xp = 1.0;
    for (Eigen::Index n = 0; n < dist.size(); ++n) {
        acc += dist(n) * xp;
        xp *= x;
    }
    return acc;
}

void check_probability(double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0))
        throw Error(std::string(what) + " must lie in [0, 1]");
}

} // namespace

void DetectorSetup::validate() const {
    check_probability(eta_h, "DetectorSetup: eta_h");
    check_probability(eta_a, "DetectorSetup: eta_a");
    check_probability(eta_b, "DetectorSetup: eta_b");
    if (!(t_split > 0.0 && t_split < 1.0))
        throw Error("DetectorSetup: t_split must lie in (0, 1)");
    if (n_pulses < 1) throw Error("DetectorSetup: n_pulses must be >= 1");
}

void ClickRecord::validate() const {
    const double slack = 1e-9;
    for (double v : {r0, r1a, r1b, r2, rs_a, rs_b, rc})
        if (!(v >= 0)) throw Error("ClickRecord: counts must be non-negative");
    if (n_pulses < 1) throw Error("ClickRecord: n_pulses must be >= 1");
    if (r2 > std::min(r1a, r1b) + slack)
        throw Error("ClickRecord: r2 exceeds a twofold coincidence count");
    if (r1a + r1b - r2 > r0 + slack)
        throw Error("ClickRecord: heralded events exceed herald singles");
    if (rc > std::min(rs_a, rs_b) + slack)
        throw Error("ClickRecord: rc exceeds a singles count");
}

double ClickDistribution::herald() const {
    return p[1][0][0] + p[1][0][1] + p[1][1][0] + p[1][1][1];
}
double ClickDistribution::herald_and_a() const { return p[1][1][0] + p[1][1][1]; }
double ClickDistribution::herald_and_b() const { return p[1][0][1] + p[1][1][1]; }
double ClickDistribution::herald_and_ab() const { return p[1][1][1]; }
double ClickDistribution::a() const {
    return p[0][1][0] + p[0][1][1] + p[1][1][0] + p[1][1][1];
}
double ClickDistribution::b() const {
    return p[0][0][1] + p[0][1][1] + p[1][0][1] + p[1][1][1];
}
double ClickDistribution::ab() const { return p[0][1][1] + p[1][1][1]; }
double ClickDistribution::sum() const {
    double s = 0.0;
    for (int h = 0; h < 2; ++h)
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) s += p[h][a][b];
    return s;
}

ClickDistribution click_probabilities(const fock::DensityMatrix& rho,
                                      const DetectorSetup& setup) {
    setup.validate();
    if (rho.n_modes() != 2) throw Error("click_probabilities: two-mode state required");
    const Eigen::MatrixXd joint = fock::joint_number_distribution(rho);

    const double ga = 1.0 - setup.t_split * setup.eta_a;
    const double gb = 1.0 - (1.0 - setup.t_split) * setup.eta_b;
    const double gab = 1.0 - setup.t_split * setup.eta_a - (1.0 - setup.t_split) * setup.eta_b;
    const double gh = 1.0 - setup.eta_h;

    const double m00 = moment(joint, 1.0, 1.0);  // state trace
    if (!(m00 > 0)) throw Error("click_probabilities: state has no trace mass");
    const double mh = moment(joint, 1.0, gh) / m00;
    const double ma = moment(joint, ga, 1.0) / m00;
    const double mb = moment(joint, gb, 1.0) / m00;
    const double mab = moment(joint, gab, 1.0) / m00;
    const double mah = moment(joint, ga, gh) / m00;
    const double mbh = moment(joint, gb, gh) / m00;
    const double mabh = moment(joint, gab, gh) / m00;

    ClickDistribution out;
    out.p[0][0][0] = mabh;
    out.p[0][1][0] = mbh - mabh;
    out.p[0][0][1] = mah - mabh;
    out.p[0][1][1] = mh - mah - mbh + mabh;
    out.p[1][0][0] = mab - mabh;
    out.p[1][1][0] = mb - mbh - mab + mabh;
    out.p[1][0][1] = ma - mah - mab + mabh;
    out.p[1][1][1] = 1.0 - ma - mb - mh + mab + mah + mbh - mabh;
    return out;
}

ClickRecord simulate_record(const fock::DensityMatrix& rho, const DetectorSetup& setup) {
    const ClickDistribution d = click_probabilities(rho, setup);
    const double n = static_cast<double>(setup.n_pulses);
    ClickRecord rec;
    rec.r0 = n * d.herald();
    rec.r1a = n * d.herald_and_a();
    rec.r1b = n * d.herald_and_b();
    rec.r2 = n * d.herald_and_ab();
    rec.rs_a = n * d.a();
    rec.rs_b = n * d.b();
    rec.rc = n * d.ab();
    rec.n_pulses = setup.n_pulses;
    rec.validate();
    return rec;
}

ClickRecord sample_record(const fock::DensityMatrix& rho, const DetectorSetup& setup,
                          std::uint64_t seed) {
    const ClickDistribution d = click_probabilities(rho, setup);
    const double n = static_cast<double>(setup.n_pulses);
    std::mt19937_64 rng(seed);
    double counts[2][2][2];
    for (int h = 0; h < 2; ++h)
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                const double mean = n * std::max(0.0, d.p[h][a][b]);
                if (mean == 0.0) {
                    counts[h][a][b] = 0.0;
                    continue;
                }
                std::poisson_distribution<long long> poisson(mean);
                counts[h][a][b] = static_cast<double>(poisson(rng));
            }
    auto total = [&counts](auto pred) {
        double s = 0.0;
        for (int h = 0; h < 2; ++h)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    if (pred(h, a, b)) s += counts[h][a][b];
        return s;
    };
    ClickRecord rec;
    rec.r0 = total([](int h, int, int) { return h == 1; });
    rec.r1a = total([](int h, int a, int) { return h == 1 && a == 1; });
    rec.r1b = total([](int h, int, int b) { return h == 1 && b == 1; });
    rec.r2 = counts[1][1][1];
    rec.rs_a = total([](int, int a, int) { return a == 1; });
    rec.rs_b = total([](int, int, int b) { return b == 1; });
    rec.rc = total([](int, int a, int b) { return a == 1 && b == 1; });
    rec.n_pulses = setup.n_pulses;
    rec.validate();
    return rec;
}

PhotonProbabilities probabilities_from_record(const ClickRecord& rec) {
    rec.validate();
    if (!(rec.r0 > 0)) throw DegenerateRecordError("no herald events in record");
    if (!(rec.r1a > 0) || !(rec.r1b > 0))
        throw DegenerateRecordError("a splitter arm has no coincidences; T_est undefined");
    PhotonProbabilities p;
    p.t_est = rec.r1a / (rec.r1a + rec.r1b);
    const double t = p.t_est;
    const double correction = (t * t + (1.0 - t) * (1.0 - t)) / (2.0 * t * (1.0 - t));
    p.p0 = 1.0 - (rec.r1a + rec.r1b + rec.r2) / rec.r0;
    p.p1 = (rec.r1a + rec.r1b) / rec.r0 - correction * rec.r2 / rec.r0;
    p.p2plus = 1.0 - p.p0 - p.p1;
    if (!(p.p0 >= 0 && p.p0 <= 1) || !(p.p1 >= 0 && p.p1 <= 1) || !(p.p2plus >= 0))
        throw DegenerateRecordError("estimated probabilities fall outside [0, 1]");
    return p;
}

double heralded_g2_from_probs(const PhotonProbabilities& p, G2Form form) {
    if (form == G2Form::probability) {
        if (!(p.p1 > 0)) throw DivisionError("heralded g2: p1 is zero");
        return 2.0 * p.p2plus / (p.p1 * p.p1);
    }
    const double denom = 2.0 * (1.0 - p.p0) - p.p1;
    if (denom == 0.0) throw DivisionError("heralded g2: 2(1-p0) - p1 is zero");
    return 2.0 * (1.0 - p.p0 - p.p1) / (denom * denom);
}

double heralded_g2_from_record(const ClickRecord& rec) {
    if (!(rec.r1a > 0) || !(rec.r1b > 0))
        throw DivisionError("heralded g2 from record: zero twofold coincidences");
    return rec.r2 * rec.r0 / (rec.r1a * rec.r1b);
}

double unheralded_g2(const fock::DensityMatrix& rho, int mode_i, int mode_j) {
    if (mode_i == mode_j) {
        const Eigen::VectorXd p = fock::number_distribution(rho, mode_i);
        double mean = 0.0, second = 0.0;
        for (Eigen::Index n = 0; n < p.size(); ++n) {
            mean += n * p(n);
            second += double(n) * n * p(n);
        }
        if (!(mean > 0)) throw DivisionError("unheralded g2: dark mode");
        return (second - mean) / (mean * mean);
    }
    const Eigen::MatrixXd joint = fock::joint_number_distribution(rho);
    double mi = 0.0, mj = 0.0, cross = 0.0;
    for (Eigen::Index a = 0; a < joint.rows(); ++a)
        for (Eigen::Index b = 0; b < joint.cols(); ++b) {
            mi += a * joint(a, b);
            mj += b * joint(a, b);
            cross += double(a) * double(b) * joint(a, b);
        }
    if (!(mi > 0) || !(mj > 0)) throw DivisionError("unheralded g2: dark mode");
    return cross / (mi * mj);
}

fock::DensityMatrix herald_condition(const fock::DensityMatrix& rho,
                                     const DetectorSetup& setup) {
    setup.validate();
    if (rho.n_modes() != 2) throw Error("herald_condition: two-mode state required");
    const int d0 = rho.dims()[0] + 1, d1 = rho.dims()[1] + 1;
    const auto& m = rho.elements();
    std::vector<double> click_weight(static_cast<size_t>(d1));
    for (int n = 0; n < d1; ++n)
        click_weight[static_cast<size_t>(n)] = 1.0 - std::pow(1.0 - setup.eta_h, n);

    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d0, d0);
    for (int i = 0; i < d0; ++i)
        for (int j = 0; j < d0; ++j)
            for (int n = 0; n < d1; ++n)
                out(i, j) += click_weight[static_cast<size_t>(n)] * m(i * d1 + n, j * d1 + n);
    const double norm = out.trace().real();
    if (!(norm > 1e-15))
        throw DivisionError("herald_condition: herald click probability is zero");
    out /= norm;
    return fock::DensityMatrix({rho.dims()[0]}, std::move(out));
}

PairClicks hbt_clicks(const Eigen::VectorXd& dist, double eta_a, double eta_b, double t_split) {
    const double ga = 1.0 - t_split * eta_a;
    const double gb = 1.0 - (1.0 - t_split) * eta_b;
    const double gab = 1.0 - t_split * eta_a - (1.0 - t_split) * eta_b;
    const double m0 = moment1(dist, 1.0);
    if (!(m0 > 0)) throw Error("hbt_clicks: distribution has no mass");
    PairClicks out;
    out.p_a = 1.0 - moment1(dist, ga) / m0;
    out.p_b = 1.0 - moment1(dist, gb) / m0;
    out.p_ab = 1.0 - (moment1(dist, ga) + moment1(dist, gb) - moment1(dist, gab)) / m0;
    return out;
}

PairClicks cross_clicks(const Eigen::MatrixXd& joint, double eta_0, double eta_1) {
    const double m00 = moment(joint, 1.0, 1.0);
    if (!(m00 > 0)) throw Error("cross_clicks: distribution has no mass");
    const double m0 = moment(joint, 1.0 - eta_0, 1.0) / m00;
    const double m1 = moment(joint, 1.0, 1.0 - eta_1) / m00;
    const double m01 = moment(joint, 1.0 - eta_0, 1.0 - eta_1) / m00;
    PairClicks out;
    out.p_a = 1.0 - m0;
    out.p_b = 1.0 - m1;
    out.p_ab = 1.0 - m0 - m1 + m01;
    return out;
}

Eigen::VectorXd lossy_distribution(const Eigen::VectorXd& dist, double survival) {
    check_probability(survival, "lossy_distribution: survival");
    const Eigen::Index d = dist.size();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(d);
    // out[k] = sum_n dist[n] C(n, k) s^k (1-s)^(n-k)
    for (Eigen::Index n = 0; n < d; ++n) {
        double binom = 1.0;
        for (Eigen::Index k = 0; k <= n; ++k) {
            out(k) += dist(n) * binom * std::pow(survival, double(k)) *
                      std::pow(1.0 - survival, double(n - k));
            binom = binom * double(n - k) / double(k + 1);
        }
    }
    return out;
}

} // namespace qstat::detect

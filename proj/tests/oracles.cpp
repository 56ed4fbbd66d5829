#include "oracles.hpp"

#include <cmath>

namespace oracles {

namespace {

Eigen::Matrix4d embed(int mode, const Eigen::Matrix2d& block) {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.block<2, 2>(2 * mode, 2 * mode) = block;
    return m;
}

} // namespace

GaussianOracle GaussianOracle::thermal_pair(double n_th0, double n_th1) {
    GaussianOracle g;
    g.sigma_.diagonal() << 2 * n_th0 + 1, 2 * n_th0 + 1, 2 * n_th1 + 1, 2 * n_th1 + 1;
    return g;
}

void GaussianOracle::squeeze(int mode, double r, double phi) {
    // S† a S = a cosh r - a† e^{i phi} sinh r on quadratures.
    const double ch = std::cosh(r), sh = std::sinh(r);
    Eigen::Matrix2d block;
    block << ch - sh * std::cos(phi), -sh * std::sin(phi),
             -sh * std::sin(phi), ch + sh * std::cos(phi);
    const Eigen::Matrix4d m = embed(mode, block);
    sigma_ = m * sigma_ * m.transpose();
    mean_ = m * mean_;
}

void GaussianOracle::displace(int mode, std::complex<double> alpha) {
    mean_(2 * mode) += 2.0 * alpha.real();
    mean_(2 * mode + 1) += 2.0 * alpha.imag();
}

void GaussianOracle::beamsplit(double theta, double phi) {
    const double c = std::cos(theta), s = std::sin(theta);
    const double cp = std::cos(phi), sp = std::sin(phi);
    Eigen::Matrix4d m;
    // a0 -> a0 cos(theta) - e^{i phi} a1 sin(theta),
    // a1 -> a1 cos(theta) + e^{-i phi} a0 sin(theta)
    m << c, 0, -s * cp, s * sp,
         0, c, -s * sp, -s * cp,
         s * cp, s * sp, c, 0,
         -s * sp, s * cp, 0, c;
    sigma_ = m * sigma_ * m.transpose();
    mean_ = m * mean_;
}

double GaussianOracle::mean_photons(int mode) const {
    const double sxx = sigma_(2 * mode, 2 * mode);
    const double spp = sigma_(2 * mode + 1, 2 * mode + 1);
    const double dx = mean_(2 * mode), dp = mean_(2 * mode + 1);
    return (sxx + spp - 2.0 + dx * dx + dp * dp) / 4.0;
}

double GaussianOracle::quadrature_variance(int mode, double angle) const {
    const Eigen::Vector2d dir(std::cos(angle), std::sin(angle));
    return dir.transpose() * sigma_.block<2, 2>(2 * mode, 2 * mode) * dir;
}

double GaussianOracle::log_negativity() const {
    const Eigen::Matrix2d a = sigma_.block<2, 2>(0, 0);
    const Eigen::Matrix2d b = sigma_.block<2, 2>(2, 2);
    const Eigen::Matrix2d c = sigma_.block<2, 2>(0, 2);
    const double delta = a.determinant() + b.determinant() - 2.0 * c.determinant();
    const double disc = delta * delta - 4.0 * sigma_.determinant();
    const double nu2 = (delta - std::sqrt(std::max(0.0, disc))) / 2.0;
    const double nu = std::sqrt(std::max(0.0, nu2));
    return std::max(0.0, -std::log2(nu));
}

double GaussianOracle::symplectic_defect(const Eigen::Matrix4d& m) {
    Eigen::Matrix4d j = Eigen::Matrix4d::Zero();
    j(0, 1) = 1;
    j(1, 0) = -1;
    j(2, 3) = 1;
    j(3, 2) = -1;
    return (m * j * m.transpose() - j).cwiseAbs().maxCoeff();
}

qstat::fock::DensityMatrix tmsv_state(double r, const qstat::fock::FockConfig& cfg) {
    const int d = cfg.n_max + 1;
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(d * d);
    const double t = std::tanh(r);
    double amp = 1.0 / std::cosh(r);
    for (int n = 0; n < d; ++n) {
        psi(n * d + n) = amp;
        amp *= t;
    }
    return qstat::fock::pure_state({cfg.n_max, cfg.n_max}, psi);
}

Eigen::VectorXd thermal_distribution(double n_th, int levels) {
    Eigen::VectorXd p(levels);
    for (int n = 0; n < levels; ++n)
        p(n) = std::pow(n_th, n) / std::pow(1.0 + n_th, n + 1);
    return p;
}

Eigen::VectorXd poisson_distribution(double mu, int levels) {
    Eigen::VectorXd p(levels);
    double w = std::exp(-mu);
    for (int n = 0; n < levels; ++n) {
        p(n) = w;
        w *= mu / (n + 1);
    }
    return p;
}

} // namespace oracles

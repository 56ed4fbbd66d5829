#ifndef QSTAT_TESTS_ORACLES_HPP
#define QSTAT_TESTS_ORACLES_HPP

#include <complex>

#include <Eigen/Dense>

#include "qstat/fock.hpp"

// Test-only oracles, independent of the Fock-space implementation path.
namespace oracles {

/// Two-mode Gaussian state tracked as a covariance matrix in
/// (x0, p0, x1, p1) order with x = a + a†, vacuum covariance = I.
class GaussianOracle {
public:
    static GaussianOracle thermal_pair(double n_th0, double n_th1);

    void squeeze(int mode, double r, double phi);
    void displace(int mode, std::complex<double> alpha);
    void beamsplit(double theta, double phi);

    double mean_photons(int mode) const;
    /// Variance of the rotated quadrature (a e^{-i angle} + a† e^{i angle}),
    /// vacuum value 1.
    double quadrature_variance(int mode, double angle) const;
    /// E_N = max(0, -log2 nu-tilde-minus) from the symplectic spectrum of
    /// the partially transposed covariance matrix.
    double log_negativity() const;

    const Eigen::Matrix4d& covariance() const { return sigma_; }
    const Eigen::Vector4d& mean() const { return mean_; }
    /// max |M J M^T - J| of the last applied symplectic map; self-check.
    static double symplectic_defect(const Eigen::Matrix4d& m);

private:
    Eigen::Matrix4d sigma_ = Eigen::Matrix4d::Identity();
    Eigen::Vector4d mean_ = Eigen::Vector4d::Zero();
};

/// |TMSV(r)> = sum_n tanh(r)^n / cosh(r) |n, n>, written directly from
/// the Schmidt decomposition on an (n_max+1)^2 register.
qstat::fock::DensityMatrix tmsv_state(double r, const qstat::fock::FockConfig& cfg);

/// Thermal photon-number distribution p_n = n_th^n/(1+n_th)^{n+1},
/// not renormalized.
Eigen::VectorXd thermal_distribution(double n_th, int levels);

/// Poisson distribution over [0, levels).
Eigen::VectorXd poisson_distribution(double mu, int levels);

} // namespace oracles

#endif

#include "qstat/fock.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace qstat::fock {

namespace {

constexpr double kHermTol = 1e-10;
constexpr double kPsdTol = -1e-9;

int register_dim(const std::vector<int>& dims) {
    int d = 1;
    for (int c : dims) d *= c + 1;
    return d;
}

void check_mode(int mode, int n_modes) {
    if (mode < 0 || mode >= n_modes)
        throw Error("mode index " + std::to_string(mode) + " out of range for " +
                    std::to_string(n_modes) + " modes");
}

std::vector<int> uniform_dims(int n_modes, int cutoff) {
    return std::vector<int>(static_cast<size_t>(n_modes), cutoff);
}

/// Lift a single-mode matrix to `mode` of an n_modes register as a
/// factored operator (identity on the other modes).
ModeOperator lift(Eigen::MatrixXcd m, int mode, int n_modes, int cutoff) {
    check_mode(mode, n_modes);
    std::vector<Eigen::MatrixXcd> factors;
    for (int k = 0; k < n_modes; ++k) {
        if (k == mode)
            factors.push_back(std::move(m));
        else
            factors.push_back(Eigen::MatrixXcd::Identity(cutoff + 1, cutoff + 1));
    }
    return ModeOperator::tensor(uniform_dims(n_modes, cutoff), std::move(factors));
}

/// out = (A (x) B) M without forming the Kronecker product: column c of
/// M, viewed column-major as a (dB x dA) matrix X, maps to B * X * A^T.
Eigen::MatrixXcd kron2_apply_mat(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b,
                                 const Eigen::MatrixXcd& m) {
    const Eigen::Index da = a.cols(), db = b.cols();
    Eigen::MatrixXcd out(a.rows() * b.rows(), m.cols());
    Eigen::MatrixXcd tmp;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        Eigen::Map<const Eigen::MatrixXcd> x(m.col(c).data(), db, da);
        tmp.noalias() = b * x * a.transpose();
        out.col(c) = Eigen::Map<const Eigen::VectorXcd>(tmp.data(), tmp.size());
    }
    return out;
}

} // namespace

void FockConfig::validate() const {
    if (n_max < 2) throw Error("FockConfig: n_max must be >= 2");
    if (n_work < n_max) throw Error("FockConfig: n_work must be >= n_max");
    if (!(leak_tol > 0)) throw Error("FockConfig: leak_tol must be positive");
}

// --- DensityMatrix --------------------------------------------------------

DensityMatrix::DensityMatrix(std::vector<int> dims, Eigen::MatrixXcd elements)
    : dims_(std::move(dims)), mat_(std::move(elements)) {
    if (dims_.empty() || dims_.size() > 2)
        throw Error("DensityMatrix: only one- and two-mode registers are supported");
    const int d = register_dim(dims_);
    if (mat_.rows() != d || mat_.cols() != d)
        throw Error("DensityMatrix: elements are " + std::to_string(mat_.rows()) + "x" +
                    std::to_string(mat_.cols()) + ", expected " + std::to_string(d));
    if (hermiticity_defect() > kHermTol)
        throw Error("DensityMatrix: not Hermitian within 1e-10");
}

double DensityMatrix::hermiticity_defect() const {
    return (mat_ - mat_.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(mat_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

void DensityMatrix::require_valid(double leak_tol) const {
    if (hermiticity_defect() > kHermTol)
        throw Error("DensityMatrix: not Hermitian within 1e-10");
    if (std::abs(trace() - 1.0) > leak_tol)
        throw LeakageError("DensityMatrix: trace " + std::to_string(trace()) +
                           " outside 1 +- leak_tol");
    if (min_eigenvalue() < kPsdTol)
        throw Error("DensityMatrix: spectrum below -1e-9, not positive semidefinite");
}

// --- ModeOperator ----------------------------------------------------------

ModeOperator ModeOperator::dense(std::vector<int> dims, Eigen::MatrixXcd m) {
    ModeOperator op;
    const int d = register_dim(dims);
    if (m.rows() != d || m.cols() != d)
        throw Error("ModeOperator: matrix size does not match dims");
    op.dims_ = std::move(dims);
    op.mat_ = std::move(m);
    return op;
}

ModeOperator ModeOperator::tensor(std::vector<int> dims, std::vector<Eigen::MatrixXcd> factors) {
    ModeOperator op;
    if (dims.size() != factors.size())
        throw Error("ModeOperator: one factor per mode required");
    for (size_t k = 0; k < dims.size(); ++k)
        if (factors[k].rows() != dims[k] + 1 || factors[k].cols() != dims[k] + 1)
            throw Error("ModeOperator: factor size does not match dims");
    op.dims_ = std::move(dims);
    op.factors_ = std::move(factors);
    return op;
}

int ModeOperator::dim() const { return register_dim(dims_); }

Eigen::MatrixXcd ModeOperator::matrix() const {
    if (!factored()) return mat_;
    Eigen::MatrixXcd m = factors_[0];
    for (size_t k = 1; k < factors_.size(); ++k) m = detail::kron(m, factors_[k]);
    return m;
}

const Eigen::MatrixXcd& ModeOperator::dense_matrix() const {
    if (factored()) throw Error("ModeOperator: factored operator has no dense storage");
    return mat_;
}

// --- state constructors -----------------------------------------------------

DensityMatrix vacuum_state(int n_modes, const FockConfig& cfg) {
    cfg.validate();
    const int d = register_dim(uniform_dims(n_modes, cfg.n_max));
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
    m(0, 0) = 1.0;
    return DensityMatrix(uniform_dims(n_modes, cfg.n_max), std::move(m));
}

DensityMatrix fock_state(int n, const FockConfig& cfg) {
    cfg.validate();
    if (n < 0 || n > cfg.n_max) throw CutoffError("fock_state: n exceeds n_max");
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(cfg.n_max + 1, cfg.n_max + 1);
    m(n, n) = 1.0;
    return DensityMatrix({cfg.n_max}, std::move(m));
}

DensityMatrix thermal_state(double n_th, const FockConfig& cfg) {
    cfg.validate();
    if (n_th < 0) throw Error("thermal_state: n_th must be >= 0");
    double tail = 0.0;
    Eigen::VectorXd p = detail::thermal_diagonal(n_th, cfg.n_max + 1, &tail);
    if (tail > cfg.leak_tol)
        throw CutoffError("thermal_state: truncated tail mass " + std::to_string(tail) +
                          " exceeds leak_tol; raise n_max");
    return DensityMatrix({cfg.n_max}, p.cast<Complex>().asDiagonal());
}

DensityMatrix coherent_state(Complex alpha, const FockConfig& cfg) {
    cfg.validate();
    const int d = cfg.n_max + 1;
    Eigen::VectorXcd psi(d);
    // <n|alpha> = e^{-|a|^2/2} a^n / sqrt(n!)
    psi(0) = std::exp(-0.5 * std::norm(alpha));
    for (int n = 1; n < d; ++n) psi(n) = psi(n - 1) * alpha / std::sqrt(double(n));
    const double tail = 1.0 - psi.squaredNorm();
    if (tail > cfg.leak_tol)
        throw CutoffError("coherent_state: truncated tail mass exceeds leak_tol");
    return DensityMatrix({cfg.n_max}, psi * psi.adjoint());
}

DensityMatrix product_state(const DensityMatrix& a, const DensityMatrix& b) {
    if (a.n_modes() + b.n_modes() > 2)
        throw Error("product_state: result would exceed two modes");
    std::vector<int> dims = a.dims();
    dims.insert(dims.end(), b.dims().begin(), b.dims().end());
    return DensityMatrix(std::move(dims), detail::kron(a.elements(), b.elements()));
}

DensityMatrix pure_state(const std::vector<int>& dims, const Eigen::VectorXcd& psi) {
    if (psi.size() != register_dim(dims))
        throw Error("pure_state: vector length does not match dims");
    return DensityMatrix(dims, psi * psi.adjoint());
}

// --- operator constructors ---------------------------------------------------

ModeOperator displacement(Complex alpha, int mode, int n_modes, const FockConfig& cfg) {
    cfg.validate();
    if (std::norm(alpha) > cfg.n_work / 4.0)
        throw OverflowError("displacement: |alpha|^2 exceeds n_work/4");
    Eigen::MatrixXcd u = detail::displacement_matrix(alpha, cfg.n_work + 1);
    if (detail::edge_band_mass(u, detail::guard_columns(cfg)) > cfg.leak_tol)
        throw LeakageError("displacement: n_work box too small for this alpha");
    return lift(std::move(u), mode, n_modes, cfg.n_work);
}

ModeOperator squeezer(double r, double phi_sq, int mode, int n_modes, const FockConfig& cfg) {
    cfg.validate();
    if (r < 0) throw Error("squeezer: r must be >= 0");
    if (r > 1.5) throw OverflowError("squeezer: r above 1.5 is outside the supported range");
    Eigen::MatrixXcd u = detail::squeeze_matrix(r, phi_sq, cfg.n_work + 1);
    if (detail::edge_band_mass(u, detail::guard_columns(cfg)) > cfg.leak_tol)
        throw LeakageError("squeezer: n_work box too small for this r");
    return lift(std::move(u), mode, n_modes, cfg.n_work);
}

ModeOperator beamsplitter(double theta, double phi, const FockConfig& cfg) {
    cfg.validate();
    return ModeOperator::dense(uniform_dims(2, cfg.n_work),
                               detail::beamsplitter_matrix(theta, phi, cfg.n_work + 1));
}

ModeOperator phase_rotation(double theta, int mode, int n_modes, const FockConfig& cfg) {
    cfg.validate();
    const int d = cfg.n_work + 1;
    Eigen::VectorXcd diag(d);
    for (int n = 0; n < d; ++n) diag(n) = std::polar(1.0, theta * n);
    return lift(Eigen::MatrixXcd(diag.asDiagonal()), mode, n_modes, cfg.n_work);
}

// --- operations ---------------------------------------------------------------

DensityMatrix apply(const ModeOperator& op, const DensityMatrix& rho, double leak_tol) {
    if (op.n_modes() != rho.n_modes())
        throw Error("apply: operator and state mode counts differ");
    for (int k = 0; k < rho.n_modes(); ++k)
        if (op.dims()[k] < rho.dims()[k])
            throw Error("apply: operator box smaller than the state box");

    const double tr_in = rho.trace();
    Eigen::MatrixXcd out;
    if (op.factored()) {
        std::vector<Eigen::MatrixXcd> f;
        for (int k = 0; k < rho.n_modes(); ++k) {
            const int d = rho.dims()[k] + 1;
            f.push_back(op.factors()[k].topLeftCorner(d, d));
        }
        if (rho.n_modes() == 1) {
            out.noalias() = f[0] * rho.elements() * f[0].adjoint();
        } else {
            Eigen::MatrixXcd half = kron2_apply_mat(f[0], f[1], rho.elements());
            out = kron2_apply_mat(f[0], f[1], half.adjoint()).adjoint();
        }
    } else {
        // Gather the state's sub-box out of the operator's larger
        // register; the flattened indices differ between the two boxes.
        const Eigen::MatrixXcd& m = op.dense_matrix();
        const int d = rho.dim();
        std::vector<int> sel;
        sel.reserve(static_cast<size_t>(d));
        if (rho.n_modes() == 1) {
            for (int i = 0; i < d; ++i) sel.push_back(i);
        } else {
            const int d1s = rho.dims()[1] + 1;
            const int d1w = op.dims()[1] + 1;
            for (int i0 = 0; i0 <= rho.dims()[0]; ++i0)
                for (int i1 = 0; i1 < d1s; ++i1) sel.push_back(i0 * d1w + i1);
        }
        Eigen::MatrixXcd u(d, d);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) u(r, c) = m(sel[static_cast<size_t>(r)],
                                                    sel[static_cast<size_t>(c)]);
        out.noalias() = u * rho.elements() * u.adjoint();
    }
    // Enforce exact Hermitian symmetry; conjugation only roundoffs it away.
    out = (out + out.adjoint()) / 2.0;

    const double leak = tr_in - out.trace().real();
    if (leak > leak_tol)
        throw LeakageError("apply: projection lost trace " + std::to_string(leak) +
                           " > leak_tol");
    return DensityMatrix(rho.dims(), std::move(out));
}

DensityMatrix partial_trace(const DensityMatrix& rho, int keep) {
    if (rho.n_modes() != 2) throw Error("partial_trace: two-mode input required");
    check_mode(keep, 2);
    const int d0 = rho.dims()[0] + 1, d1 = rho.dims()[1] + 1;
    const auto& m = rho.elements();
    if (keep == 0) {
        Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d0, d0);
        for (int i = 0; i < d0; ++i)
            for (int j = 0; j < d0; ++j)
                for (int k = 0; k < d1; ++k) out(i, j) += m(i * d1 + k, j * d1 + k);
        return DensityMatrix({rho.dims()[0]}, std::move(out));
    }
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d1, d1);
    for (int i = 0; i < d1; ++i)
        for (int j = 0; j < d1; ++j)
            for (int k = 0; k < d0; ++k) out(i, j) += m(k * d1 + i, k * d1 + j);
    return DensityMatrix({rho.dims()[1]}, std::move(out));
}

Eigen::MatrixXcd partial_transpose(const DensityMatrix& rho, int mode) {
    if (rho.n_modes() != 2) throw Error("partial_transpose: two-mode input required");
    check_mode(mode, 2);
    const int d0 = rho.dims()[0] + 1, d1 = rho.dims()[1] + 1;
    const auto& m = rho.elements();
    Eigen::MatrixXcd out(d0 * d1, d0 * d1);
    for (int i0 = 0; i0 < d0; ++i0)
        for (int i1 = 0; i1 < d1; ++i1)
            for (int j0 = 0; j0 < d0; ++j0)
                for (int j1 = 0; j1 < d1; ++j1) {
                    if (mode == 1)
                        out(i0 * d1 + i1, j0 * d1 + j1) = m(i0 * d1 + j1, j0 * d1 + i1);
                    else
                        out(i0 * d1 + i1, j0 * d1 + j1) = m(j0 * d1 + i1, i0 * d1 + j1);
                }
    return out;
}

double trace_norm(const Eigen::MatrixXcd& hermitian) {
    if ((hermitian - hermitian.adjoint()).cwiseAbs().maxCoeff() > 1e-8)
        throw Error("trace_norm: input is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hermitian, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().sum();
}

double mean_photons(const DensityMatrix& rho, int mode) {
    Eigen::VectorXd p = number_distribution(rho, mode);
    double mean = 0.0;
    for (int n = 0; n < p.size(); ++n) mean += n * p(n);
    return mean;
}

Eigen::VectorXd number_distribution(const DensityMatrix& rho, int mode) {
    check_mode(mode, rho.n_modes());
    if (rho.n_modes() == 1) return rho.elements().diagonal().real();
    const Eigen::MatrixXd joint = joint_number_distribution(rho);
    if (mode == 0) return joint.rowwise().sum();
    return joint.colwise().sum().transpose();
}

Eigen::MatrixXd joint_number_distribution(const DensityMatrix& rho) {
    if (rho.n_modes() != 2) throw Error("joint_number_distribution: two-mode input required");
    const int d0 = rho.dims()[0] + 1, d1 = rho.dims()[1] + 1;
    Eigen::VectorXd diag = rho.elements().diagonal().real();
    return Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
               diag.data(), d0, d1)
        .eval();
}

// --- detail -------------------------------------------------------------------

namespace detail {

namespace {
constexpr double kPiHalf = 1.57079632679489661923;
}

Eigen::MatrixXcd annihilation(int dim) {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(double(n));
    return a;
}

Eigen::MatrixXcd expm_antihermitian(const Eigen::MatrixXcd& g) {
    // G anti-Hermitian: iG Hermitian, exp(G) = V e^{-i lambda} V†.
    const Eigen::MatrixXcd h = Complex(0, 1) * g;
    if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, h.cwiseAbs().maxCoeff()))
        throw Error("expm_antihermitian: generator is not anti-Hermitian");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    Eigen::VectorXcd phase(h.rows());
    for (Eigen::Index k = 0; k < h.rows(); ++k)
        phase(k) = std::polar(1.0, -es.eigenvalues()(k));
    return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

Eigen::MatrixXcd displacement_matrix(Complex alpha, int dim) {
    const Eigen::MatrixXcd a = annihilation(dim);
    return expm_antihermitian(alpha * a.adjoint() - std::conj(alpha) * a);
}

Eigen::MatrixXcd squeeze_matrix(double r, double phi_sq, int dim) {
    const Eigen::MatrixXcd a = annihilation(dim);
    const Complex xi = std::polar(r, phi_sq);
    const Eigen::MatrixXcd a2 = a * a;
    return expm_antihermitian(0.5 * (std::conj(xi) * a2 - xi * a2.adjoint()));
}

Eigen::MatrixXcd beamsplitter_matrix(double theta, double phi, int dim) {
    // The generator conserves n0 + n1, so it splits into tridiagonal
    // blocks over the total photon number. Within a block the Hermitian
    // iG has zero diagonal and off-diagonal magnitude theta * amp with a
    // constant phase, which a diagonal gauge removes; each block then
    // reduces to a real symmetric tridiagonal eigenproblem.
    const int cutoff = dim - 1;
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(dim * dim, dim * dim);
    // i G_{n,n+1} = i theta e^{-i phi} amp = theta amp e^{i psi}
    const double psi = kPiHalf - phi;
    for (int total = 0; total <= 2 * cutoff; ++total) {
        const int lo = std::max(0, total - cutoff);
        const int hi = std::min(total, cutoff);
        const int bd = hi - lo + 1;
        if (bd == 1) {
            const int n0 = lo;
            u(n0 * dim + (total - n0), n0 * dim + (total - n0)) = 1.0;
            continue;
        }
        Eigen::VectorXd diag = Eigen::VectorXd::Zero(bd);
        Eigen::VectorXd subdiag(bd - 1);
        for (int n0 = lo; n0 < hi; ++n0)
            subdiag(n0 - lo) = theta * std::sqrt(double(n0 + 1) * double(total - n0));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
        es.computeFromTridiagonal(diag, subdiag);

        // exp(G) = exp(-iH) = D V e^{-i lambda} V^T D† with the gauge
        // D = diag(e^{-i psi n}); real and imaginary parts assembled
        // from two real products.
        const Eigen::MatrixXd& v = es.eigenvectors();
        const Eigen::ArrayXd lambda = es.eigenvalues().array();
        const Eigen::MatrixXd re = v * lambda.cos().matrix().asDiagonal() * v.transpose();
        const Eigen::MatrixXd im = v * (-lambda.sin()).matrix().asDiagonal() * v.transpose();
        Eigen::MatrixXcd ub = re.cast<Complex>() + Complex(0, 1) * im.cast<Complex>();
        for (int r = 0; r < bd; ++r)
            for (int c = 0; c < bd; ++c)
                ub(r, c) *= std::polar(1.0, -psi * (r - c));

        for (int r = 0; r < bd; ++r)
            for (int c = 0; c < bd; ++c) {
                const int n0r = lo + r, n0c = lo + c;
                u((n0r)*dim + (total - n0r), (n0c)*dim + (total - n0c)) = ub(r, c);
            }
    }
    return u;
}

Eigen::VectorXd thermal_diagonal(double n_th, int dim, double* tail) {
    Eigen::VectorXd p(dim);
    if (n_th <= 0.0) {
        p.setZero();
        p(0) = 1.0;
        if (tail) *tail = 0.0;
        return p;
    }
    const double ratio = n_th / (1.0 + n_th);
    double w = 1.0 / (1.0 + n_th);
    for (int n = 0; n < dim; ++n) {
        p(n) = w;
        w *= ratio;
    }
    const double kept = p.sum();
    if (tail) *tail = 1.0 - kept;
    p /= kept;
    return p;
}

Eigen::VectorXcd kron2_apply_vec(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b,
                                 const Eigen::VectorXcd& x) {
    const Eigen::Index da = a.cols(), db = b.cols();
    if (x.size() != da * db) throw Error("kron2_apply_vec: size mismatch");
    Eigen::Map<const Eigen::MatrixXcd> xm(x.data(), db, da);
    Eigen::MatrixXcd y = b * xm * a.transpose();
    return Eigen::Map<const Eigen::VectorXcd>(y.data(), y.size());
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

int guard_columns(const FockConfig& cfg) {
    (void)cfg;
    return 2;  // thermal inputs carry no appreciable mass above |2>
}

double edge_band_mass(const Eigen::MatrixXcd& u, int max_col, int band) {
    const Eigen::Index dim = u.rows();
    const Eigen::Index first = std::max<Eigen::Index>(0, dim - band);
    const Eigen::Index ncols = std::min<Eigen::Index>(max_col + 1, dim);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < ncols; ++j)
        worst = std::max(worst, u.col(j).segment(first, dim - first).squaredNorm());
    return worst;
}

} // namespace detail

} // namespace qstat::fock

#ifndef QSTAT_FOCK_HPP
#define QSTAT_FOCK_HPP

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "qstat/errors.hpp"

namespace qstat::fock {

using Complex = std::complex<double>;

/// Truncation settings for the Fock-space representation.
///
/// States are stored with `n_max` photons per mode (matrix dimension
/// n_max+1 per mode). Unitaries are exponentiated on the enlarged
/// `n_work` box so that truncation artifacts stay away from the
/// physically occupied low-photon corner; they are projected onto the
/// state's box when applied. `leak_tol` bounds the acceptable trace
/// mass lost in any single projection.
struct FockConfig {
    int n_max = 25;
    int n_work = 40;
    double leak_tol = 1e-6;

    void validate() const;
};

/// Density operator on a truncated Fock basis of one or two modes.
///
/// Basis ordering is mode-0-major: the flattened index of |n0, n1> is
/// n0*(dims[1]+1) + n1, i.e. kron(A, B) acts with A on mode 0.
class DensityMatrix {
public:
    DensityMatrix(std::vector<int> dims, Eigen::MatrixXcd elements);

    const std::vector<int>& dims() const { return dims_; }
    int n_modes() const { return static_cast<int>(dims_.size()); }
    int dim() const { return static_cast<int>(mat_.rows()); }
    const Eigen::MatrixXcd& elements() const { return mat_; }
    double trace() const { return mat_.trace().real(); }

    double hermiticity_defect() const;
    /// Smallest eigenvalue; full eigendecomposition, intended for checks.
    double min_eigenvalue() const;
    /// Throws unless Hermitian (1e-10), trace within leak_tol of 1 and
    /// spectrum above -1e-9.
    void require_valid(double leak_tol = FockConfig{}.leak_tol) const;

private:
    std::vector<int> dims_;
    Eigen::MatrixXcd mat_;
};

/// A (generally non-Hermitian) operator on a truncated Fock register.
/// Builders return operators on the `n_work` box; tensor-product
/// structure is retained where present so application can contract
/// mode-wise instead of forming the Kronecker product.
class ModeOperator {
public:
    static ModeOperator dense(std::vector<int> dims, Eigen::MatrixXcd m);
    static ModeOperator tensor(std::vector<int> dims, std::vector<Eigen::MatrixXcd> factors);

    const std::vector<int>& dims() const { return dims_; }
    int n_modes() const { return static_cast<int>(dims_.size()); }
    int dim() const;
    bool factored() const { return !factors_.empty(); }
    const std::vector<Eigen::MatrixXcd>& factors() const { return factors_; }
    /// Dense matrix; assembles the Kronecker product for factored operators.
    Eigen::MatrixXcd matrix() const;
    /// Reference to the dense storage; only valid when not factored.
    const Eigen::MatrixXcd& dense_matrix() const;

private:
    ModeOperator() = default;
    std::vector<int> dims_;
    Eigen::MatrixXcd mat_;                  // dense storage (empty when factored)
    std::vector<Eigen::MatrixXcd> factors_; // per-mode factors (empty when dense)
};

// --- state constructors -------------------------------------------------

DensityMatrix vacuum_state(int n_modes, const FockConfig& cfg);

/// |n><n| on one mode.
DensityMatrix fock_state(int n, const FockConfig& cfg);

/// Thermal state with mean occupation n_th, renormalized over the box.
/// Throws CutoffError when the truncated tail mass exceeds cfg.leak_tol.
DensityMatrix thermal_state(double n_th, const FockConfig& cfg);

/// Pure coherent state |alpha><alpha| on one mode (analytic amplitudes).
DensityMatrix coherent_state(Complex alpha, const FockConfig& cfg);

/// rho_a (x) rho_b on the combined register.
DensityMatrix product_state(const DensityMatrix& a, const DensityMatrix& b);

/// Density matrix |psi><psi| of a pure state vector on the given register.
DensityMatrix pure_state(const std::vector<int>& dims, const Eigen::VectorXcd& psi);

// --- operator constructors ----------------------------------------------

/// exp(alpha a† - alpha* a) on mode `mode` of an `n_modes` register.
/// Precondition |alpha|^2 <= n_work/4. Throws LeakageError when the
/// n_work box is too small for the displaced low-photon columns.
ModeOperator displacement(Complex alpha, int mode, int n_modes, const FockConfig& cfg);

/// exp((xi* a^2 - xi a†^2)/2) with xi = r e^{i phi_sq}.
/// Precondition r <= 1.5.
ModeOperator squeezer(double r, double phi_sq, int mode, int n_modes, const FockConfig& cfg);

/// exp(theta (e^{-i phi} a0 a1† - e^{i phi} a0† a1)) on a two-mode
/// register; photon-number conserving, |T| = cos(theta).
ModeOperator beamsplitter(double theta, double phi, const FockConfig& cfg);

/// exp(i theta n) on one mode.
ModeOperator phase_rotation(double theta, int mode, int n_modes, const FockConfig& cfg);

// --- operations -----------------------------------------------------------

/// U rho U† with U projected onto rho's box. The output keeps rho's
/// dims; throws LeakageError when the projection loses more than
/// leak_tol of the input trace.
DensityMatrix apply(const ModeOperator& op, const DensityMatrix& rho,
                    double leak_tol = FockConfig{}.leak_tol);

/// Reduce a two-mode state to mode `keep`.
DensityMatrix partial_trace(const DensityMatrix& rho, int keep);

/// Transpose of mode `mode` of a two-mode state. Hermitian, same trace,
/// generally not positive; returned as a bare matrix.
Eigen::MatrixXcd partial_transpose(const DensityMatrix& rho, int mode);

/// Sum of |eigenvalues| of a Hermitian matrix.
double trace_norm(const Eigen::MatrixXcd& hermitian);

/// <a†_mode a_mode>.
double mean_photons(const DensityMatrix& rho, int mode);

/// Photon-number distribution of the reduced state of `mode`.
Eigen::VectorXd number_distribution(const DensityMatrix& rho, int mode);

/// Joint photon-number distribution p(n0, n1) of a two-mode state.
Eigen::MatrixXd joint_number_distribution(const DensityMatrix& rho);

// --- low-level building blocks (shared with the model layer) -------------

namespace detail {

/// Annihilation operator on a single mode of matrix dimension `dim`.
Eigen::MatrixXcd annihilation(int dim);

/// exp(G) for anti-Hermitian G via eigendecomposition of iG; exactly
/// unitary up to roundoff.
Eigen::MatrixXcd expm_antihermitian(const Eigen::MatrixXcd& g);

/// Single-mode matrices on a box of matrix dimension `dim`.
Eigen::MatrixXcd displacement_matrix(Complex alpha, int dim);
Eigen::MatrixXcd squeeze_matrix(double r, double phi_sq, int dim);

/// Two-mode beamsplitter on per-mode matrix dimension `dim`, built
/// blockwise over total photon number (the generator conserves n0+n1).
Eigen::MatrixXcd beamsplitter_matrix(double theta, double phi, int dim);

/// Normalized thermal diagonal over `dim` levels; *tail receives the
/// untruncated tail mass when non-null.
Eigen::VectorXd thermal_diagonal(double n_th, int dim, double* tail = nullptr);

/// y = (A (x) B) x for one column vector, without forming the product.
Eigen::VectorXcd kron2_apply_vec(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b,
                                 const Eigen::VectorXcd& x);

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

/// Columns of the working box guarded at construction time: the
/// low-photon region a model state occupies. Columns near n_max can
/// legitimately spread past any affordable n_work under squeezing, so
/// their fidelity is guarded by the apply-time trace check instead.
int guard_columns(const FockConfig& cfg);

/// Mass in the top `band` rows of the n_work-built unitary over columns
/// j <= max_col; the construction-time leakage diagnostic.
double edge_band_mass(const Eigen::MatrixXcd& u, int max_col, int band = 3);

} // namespace detail

} // namespace qstat::fock

#endif

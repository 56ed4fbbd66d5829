#include "qstat/witness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <vector>

namespace qstat::witness {

namespace {

constexpr double kRStep = 1e-3;
constexpr double kRBase = 2.0;
constexpr double kRCap = 12.0;
constexpr double kAStep = 0.05;
constexpr double kABase = 50.0;
constexpr double kACap = 1e6;
constexpr double kGoldenTol = 1e-8;

/// Golden-section maximization of f on [lo, hi] down to bracket width tol.
template <typename F>
double golden_max(F&& f, double lo, double hi, double tol) {
    const double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    return (a + b) / 2.0;
}

double boundary_value(double a, double r) { return a * boundary_p0(r) + boundary_p1(r); }

/// Shared memo of the boundary on the default a-grid.
const std::vector<GaussianBoundary>& default_grid_boundary() {
    static const std::vector<GaussianBoundary> table = [] {
        std::vector<GaussianBoundary> t;
        const int n = static_cast<int>(std::llround(2.0 * kABase / kAStep)) + 1;
        t.reserve(static_cast<size_t>(n));
        for (int k = 0; k < n; ++k) t.push_back(gaussian_boundary(-kABase + k * kAStep));
        return t;
    }();
    return table;
}

} // namespace

void NcWitnessInput::validate() const {
    if (!(p_c >= 0) || !(p_s >= 0) || !(p_s + p_c <= 1.0 + 1e-12))
        throw Error("NcWitnessInput: need 0 <= P_C, 0 <= P_S, P_S + P_C <= 1");
}

double nc_witness(const NcWitnessInput& in) {
    in.validate();
    return in.p_s - 2.0 * (std::sqrt(in.p_c) - in.p_c);
}

NcWitnessInput rates_to_witness_input(const detect::ClickRecord& rec) {
    if (rec.n_pulses < 1) throw Error("rates_to_witness_input: n_pulses must be >= 1");
    if (rec.rs_a + rec.rs_b < 2.0 * rec.rc)
        throw Error("rates_to_witness_input: singles below twice the coincidences; P_S < 0");
    const double n = static_cast<double>(rec.n_pulses);
    NcWitnessInput in;
    in.p_c = rec.rc / n;
    in.p_s = (rec.rs_a + rec.rs_b - 2.0 * rec.rc) / n;
    in.validate();
    return in;
}

double boundary_p0(double r) {
    // d^2 (1 - tanh r) simplifies to (e^{2r} - 1)/2; expm1 keeps small r exact.
    return std::exp(-0.5 * std::expm1(2.0 * r)) / std::cosh(r);
}

double boundary_p1(double r) {
    const double d2 = std::expm1(4.0 * r) / 4.0;
    const double c = std::cosh(r);
    return d2 * std::exp(-0.5 * std::expm1(2.0 * r)) / (c * c * c);
}

GaussianBoundary gaussian_boundary(double a) {
    if (!std::isfinite(a)) throw Error("gaussian_boundary: a must be finite");
    double hi = kRBase;
    int best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    int n = 0;
    for (;;) {
        n = static_cast<int>(std::llround(hi / kRStep)) + 1;
        for (int k = 0; k <= n - 1; ++k) {
            const double v = boundary_value(a, k * kRStep);
            if (v > best_val) {
                best_val = v;
                best = k;
            }
        }
        if (best < n - 1 || hi >= kRCap) break;
        hi = std::min(2.0 * hi, kRCap);
        best_val = -std::numeric_limits<double>::infinity();
    }
    const double lo_r = std::max(0.0, (best - 1) * kRStep);
    const double hi_r = std::min(hi, (best + 1) * kRStep);
    const double r_star = golden_max([a](double r) { return boundary_value(a, r); }, lo_r, hi_r,
                                     kGoldenTol);
    GaussianBoundary out;
    // The grid endpoint may beat the refined interior point near r = 0.
    out.r_star = boundary_value(a, r_star) >= best_val ? r_star : best * kRStep;
    out.w_g = boundary_value(a, out.r_star);
    return out;
}

QngWitnessResult qng_witness(const detect::PhotonProbabilities& p) {
    if (!(p.p0 >= 0 && p.p1 >= 0)) throw Error("qng_witness: probabilities must be >= 0");
    const auto h = [&p](double a) { return a * p.p0 + p.p1 - gaussian_boundary(a).w_g; };

    // Scan the memoized default grid first.
    const auto& table = default_grid_boundary();
    double a_lo = -kABase, a_hi = kABase;
    double best_a = a_lo;
    double best_h = -std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < table.size(); ++k) {
        const double a = -kABase + static_cast<double>(k) * kAStep;
        const double v = a * p.p0 + p.p1 - table[k].w_g;
        if (v > best_h) {
            best_h = v;
            best_a = a;
        }
    }
    // Widen while the optimum sits on the range edge (h is concave in a).
    while ((best_a <= a_lo + kAStep / 2 || best_a >= a_hi - kAStep / 2) &&
           (a_hi - a_lo) < 2.0 * kACap) {
        const double width = a_hi - a_lo;
        a_lo -= width / 2;
        a_hi += width / 2;
        const int n = 401;
        for (int k = 0; k < n; ++k) {
            const double a = a_lo + (a_hi - a_lo) * k / (n - 1);
            const double v = h(a);
            if (v > best_h) {
                best_h = v;
                best_a = a;
            }
        }
    }
    const double step = std::max(kAStep, (a_hi - a_lo) / 400.0);
    const double a_opt = golden_max(h, best_a - step, best_a + step, kGoldenTol);

    QngWitnessResult out;
    out.a_opt = h(a_opt) >= best_h ? a_opt : best_a;
    const GaussianBoundary gb = gaussian_boundary(out.a_opt);
    out.w = out.a_opt * p.p0 + p.p1;
    out.w_g = gb.w_g;
    out.delta_w = out.w - out.w_g;
    out.r_boundary = gb.r_star;
    return out;
}

QngDepthResult qng_depth(const detect::PhotonProbabilities& p) {
    if (!(p.p1 > 0)) throw DivisionError("qng_depth: p1 is zero");
    QngDepthResult out;
    out.t_min = 1.5 * p.p2plus / (p.p1 * p.p1 * p.p1);
    out.depth_db = out.t_min > 0 ? -10.0 * std::log10(out.t_min)
                                 : std::numeric_limits<double>::infinity();
    return out;
}

double log_negativity(const fock::DensityMatrix& rho) {
    const Eigen::MatrixXcd pt = fock::partial_transpose(rho, 1);
    const double tn = fock::trace_norm(pt) / rho.trace();
    const double e_n = std::log2(tn);
    if (e_n < -1e-9)
        throw Error("log_negativity: trace norm fell measurably below the trace");
    return std::max(0.0, e_n);
}

} // namespace qstat::witness

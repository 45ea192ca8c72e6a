// metrology.hpp — Force-sensitivity bounds: shot-noise limited minimal force per
// observable, quantum Fisher information (closed form, covariance form, and a
// fidelity-based numerical estimate), the Cramer-Rao bound, and SLD parameters.

#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "rabisense/analytics.hpp"
#include "rabisense/core.hpp"
#include "rabisense/dynamics.hpp"
#include "rabisense/hilbert.hpp"
#include "rabisense/matrix_utils.hpp"

namespace rabisense::metrology {

using analytics::DerivedParams;
using analytics::GaussianSteadyState;
using hilbert::HilbertSpec;

// Observable carries no force dependence at all (zero slope).
class no_signal_error : public physics_error {
public:
    using physics_error::physics_error;
};

// ----------------------------- repetition budget -----------------------------

struct RepetitionBudget {
    double total_time = 1.0;  // T (s)
    double cycle_time = 1.0;  // tau: evolution + preparation + measurement (s)

    double nu() const {
        if (!(cycle_time > 0.0) || total_time < cycle_time)
            throw invalid_spec("RepetitionBudget: need T >= tau > 0 (nu >= 1)");
        return total_time / cycle_time;
    }
};

struct SensitivityReport {
    std::string observable;
    double signal = 0.0;
    double variance = 0.0;     // <Delta A>^2
    double dsignal_dF = 0.0;   // per newton
    double delta_F = 0.0;      // newtons
    double nu = 1.0;
};

// delta F = <Delta A> / (sqrt(nu) |d<A>/dF|); `variance` is <Delta A>^2.
inline double shot_noise_delta_f(double variance, double dsignal_dF, double nu = 1.0) {
    if (dsignal_dF == 0.0)
        throw no_signal_error("shot_noise_delta_f: observable does not respond to the force");
    if (!(nu >= 1.0) || !(variance >= 0.0))
        throw invalid_spec("shot_noise_delta_f: need nu >= 1 and variance >= 0");
    return std::sqrt(variance) / (std::sqrt(nu) * std::abs(dsignal_dF));
}

inline SensitivityReport make_report(std::string observable, double signal, double variance,
                                     double dsignal_dF, double nu = 1.0) {
    SensitivityReport r;
    r.observable = std::move(observable);
    r.signal = signal;
    r.variance = variance;
    r.dsignal_dF = dsignal_dF;
    r.nu = nu;
    r.delta_F = shot_noise_delta_f(variance, dsignal_dF, nu);
    return r;
}

inline SensitivityReport apply_budget(SensitivityReport r, const RepetitionBudget& budget) {
    const double nu = budget.nu();
    r.delta_F *= std::sqrt(r.nu / nu);
    r.nu = nu;
    return r;
}

// ----------------------------- per-shot closed forms --------------------------

// Position quadrature: (hbar omega / (sqrt(2) z)) sqrt((2 lc^2 - l^2)(lc^2 - l^2))
inline double delta_f_x(const SystemParams& p) {
    const auto d = analytics::derived(p);
    analytics::require_stable(d);
    const double l2 = d.lambda * d.lambda, lc2 = d.lambda_c * d.lambda_c;
    return hbar * p.omega / (std::sqrt(2.0) * p.z) *
           std::sqrt((2.0 * lc2 - l2) * (lc2 - l2));
}

// Momentum quadrature; no momentum signal develops without dissipation, which
// is reported as an empty optional so sweeps can skip the point.
inline std::optional<double> delta_f_p(const SystemParams& p) {
    if (p.gamma == 0.0) return std::nullopt;
    const auto d = analytics::derived(p);
    analytics::require_stable(d);
    const double l2 = d.lambda * d.lambda, lc2 = d.lambda_c * d.lambda_c;
    return hbar * p.omega * p.omega / (std::sqrt(2.0) * p.z * p.gamma) *
           std::sqrt((2.0 * lc2 - 3.0 * l2 + l2 * l2) * (lc2 - l2));
}

// Phonon number: minimal F with <n>(F) = <Delta n>(F) (unit signal-to-noise),
// found by bisection on a bracket around the quadrature sensitivity scale.
inline double delta_f_n(const SystemParams& p, double rel_tol = 1e-3) {
    const auto d0 = analytics::derived(p);
    analytics::require_stable(d0);

    auto excess = [&](double F) {
        const auto d = analytics::derived(p.with_force(F));
        return analytics::n_ss(d) - std::sqrt(analytics::var_n_ss(d));
    };

    const double scale = delta_f_x(p);
    double lo = 1e-3 * scale, hi = 1e3 * scale;
    int guard = 0;
    while (excess(lo) > 0.0 && ++guard < 8) lo *= 1e-2;
    while (excess(hi) < 0.0 && ++guard < 16) hi *= 1e2;
    if (excess(lo) > 0.0 || excess(hi) < 0.0)
        throw numerical_error("delta_f_n: could not bracket the unit-SNR force in [" +
                              std::to_string(lo) + ", " + std::to_string(hi) + "] N");
    while (hi - lo > rel_tol * hi) {
        const double mid = 0.5 * (lo + hi);
        (excess(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// ----------------------------- Fisher information ----------------------------

// I_Q = (sqrt(2) z / hbar omega)^2 (2 lc^2 - l^2) / ((lc^2-l^2)(4(lc^2-l^2)+l^4))
inline double qfi_closed_form(const SystemParams& p) {
    const auto d = analytics::derived(p);
    analytics::require_stable(d);
    const double D = analytics::stability_gap(d);
    const double l2 = d.lambda * d.lambda, lc2 = d.lambda_c * d.lambda_c;
    const double pref = std::sqrt(2.0) * p.z / (hbar * p.omega);
    return pref * pref * (2.0 * lc2 - l2) / (D * (4.0 * D + l2 * l2));
}

// I_Q = dX^T cov^{-1} dX with dX = d<(x,p)>/dF; valid because the covariance
// matrix carries no force dependence.
inline double qfi_covariance(const Eigen::Vector2d& mean_derivative,
                             const Eigen::Matrix2d& cov) {
    const double det = cov.determinant();
    if (!(std::abs(det) > 1e-300))
        throw numerical_error("qfi_covariance: singular covariance matrix");
    Eigen::Matrix2d inv;
    inv << cov(1, 1), -cov(0, 1), -cov(1, 0), cov(0, 0);
    inv /= det;
    return mean_derivative.dot(inv * mean_derivative);
}

inline double qfi_covariance(const SystemParams& p) {
    const auto d = analytics::derived(p);
    return qfi_covariance(analytics::mean_derivative(p),
                          analytics::covariance_ss(d, p.gamma / p.omega));
}

// Cramer-Rao bound on the minimal force
inline double delta_f_q(const SystemParams& p, double nu = 1.0) {
    return 1.0 / std::sqrt(nu * qfi_closed_form(p));
}

struct FidelityQfiResult {
    double value = 0.0;          // Richardson-extrapolated estimate
    double estimate_eps = 0.0;   // central-difference estimate at eps
    double estimate_half = 0.0;  // ... at eps/2
    double epsilon = 0.0;        // force step (N)
};

namespace detail {

inline Matrix steady_state_for(const SystemParams& p, const HilbertSpec& spec) {
    if (spec.include_spin) {
        const Matrix H = hilbert::rabi_hamiltonian(p, spec);
        if (spec.dim() <= 64) return dynamics::steady_state_direct(H, p.gamma, spec);
        const auto res = dynamics::steady_state_evolve(H, p.gamma, spec);
        if (!res.converged)
            throw numerical_error("qfi_fidelity_oracle: steady-state evolution did not "
                                  "converge (residual " +
                                  std::to_string(res.residual_over_gamma) + " gamma)");
        return res.rho;
    }
    const Matrix H = analytics::effective_hamiltonian(p, spec);
    return dynamics::steady_state_direct(H, p.gamma, spec);
}

}  // namespace detail

// Fisher information from the Bures distance between steady states at F -+ eps,
// 2(1 - sqrt(fidelity))/eps^2, evaluated at two step sizes and Richardson
// extrapolated. Entirely independent of the closed forms above.
inline FidelityQfiResult qfi_fidelity_oracle(const SystemParams& p, const HilbertSpec& spec,
                                             double epsilon) {
    if (!(epsilon > 0.0)) throw invalid_spec("qfi_fidelity_oracle: epsilon must be > 0");

    auto central_estimate = [&](double eps) {
        const Matrix lo = detail::steady_state_for(p.with_force(p.F - eps), spec);
        const Matrix hi = detail::steady_state_for(p.with_force(p.F + eps), spec);
        const double fid = fidelity(lo, hi);
        if (fid > 1.0 + 1e-8)
            throw numerical_error("qfi_fidelity_oracle: fidelity " + std::to_string(fid) +
                                  " exceeds 1; states are not valid density matrices");
        return 2.0 * (1.0 - std::sqrt(std::min(fid, 1.0))) / (eps * eps);
    };

    FidelityQfiResult r;
    r.epsilon = epsilon;
    r.estimate_eps = central_estimate(epsilon);
    r.estimate_half = central_estimate(0.5 * epsilon);
    r.value = (4.0 * r.estimate_half - r.estimate_eps) / 3.0;  // O(eps^2) -> O(eps^4)
    return r;
}

// Default force step: the step that shifts the dimensionless force by 0.01.
inline double default_qfi_epsilon(const SystemParams& p) {
    return 1e-2 * hbar * p.omega / p.z;
}

// ----------------------------- SLD operator ----------------------------------

struct SldParams {
    Complex beta;       // P (cosh r - e^{2 i chi} sinh r)
    double prefactor;   // 2 d(alpha)/dF, per newton
};

inline SldParams sld_parameters(const GaussianSteadyState& g, double dalpha_dF) {
    SldParams s;
    s.beta = g.purity * (std::cosh(g.squeeze_r) -
                         std::exp(Complex(0.0, 2.0 * g.squeeze_chi)) * std::sinh(g.squeeze_r));
    s.prefactor = 2.0 * dalpha_dF;
    return s;
}

// Lambda_F = 2 (d alpha/dF) W (beta a^dag + conj(beta) a) W^dag with
// W = R(delta) D(alpha) S(zeta); bosonic space.
inline Matrix sld_matrix(const GaussianSteadyState& g, double dalpha_dF,
                         const HilbertSpec& spec) {
    const HilbertSpec bspec = HilbertSpec::bosonic(spec.fock_dim);
    const auto s = sld_parameters(g, dalpha_dF);
    const Complex zeta = std::polar(g.squeeze_r, 2.0 * g.squeeze_chi);
    const Matrix W = hilbert::rotation(g.rot_delta, bspec) *
                     hilbert::displacement(g.disp_alpha, bspec) *
                     hilbert::squeeze(zeta, bspec);
    const auto lad = hilbert::fock_ops(bspec);
    const Matrix core = s.beta * lad.a_dag + std::conj(s.beta) * lad.a;
    return s.prefactor * (W * core * W.adjoint());
}

}  // namespace rabisense::metrology

// analytics.hpp — Closed-form steady-state observables of the effective bosonic
// model: quadrature means and variances, phonon statistics, covariance matrix,
// and the rotated displaced-squeezed-thermal decomposition of the steady state.
//
// Quadrature convention: x = a_dag + a, p = i(a_dag - a). The vacuum then has
// unit variances, cov = diag(1,1), det(cov) >= 1, and purity = det(cov)^(-1/2).

#pragma once

#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "rabisense/core.hpp"
#include "rabisense/hilbert.hpp"
#include "rabisense/matrix_utils.hpp"

namespace rabisense::analytics {

using hilbert::HilbertSpec;

// ----------------------------- derived couplings -----------------------------

struct DerivedParams {
    double lambda;    // 2 g / sqrt(omega Omega)
    double lambda_c;  // sqrt(1 + gamma^2/omega^2)
    double f_tilde;   // z F / (hbar omega)
};

inline DerivedParams derived(const SystemParams& p) {
    if (!(p.omega > 0.0) || !(p.Omega > 0.0))
        throw invalid_spec("derived: omega and Omega must be > 0");
    const double go = p.gamma / p.omega;
    return DerivedParams{2.0 * p.g / std::sqrt(p.omega * p.Omega),
                         std::sqrt(1.0 + go * go),
                         p.z * p.F / (hbar * p.omega)};
}

// lambda_c^2 - lambda^2, positive in the stable regime
inline double stability_gap(const DerivedParams& d) {
    return d.lambda_c * d.lambda_c - d.lambda * d.lambda;
}

inline void require_stable(const DerivedParams& d) {
    if (!(stability_gap(d) > 0.0))
        throw instability_error("coupling lambda = " + std::to_string(d.lambda) +
                                " is at or beyond lambda_c = " + std::to_string(d.lambda_c) +
                                "; no stable steady state");
}

// ----------------------------- first moments ---------------------------------

inline double x_ss(const DerivedParams& d) {
    require_stable(d);
    return -d.f_tilde / stability_gap(d);
}

inline double p_ss(const DerivedParams& d, double gamma_over_omega) {
    require_stable(d);
    return -d.f_tilde * gamma_over_omega / stability_gap(d);
}

// ----------------------------- second moments --------------------------------

inline double var_x_ss(const DerivedParams& d) {
    require_stable(d);
    const double l2 = d.lambda * d.lambda, lc2 = d.lambda_c * d.lambda_c;
    return std::sqrt((2.0 * lc2 - l2) / (2.0 * stability_gap(d)));
}

inline double var_p_ss(const DerivedParams& d) {
    require_stable(d);
    const double l2 = d.lambda * d.lambda, lc2 = d.lambda_c * d.lambda_c;
    return std::sqrt((2.0 * lc2 - 3.0 * l2 + l2 * l2) / (2.0 * stability_gap(d)));
}

inline double sigma12_ss(const DerivedParams& d, double gamma_over_omega) {
    require_stable(d);
    return d.lambda * d.lambda * gamma_over_omega / (2.0 * stability_gap(d));
}

inline Eigen::Matrix2d covariance_ss(const DerivedParams& d, double gamma_over_omega) {
    Eigen::Matrix2d cov;
    const double vx = var_x_ss(d), vp = var_p_ss(d), s12 = sigma12_ss(d, gamma_over_omega);
    cov << vx * vx, s12, s12, vp * vp;
    return cov;
}

// ----------------------------- phonon statistics -----------------------------

inline double n_ss(const DerivedParams& d) {
    require_stable(d);
    const double D = stability_gap(d);
    const double l2 = d.lambda * d.lambda, lc2 = d.lambda_c * d.lambda_c;
    return d.f_tilde * d.f_tilde * lc2 / (4.0 * D * D) + l2 * l2 / (8.0 * D);
}

inline double var_n_ss(const DerivedParams& d) {
    require_stable(d);
    const double D = stability_gap(d);
    const double f2 = d.f_tilde * d.f_tilde;
    const double l2 = d.lambda * d.lambda;
    const double l4 = l2 * l2, l6 = l4 * l2;
    return f2 * l6 / (8.0 * D * D * D) +
           l2 / (32.0 * D * D) * (l6 + 4.0 * f2 * (l2 + 3.0)) +
           (3.0 * l4 + 4.0 * f2) / (16.0 * D);
}

// ----------------------------- purity / decomposition ------------------------

inline double purity_ss(const DerivedParams& d) {
    require_stable(d);
    const double D = stability_gap(d);
    const double l4 = std::pow(d.lambda, 4);
    return std::sqrt(4.0 * D / (4.0 * D + l4));
}

struct GaussianSteadyState {
    double mean_x = 0.0, mean_p = 0.0;
    Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
    double purity = 1.0;
    double thermal_n = 0.0;      // (1 - P) / (2 P)
    Complex disp_alpha = 0.0;    // displacement before the phase-space rotation
    double squeeze_r = 0.0;      // >= 0
    double squeeze_chi = 0.0;    // squeezing axis, zeta = r exp(2 i chi)
    double rot_delta = 0.0;      // phase-space rotation angle
};

// Decomposition rho = sum_n p_n W|n><n|W^dag with W = R(delta) D(alpha) S(zeta),
// S(zeta) = exp(zeta/2 a_dag^2 - conj(zeta)/2 a^2), zeta = r exp(2 i chi), and
// thermal weights p_n = N^n/(1+N)^(n+1).
//
// Branches: delta = atan(gamma/omega) in [0, pi/2); 2(chi+delta) is taken in
// the branch continuously connected to chi+delta = 0 at gamma = 0 (there the
// position quadrature is the stretched one, so chi = 0 with r > 0). The
// displacement is negative real: the force pushes <x> negative while
// tan(delta) = gamma/omega fixes the rotation, so the quoted magnitude
// f_tilde*lambda_c/(2(lc^2-l^2)) enters with a minus sign.
inline GaussianSteadyState gaussian_decomposition(const DerivedParams& d,
                                                  double gamma_over_omega) {
    require_stable(d);
    const double D = stability_gap(d);
    const double l2 = d.lambda * d.lambda;
    const double G = gamma_over_omega;

    GaussianSteadyState g;
    g.mean_x = x_ss(d);
    g.mean_p = p_ss(d, G);
    g.cov = covariance_ss(d, G);
    g.purity = purity_ss(d);
    g.thermal_n = (1.0 - g.purity) / (2.0 * g.purity);
    g.disp_alpha = Complex(-d.f_tilde * d.lambda_c / (2.0 * D), 0.0);
    g.rot_delta = std::atan(G);
    const double tanh2r = l2 / std::sqrt(4.0 * D + l2 * l2);
    g.squeeze_r = 0.5 * std::atanh(tanh2r);
    const double two_chi_plus_two_delta = std::atan2(2.0 * G, 2.0 - l2);
    g.squeeze_chi = 0.5 * two_chi_plus_two_delta - g.rot_delta;
    return g;
}

// Materializes the decomposition on a truncated Fock space (bosonic only).
// Thermal weights are summed until they are negligible.
inline Matrix reconstruct_state(const GaussianSteadyState& g, const HilbertSpec& spec,
                                double weight_cutoff = 1e-14) {
    const HilbertSpec bspec = HilbertSpec::bosonic(spec.fock_dim);
    const Complex zeta = std::polar(g.squeeze_r, 2.0 * g.squeeze_chi);
    const Matrix W = hilbert::rotation(g.rot_delta, bspec) *
                     hilbert::displacement(g.disp_alpha, bspec) *
                     hilbert::squeeze(zeta, bspec);
    const double N = g.thermal_n;
    Matrix rho = Matrix::Zero(bspec.fock_dim, bspec.fock_dim);
    for (int n = 0; n < bspec.fock_dim; ++n) {
        const double pn = std::pow(N / (1.0 + N), n) / (1.0 + N);
        if (pn < weight_cutoff) break;
        const Vector psi = W * hilbert::fock_state(bspec, n);
        rho.noalias() += pn * (psi * psi.adjoint());
    }
    return renormalize_trace(hermitize(rho));
}

// d<(x,p)>/dF, used by the covariance form of the Fisher information
inline Eigen::Vector2d mean_derivative(const SystemParams& p) {
    const auto d = derived(p);
    require_stable(d);
    const double slope = -(p.z / (hbar * p.omega)) / stability_gap(d);
    return Eigen::Vector2d(slope, slope * p.gamma / p.omega);
}

// d alpha/dF for the decomposition above (alpha is negative real)
inline double disp_alpha_slope(const SystemParams& p) {
    const auto d = derived(p);
    require_stable(d);
    return -(p.z / (hbar * p.omega)) * d.lambda_c / (2.0 * stability_gap(d));
}

// ----------------------------- effective Hamiltonian -------------------------

// Quadratic + linear bosonic Hamiltonian obtained after freezing the spin in
// its lower transverse eigenstate (joules).
inline Matrix effective_hamiltonian(const SystemParams& p, const HilbertSpec& spec) {
    spec.validate();
    p.validate();
    if (spec.include_spin)
        throw invalid_spec("effective_hamiltonian: bosonic-only space expected");
    const auto d = derived(p);
    const auto lad = hilbert::fock_ops(spec);
    const double l2 = d.lambda * d.lambda;
    const Matrix x = lad.a_dag + lad.a;
    return hbar * p.omega * (1.0 - 0.5 * l2) * lad.n -
           0.25 * hbar * p.omega * l2 *
               (lad.a_dag * lad.a_dag + lad.a * lad.a) +
           0.5 * p.z * p.F * x;
}

}  // namespace rabisense::analytics

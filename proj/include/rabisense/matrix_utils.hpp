// matrix_utils.hpp — Dense complex-matrix helpers: hermitization, fidelity, vec/unvec, norms

#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "rabisense/core.hpp"

namespace rabisense {

inline Matrix hermitize(const Matrix& A) { return 0.5 * (A + A.adjoint()); }

inline bool is_hermitian(const Matrix& A, double tol = 1e-12) {
    if (A.rows() != A.cols()) return false;
    const double scale = std::max(1.0, A.norm());
    return (A - A.adjoint()).norm() <= tol * scale;
}

inline Matrix renormalize_trace(const Matrix& A) {
    const Complex tr = A.trace();
    if (std::abs(tr) == 0.0)
        throw numerical_error("renormalize_trace: zero trace");
    return A / tr;
}

inline double min_eigenvalue(const Matrix& H) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(H), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw numerical_error("min_eigenvalue: eigensolve failed");
    return es.eigenvalues().minCoeff();
}

// Square root of a positive semidefinite Hermitian matrix; eigenvalues below
// clip are treated as zero (truncation/roundoff noise).
inline Matrix sqrt_psd(const Matrix& H, double clip = 1e-14) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(H));
    if (es.info() != Eigen::Success)
        throw numerical_error("sqrt_psd: eigensolve failed");
    Eigen::VectorXd d = es.eigenvalues();
    for (Eigen::Index i = 0; i < d.size(); ++i)
        d(i) = d(i) > clip ? std::sqrt(d(i)) : 0.0;
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

// Uhlmann fidelity F(rho,sigma) = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2
inline double fidelity(const Matrix& rho, const Matrix& sigma) {
    const Matrix sr = sqrt_psd(rho);
    const Matrix m  = sqrt_psd(sr * sigma * sr);
    const double t  = m.trace().real();
    return t * t;
}

// Trace distance (1/2) ||rho - sigma||_1 for Hermitian arguments
inline double trace_distance(const Matrix& rho, const Matrix& sigma) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(rho - sigma), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw numerical_error("trace_distance: eigensolve failed");
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

inline double purity_of(const Matrix& rho) { return (rho * rho).trace().real(); }

inline double expectation(const Matrix& A, const Matrix& rho) {
    return (A * rho).trace().real();
}

inline double expectation(const Matrix& A, const Vector& psi) {
    return (psi.adjoint() * A * psi)(0, 0).real();
}

// Column-major stacking; unvec is its inverse.
inline Vector vec(const Matrix& A) {
    return Eigen::Map<const Vector>(A.data(), A.size());
}

inline Matrix unvec(const Vector& v, Eigen::Index n) {
    if (v.size() != n * n)
        throw std::invalid_argument("unvec: size mismatch");
    return Eigen::Map<const Matrix>(v.data(), n, n);
}

inline Matrix commutator(const Matrix& A, const Matrix& B) { return A * B - B * A; }
inline Matrix anticommutator(const Matrix& A, const Matrix& B) { return A * B + B * A; }

}  // namespace rabisense

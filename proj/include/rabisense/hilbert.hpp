// hilbert.hpp — Operators and states on the truncated spin (x) boson space:
// ladder operators, Pauli matrices, Rabi Hamiltonians, displacement/squeeze/rotation unitaries.
//
// Operator ordering on the full space is fixed as spin (x) boson throughout.

#pragma once

#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include "rabisense/core.hpp"
#include "rabisense/matrix_utils.hpp"

namespace rabisense::hilbert {

struct HilbertSpec {
    int fock_dim     = 40;    // Fock truncation N_F
    bool include_spin = true; // full model vs bosonic-only effective model

    int dim() const { return include_spin ? 2 * fock_dim : fock_dim; }

    void validate() const {
        if (fock_dim < 2)
            throw invalid_spec("HilbertSpec: fock_dim must be >= 2");
    }

    static HilbertSpec bosonic(int n) { return HilbertSpec{n, false}; }
    static HilbertSpec full(int n) { return HilbertSpec{n, true}; }
};

// ----------------------------- elementary operators -------------------------

struct LadderOps {
    Matrix a;      // a|n> = sqrt(n)|n-1>
    Matrix a_dag;
    Matrix n;      // a_dag * a
};

inline LadderOps fock_ops(const HilbertSpec& spec) {
    spec.validate();
    const int N = spec.fock_dim;
    Matrix a = Matrix::Zero(N, N);
    for (int k = 1; k < N; ++k)
        a(k - 1, k) = std::sqrt(static_cast<double>(k));
    LadderOps ops;
    ops.a = a;
    ops.a_dag = a.adjoint();
    ops.n = ops.a_dag * ops.a;
    return ops;
}

struct PauliOps {
    Matrix sx, sy, sz;
};

// Basis order (|up>, |down>) with sigma_z|up> = +|up>; sigma_x|+-> = +-|+->.
inline PauliOps pauli() {
    PauliOps p;
    p.sx = Matrix(2, 2);
    p.sx << 0, 1, 1, 0;
    p.sy = Matrix(2, 2);
    p.sy << 0, -im, im, 0;
    p.sz = Matrix(2, 2);
    p.sz << 1, 0, 0, -1;
    return p;
}

inline Matrix identity(int n) { return Matrix::Identity(n, n); }

// Kronecker product, spin factor first.
inline Matrix tensor(const Matrix& A, const Matrix& B) {
    return Eigen::kroneckerProduct(A, B).eval();
}

// ----------------------------- states ---------------------------------------

inline Vector fock_state(const HilbertSpec& spec, int n) {
    spec.validate();
    if (n < 0 || n >= spec.fock_dim)
        throw invalid_spec("fock_state: level outside truncation");
    Vector v = Vector::Zero(spec.fock_dim);
    v(n) = 1.0;
    return v;
}

inline Vector spin_up() { Vector v(2); v << 1, 0; return v; }
inline Vector spin_down() { Vector v(2); v << 0, 1; return v; }
inline Vector spin_plus() { Vector v(2); v << 1, 1; return v / std::sqrt(2.0); }
inline Vector spin_minus() { Vector v(2); v << 1, -1; return v / std::sqrt(2.0); }

inline Vector tensor_state(const Vector& spin, const Vector& boson) {
    Vector out(spin.size() * boson.size());
    for (Eigen::Index s = 0; s < spin.size(); ++s)
        out.segment(s * boson.size(), boson.size()) = spin(s) * boson;
    return out;
}

// ----------------------------- Hamiltonians ----------------------------------
//
// SI energy units (joules).

inline Matrix rabi_hamiltonian(const SystemParams& p, const HilbertSpec& spec) {
    spec.validate();
    p.validate();
    if (!spec.include_spin)
        throw invalid_spec("rabi_hamiltonian: needs a spin (x) boson space");
    const auto lad = fock_ops(spec);
    const auto pa = pauli();
    const Matrix x = lad.a_dag + lad.a;
    const Matrix I2 = identity(2);
    const Matrix Ib = identity(spec.fock_dim);
    return hbar * p.omega * tensor(I2, lad.n)
         + 0.5 * hbar * p.Omega * tensor(pa.sx, Ib)
         + hbar * p.g * tensor(pa.sz, x)
         + 0.5 * p.z * p.F * tensor(I2, x);
}

inline Matrix squeezed_rabi_hamiltonian(const SystemParams& p, double xi, double phi,
                                        const HilbertSpec& spec) {
    const auto lad = fock_ops(spec);
    const Matrix sq = lad.a_dag * lad.a_dag * std::polar(1.0, phi)
                    + lad.a * lad.a * std::polar(1.0, -phi);
    return rabi_hamiltonian(p, spec) + hbar * xi * tensor(identity(2), sq);
}

// ----------------------------- unitaries -------------------------------------

namespace detail {

// exp(G) for anti-Hermitian G via eigendecomposition of the Hermitian iG
inline Matrix exp_antihermitian(const Matrix& G) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(im * G);
    if (es.info() != Eigen::Success)
        throw numerical_error("exp_antihermitian: eigensolve failed");
    Vector phases(es.eigenvalues().size());
    for (Eigen::Index i = 0; i < phases.size(); ++i)
        phases(i) = std::polar(1.0, -es.eigenvalues()(i));
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

// Population of the boson state beyond level `edge`, used to confirm the
// truncation can hold states built by displacement/squeeze.
inline double tail_beyond(const Vector& boson_state, int edge) {
    double tail = 0.0;
    for (Eigen::Index k = edge; k < boson_state.size(); ++k)
        tail += std::norm(boson_state(k));
    return tail;
}

inline Matrix lift_to_spec(const Matrix& bosonic, const HilbertSpec& spec) {
    return spec.include_spin ? tensor(identity(2), bosonic) : bosonic;
}

inline void check_tail_or_throw(const Matrix& bosonic_unitary, const HilbertSpec& spec,
                                double occupancy_scale, const char* what) {
    const int N = spec.fock_dim;
    Vector vac = Vector::Zero(N);
    vac(0) = 1.0;
    const Vector state = bosonic_unitary * vac;
    const double tail = tail_beyond(state, std::max(0, N - 5));
    if (tail > 1e-8) {
        const int suggested = static_cast<int>(
            std::ceil(2.0 * occupancy_scale + 10.0 * std::sqrt(occupancy_scale + 1.0) + 10.0));
        throw truncation_error(std::string(what) +
                                   ": truncation tail " + std::to_string(tail) +
                                   " exceeds 1e-8; increase fock_dim to ~" +
                                   std::to_string(suggested),
                               suggested);
    }
}

}  // namespace detail

// D(alpha) = exp(alpha a_dag - conj(alpha) a)
inline Matrix displacement(Complex alpha, const HilbertSpec& spec) {
    spec.validate();
    const auto lad = fock_ops(HilbertSpec::bosonic(spec.fock_dim));
    const Matrix G = alpha * lad.a_dag - std::conj(alpha) * lad.a;
    const Matrix D = detail::exp_antihermitian(G);
    detail::check_tail_or_throw(D, spec, std::norm(alpha), "displacement");
    return detail::lift_to_spec(D, spec);
}

// S(zeta) = exp(zeta/2 a_dag^2 - conj(zeta)/2 a^2)
inline Matrix squeeze(Complex zeta, const HilbertSpec& spec) {
    spec.validate();
    const auto lad = fock_ops(HilbertSpec::bosonic(spec.fock_dim));
    const Matrix G = 0.5 * zeta * lad.a_dag * lad.a_dag
                   - 0.5 * std::conj(zeta) * lad.a * lad.a;
    const Matrix S = detail::exp_antihermitian(G);
    const double r = std::abs(zeta);
    detail::check_tail_or_throw(S, spec, std::sinh(r) * std::sinh(r), "squeeze");
    return detail::lift_to_spec(S, spec);
}

// R(delta) = exp(i delta a_dag a)
inline Matrix rotation(double delta, const HilbertSpec& spec) {
    spec.validate();
    const int N = spec.fock_dim;
    Matrix R = Matrix::Zero(N, N);
    for (int k = 0; k < N; ++k)
        R(k, k) = std::polar(1.0, delta * k);
    return detail::lift_to_spec(R, spec);
}

// Bosonic parity exp(i pi a_dag a); with the spin flip sigma_x this generates
// the discrete symmetry of the force-free Rabi model.
inline Matrix boson_parity(const HilbertSpec& spec) { return rotation(pi, spec); }

}  // namespace rabisense::hilbert

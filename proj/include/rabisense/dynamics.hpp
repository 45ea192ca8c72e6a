// dynamics.hpp — Lindblad master-equation integration, steady-state detection,
// and a direct steady-state solver on the vectorized Liouvillian.
//
// The dissipator convention is gamma*(2 J rho J^dag - {J^dag J, rho}), so a
// coherent amplitude decays at rate gamma and the occupation at 2*gamma.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <Eigen/SparseCore>

#include "rabisense/core.hpp"
#include "rabisense/hilbert.hpp"
#include "rabisense/matrix_utils.hpp"
#include "rabisense/ode.hpp"

namespace rabisense::dynamics {

using hilbert::HilbertSpec;

// ----------------------------- configuration --------------------------------

struct EvolveConfig {
    double t_final        = 0.0;
    double rel_tol        = 1e-8;
    double abs_tol        = 1e-10;
    double max_step       = std::numeric_limits<double>::infinity();
    double record_every   = 0.0;   // 0 -> record only endpoints
    double tail_threshold = 1e-6;  // flag runs whose top Fock levels populate

    void validate() const {
        if (!(t_final > 0.0)) throw invalid_spec("EvolveConfig: t_final must be > 0");
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
            throw invalid_spec("EvolveConfig: tolerances must be > 0");
        if (record_every > t_final)
            throw invalid_spec("EvolveConfig: record_every must be <= t_final");
    }
};

struct SweepResult {
    std::vector<double> times;
    std::vector<std::string> labels;
    std::vector<std::vector<double>> series;  // series[k][i] pairs with times[i]
    Matrix final_state;                       // density matrix
    Vector final_psi;                         // set by pure-state runs
    bool truncation_unsafe = false;
    double max_tail   = 0.0;
    double norm_drift = 0.0;                  // pure-state runs only
    long steps_accepted = 0;
    long steps_rejected = 0;

    const std::vector<double>& series_for(const std::string& label) const {
        for (std::size_t k = 0; k < labels.size(); ++k)
            if (labels[k] == label) return series[k];
        throw std::invalid_argument("SweepResult: no series labelled '" + label + "'");
    }
};

// H(t) = H0 + coeff(t) * H1; H1 empty means time-independent.
struct Hamiltonian {
    Matrix H0;
    Matrix H1;
    std::function<double(double)> coeff;

    bool constant() const { return H1.size() == 0; }
    Eigen::Index dim() const { return H0.rows(); }
    Matrix at(double t) const {
        return constant() ? H0 : Matrix(H0 + coeff(t) * H1);
    }

    static Hamiltonian fixed(Matrix h0) { return Hamiltonian{std::move(h0), Matrix(), nullptr}; }
    static Hamiltonian driven(Matrix h0, Matrix h1, std::function<double(double)> c) {
        return Hamiltonian{std::move(h0), std::move(h1), std::move(c)};
    }
};

inline Matrix default_jump(const HilbertSpec& spec) {
    const auto lad = hilbert::fock_ops(HilbertSpec::bosonic(spec.fock_dim));
    return spec.include_spin ? hilbert::tensor(hilbert::identity(2), lad.a) : lad.a;
}

// Population of the top `levels` Fock levels (summed over spin).
inline double tail_population(const Matrix& rho, const HilbertSpec& spec, int levels = 3) {
    const int N = spec.fock_dim;
    const int spins = spec.include_spin ? 2 : 1;
    double tail = 0.0;
    for (int s = 0; s < spins; ++s)
        for (int n = std::max(0, N - levels); n < N; ++n)
            tail += rho(s * N + n, s * N + n).real();
    return tail;
}

inline double tail_population(const Vector& psi, const HilbertSpec& spec, int levels = 3) {
    const int N = spec.fock_dim;
    const int spins = spec.include_spin ? 2 : 1;
    double tail = 0.0;
    for (int s = 0; s < spins; ++s)
        for (int n = std::max(0, N - levels); n < N; ++n)
            tail += std::norm(psi(s * N + n));
    return tail;
}

// ----------------------------- right-hand sides ------------------------------

// Reference Lindblad derivative; Hermitian and traceless for Hermitian input.
inline Matrix lindblad_rhs(const Matrix& rho, const Matrix& H, double gamma,
                           const Matrix& jump) {
    if (rho.rows() != rho.cols() || H.rows() != rho.rows() || jump.rows() != rho.rows())
        throw invalid_spec("lindblad_rhs: dimension mismatch");
    Matrix out = (-im / hbar) * (H * rho - rho * H);
    if (gamma != 0.0) {
        const Matrix K = jump.adjoint() * jump;
        out += gamma * (2.0 * jump * rho * jump.adjoint() - K * rho - rho * K);
    }
    return out;
}

namespace detail {

// Applies a fixed operator from the left or right, through a sparse view when
// the matrix is sparse enough to make that profitable.
struct Applier {
    Matrix dense;
    Eigen::SparseMatrix<Complex> sp;
    bool use_sparse = false;
    bool empty = true;

    static Applier make(const Matrix& A) {
        Applier ap;
        if (A.size() == 0) return ap;
        ap.empty = false;
        Eigen::Index nnz = 0;
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            for (Eigen::Index i = 0; i < A.rows(); ++i)
                if (A(i, j) != Complex(0.0, 0.0)) ++nnz;
        ap.use_sparse = nnz * 4 < A.size();
        if (ap.use_sparse) {
            ap.sp = A.sparseView();
            ap.sp.makeCompressed();
        } else {
            ap.dense = A;
        }
        return ap;
    }

    template <class In, class Out>
    void mul_into(const In& X, Out& out) const {  // out = A * X
        if (use_sparse) out.noalias() = sp * X;
        else out.noalias() = dense * X;
    }

    template <class In, class Out>
    void addmul_into(const In& X, double c, Out& out) const {  // out += c * (A * X)
        if (use_sparse) out.noalias() += c * (sp * X);
        else out.noalias() += c * (dense * X);
    }

    template <class In, class Out>
    void rmul_into(const In& X, Out& out) const {  // out = X * A
        if (use_sparse) out.noalias() = X * sp;
        else out.noalias() = X * dense;
    }
};

class MasterRhs {
public:
    MasterRhs(const Hamiltonian& H, double gamma, const Matrix& jump)
        : h0_(Applier::make(H.H0)),
          h1_(Applier::make(H.H1)),
          coeff_(H.coeff),
          gamma_(gamma),
          j_(Applier::make(jump)),
          jdag_(Applier::make(jump.adjoint())) {}

    void operator()(double t, const Matrix& rho, Matrix& out) {
        // Uses hermiticity of rho: rho*H = (H*rho)^dag etc., halving the products.
        h0_.mul_into(rho, w1_);
        if (!h1_.empty) h1_.addmul_into(rho, coeff_(t), w1_);
        out = w1_;
        out -= w1_.adjoint();
        out *= Complex(0.0, -1.0 / hbar);
        if (gamma_ != 0.0) {
            j_.mul_into(rho, w2_);
            jdag_.rmul_into(w2_, w3_);     // w3 = J rho J^dag
            jdag_.mul_into(w2_, w4_);      // w4 = J^dag J rho
            out.noalias() += (2.0 * gamma_) * w3_;
            out -= gamma_ * w4_;
            out -= gamma_ * w4_.adjoint();
        }
    }

private:
    Applier h0_, h1_;
    std::function<double(double)> coeff_;
    double gamma_;
    Applier j_, jdag_;
    Matrix w1_, w2_, w3_, w4_;
};

class SchrodingerRhs {
public:
    explicit SchrodingerRhs(const Hamiltonian& H)
        : h0_(Applier::make(H.H0)), h1_(Applier::make(H.H1)), coeff_(H.coeff) {}

    void operator()(double t, const Vector& psi, Vector& out) {
        h0_.mul_into(psi, w_);
        if (!h1_.empty) h1_.addmul_into(psi, coeff_(t), w_);
        out = Complex(0.0, -1.0 / hbar) * w_;
    }

private:
    Applier h0_, h1_;
    std::function<double(double)> coeff_;
    Vector w_;
};

inline std::vector<double> record_times(const EvolveConfig& cfg) {
    std::vector<double> ts;
    if (cfg.record_every > 0.0) {
        for (double t = 0.0; t < cfg.t_final - 0.5 * cfg.record_every; t += cfg.record_every)
            ts.push_back(t);
    } else {
        ts.push_back(0.0);
    }
    ts.push_back(cfg.t_final);
    return ts;
}

}  // namespace detail

// ----------------------------- time evolution --------------------------------

using RecordHook = std::function<void(double, const Matrix&)>;

inline SweepResult evolve(const Matrix& rho0, const Hamiltonian& H, double gamma,
                          const Matrix& jump, const HilbertSpec& spec,
                          const EvolveConfig& cfg, const std::vector<Matrix>& observables,
                          const std::vector<std::string>& labels,
                          const RecordHook& on_record = nullptr) {
    cfg.validate();
    if (rho0.rows() != rho0.cols() || rho0.rows() != H.dim())
        throw invalid_spec("evolve: state/Hamiltonian dimension mismatch");
    if (observables.size() != labels.size())
        throw invalid_spec("evolve: one label per observable required");
    if (std::abs(rho0.trace().real() - 1.0) > 1e-6 || !is_hermitian(rho0, 1e-8))
        throw invalid_spec("evolve: rho0 is not a unit-trace Hermitian matrix");

    detail::MasterRhs rhs(H, gamma, jump);
    ode::StepOptions opts;
    opts.rel_tol = cfg.rel_tol;
    opts.abs_tol = cfg.abs_tol;
    opts.max_step = cfg.max_step;
    ode::Dopri5<Matrix> stepper([&rhs](double t, const Matrix& y, Matrix& dy) { rhs(t, y, dy); },
                                opts);
    stepper.init(0.0, rho0);

    SweepResult res;
    res.labels = labels;
    res.series.resize(labels.size());

    auto record = [&](double t, const Matrix& rho) {
        res.times.push_back(t);
        for (std::size_t k = 0; k < observables.size(); ++k)
            res.series[k].push_back(expectation(observables[k], rho));
        const double tail = tail_population(rho, spec);
        res.max_tail = std::max(res.max_tail, tail);
        if (tail > cfg.tail_threshold) res.truncation_unsafe = true;
        if (on_record) on_record(t, rho);
    };

    // Hermitize and renormalize after every accepted step; drift is roundoff
    // scale but this removes it before it can accumulate.
    auto post = [](Matrix& y) {
        y = 0.5 * (y + y.adjoint().eval());
        y /= y.trace().real();
    };

    const auto ts = detail::record_times(cfg);
    record(0.0, stepper.state());
    for (std::size_t i = 1; i < ts.size(); ++i) {
        stepper.advance_to(ts[i], post);
        record(ts[i], stepper.state());
    }
    res.final_state = stepper.state();
    res.steps_accepted = stepper.stats().accepted;
    res.steps_rejected = stepper.stats().rejected;
    return res;
}

inline SweepResult evolve(const Matrix& rho0, const Hamiltonian& H, double gamma,
                          const HilbertSpec& spec, const EvolveConfig& cfg,
                          const std::vector<Matrix>& observables,
                          const std::vector<std::string>& labels,
                          const RecordHook& on_record = nullptr) {
    return evolve(rho0, H, gamma, default_jump(spec), spec, cfg, observables, labels,
                  on_record);
}

// Pure-state fast path for gamma = 0. The norm is not re-imposed; its drift is
// reported so callers can verify conservation.
inline SweepResult schrodinger_evolve(const Vector& psi0, const Hamiltonian& H,
                                      const HilbertSpec& spec, const EvolveConfig& cfg,
                                      const std::vector<Matrix>& observables,
                                      const std::vector<std::string>& labels,
                                      std::function<double(double)> max_step_fn = nullptr) {
    cfg.validate();
    if (psi0.size() != H.dim())
        throw invalid_spec("schrodinger_evolve: state/Hamiltonian dimension mismatch");
    if (observables.size() != labels.size())
        throw invalid_spec("schrodinger_evolve: one label per observable required");

    detail::SchrodingerRhs rhs(H);
    ode::StepOptions opts;
    opts.rel_tol = cfg.rel_tol;
    opts.abs_tol = cfg.abs_tol;
    opts.max_step = cfg.max_step;
    opts.max_step_fn = std::move(max_step_fn);
    ode::Dopri5<Vector> stepper([&rhs](double t, const Vector& y, Vector& dy) { rhs(t, y, dy); },
                                opts);
    stepper.init(0.0, psi0);

    SweepResult res;
    res.labels = labels;
    res.series.resize(labels.size());
    const double norm0 = psi0.norm();

    auto record = [&](double t, const Vector& psi) {
        res.times.push_back(t);
        for (std::size_t k = 0; k < observables.size(); ++k)
            res.series[k].push_back(expectation(observables[k], psi));
        const double tail = tail_population(psi, spec);
        res.max_tail = std::max(res.max_tail, tail);
        if (tail > cfg.tail_threshold) res.truncation_unsafe = true;
        res.norm_drift = std::max(res.norm_drift, std::abs(psi.norm() - norm0));
    };

    const auto ts = detail::record_times(cfg);
    record(0.0, stepper.state());
    for (std::size_t i = 1; i < ts.size(); ++i) {
        stepper.advance_to(ts[i]);
        record(ts[i], stepper.state());
    }
    res.final_psi = stepper.state();
    res.final_state = stepper.state() * stepper.state().adjoint();
    res.steps_accepted = stepper.stats().accepted;
    res.steps_rejected = stepper.stats().rejected;
    return res;
}

// ----------------------------- steady states ---------------------------------

struct SteadyStateOptions {
    double eps_ss  = 1e-6;  // residual threshold in units of gamma
    double t_max   = 0.0;   // 0 -> 40/gamma
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double tail_threshold = 1e-6;
};

struct SteadyStateResult {
    Matrix rho;
    bool converged = false;
    double residual_over_gamma = 0.0;  // ||d rho/dt||_F / gamma at exit
    double t_elapsed = 0.0;
    bool truncation_unsafe = false;
};

inline SteadyStateResult steady_state_evolve(const Matrix& rho0, const Matrix& H, double gamma,
                                             const HilbertSpec& spec,
                                             const SteadyStateOptions& opt = {}) {
    if (!(gamma > 0.0))
        throw invalid_spec("steady_state_evolve: gamma must be > 0");
    const double t_max = opt.t_max > 0.0 ? opt.t_max : 40.0 / gamma;

    detail::MasterRhs rhs(Hamiltonian::fixed(H), gamma, default_jump(spec));
    ode::StepOptions opts;
    opts.rel_tol = opt.rel_tol;
    opts.abs_tol = opt.abs_tol;
    ode::Dopri5<Matrix> stepper([&rhs](double t, const Matrix& y, Matrix& dy) { rhs(t, y, dy); },
                                opts);
    stepper.init(0.0, rho0);
    auto post = [](Matrix& y) {
        y = 0.5 * (y + y.adjoint().eval());
        y /= y.trace().real();
    };

    SteadyStateResult res;
    Matrix deriv;
    const double dt_check = std::min(0.5 / gamma, t_max / 200.0);
    double t = 0.0;
    while (t < t_max) {
        t = std::min(t + dt_check, t_max);
        stepper.advance_to(t, post);
        rhs(t, stepper.state(), deriv);
        res.residual_over_gamma = deriv.norm() / gamma;
        res.truncation_unsafe =
            res.truncation_unsafe ||
            tail_population(stepper.state(), spec) > opt.tail_threshold;
        if (res.residual_over_gamma < opt.eps_ss) {
            res.converged = true;
            break;
        }
    }
    res.rho = stepper.state();
    res.t_elapsed = stepper.time();
    return res;
}

inline SteadyStateResult steady_state_evolve(const Matrix& H, double gamma,
                                             const HilbertSpec& spec,
                                             const SteadyStateOptions& opt = {}) {
    // Vacuum (spin in the lower sigma_x eigenstate for the full model); the
    // steady state itself does not depend on this choice.
    Matrix rho0;
    if (spec.include_spin) {
        const Vector psi0 =
            hilbert::tensor_state(hilbert::spin_minus(), hilbert::fock_state(spec, 0));
        rho0 = psi0 * psi0.adjoint();
    } else {
        const Vector psi0 = hilbert::fock_state(spec, 0);
        rho0 = psi0 * psi0.adjoint();
    }
    return steady_state_evolve(rho0, H, gamma, spec, opt);
}

class degenerate_steady_state : public numerical_error {
public:
    degenerate_steady_state(const std::string& msg, int multiplicity)
        : numerical_error(msg), multiplicity(multiplicity) {}
    int multiplicity;
};

// Superoperator of the master equation in column-stacking convention,
// vec(A X B) = (B^T kron A) vec(X).
inline Matrix build_liouvillian(const Matrix& H, double gamma, const Matrix& jump) {
    const Eigen::Index n = H.rows();
    const Matrix I = Matrix::Identity(n, n);
    Matrix L = (-im / hbar) *
               (hilbert::tensor(I, H) - hilbert::tensor(H.transpose(), I));
    if (gamma != 0.0) {
        const Matrix K = jump.adjoint() * jump;
        L += gamma * (2.0 * hilbert::tensor(jump.conjugate(), jump) -
                      hilbert::tensor(I, K) - hilbert::tensor(K.transpose(), I));
    }
    return L;
}

namespace detail {

// Null vector of L through a trace-constrained linear solve: the row of L
// belonging to the (0,0) matrix element is replaced by the trace functional
// (the diagonal rows are linearly dependent through trace preservation, so no
// information is lost). A degenerate kernel cannot be seen from the solution
// residual -- any kernel combination with unit trace solves the system -- so
// singularity of the constrained matrix is probed with a generic right-hand
// side, and an SVD settles the kernel dimension when the probe blows up.
inline Vector liouvillian_null_vector(const Matrix& L, Eigen::Index dim, double* rel_residual,
                                      int* multiplicity) {
    const Eigen::Index n2 = L.rows();
    const double scale = L.cwiseAbs().maxCoeff();
    if (scale == 0.0) throw numerical_error("steady_state_direct: zero Liouvillian");

    Matrix A = L / scale;
    A.row(0).setZero();
    for (Eigen::Index k = 0; k < dim; ++k) A(0, k * (dim + 1)) = 1.0;
    Vector b = Vector::Zero(n2);
    b(0) = 1.0;
    Eigen::PartialPivLU<Matrix> lu(A);
    Vector v = lu.solve(b);
    v -= lu.solve(Vector(A * v - b));  // one round of iterative refinement
    const double resid = (L * v).norm() / (scale * v.norm());

    std::mt19937 rng(0x5eed);
    std::normal_distribution<double> dist;
    Vector probe(n2);
    for (Eigen::Index i = 0; i < n2; ++i) probe(i) = Complex(dist(rng), dist(rng));
    probe /= probe.norm();
    const double blowup = lu.solve(probe).norm();

    if (resid < 1e-10 && blowup < 1e12) {
        if (rel_residual) *rel_residual = resid;
        if (multiplicity) *multiplicity = 1;
        return v;
    }

    // SVD fallback: exact null-space diagnosis.
    if (n2 > 2704)
        throw numerical_error(
            "steady_state_direct: ill-conditioned null space and dimension too large "
            "for the SVD fallback");
    Eigen::BDCSVD<Matrix> svd(L / scale, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    int mult = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) < 1e-10 * sv(0)) ++mult;
    if (mult > 1)
        throw degenerate_steady_state(
            "steady_state_direct: Liouvillian null space has dimension " +
                std::to_string(mult),
            mult);
    Vector vs = svd.matrixV().col(n2 - 1);
    if (rel_residual) *rel_residual = (L * vs).norm() / (scale * vs.norm());
    if (multiplicity) *multiplicity = std::max(mult, 1);
    return vs;
}

}  // namespace detail

inline Matrix steady_state_direct(const Matrix& H, double gamma, const Matrix& jump,
                                  double* rel_residual = nullptr) {
    const Eigen::Index dim = H.rows();
    if (dim > 64)
        throw invalid_spec("steady_state_direct: dimension " + std::to_string(dim) +
                           " exceeds the dense superoperator limit of 64");
    const Matrix L = build_liouvillian(H, gamma, jump);
    double resid = 0.0;
    Vector v = detail::liouvillian_null_vector(L, dim, &resid, nullptr);
    if (rel_residual) *rel_residual = resid;
    if (resid > 1e-10)
        throw numerical_error("steady_state_direct: residual " + std::to_string(resid) +
                              " exceeds 1e-10");
    return renormalize_trace(hermitize(unvec(v, dim)));
}

inline Matrix steady_state_direct(const Matrix& H, double gamma, const HilbertSpec& spec,
                                  double* rel_residual = nullptr) {
    return steady_state_direct(H, gamma, default_jump(spec), rel_residual);
}

}  // namespace rabisense::dynamics

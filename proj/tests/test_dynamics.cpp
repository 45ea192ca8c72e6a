// Master-equation machinery: Lindblad derivative identities, trajectory
// invariants (trace/hermiticity/positivity/linearity), decay oracles, and
// agreement between the evolution-based and direct steady-state solvers.

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "rabisense/analytics.hpp"
#include "rabisense/dynamics.hpp"
#include "rabisense/hilbert.hpp"
#include "rabisense/matrix_utils.hpp"

using namespace rabisense;
using namespace rabisense::hilbert;
using namespace rabisense::dynamics;

namespace {

SystemParams fig1_params() {
    SystemParams p;
    p.omega = khz_to_radps(0.3);
    p.Omega = khz_to_radps(320.0);
    p.g     = khz_to_radps(4.0);
    p.gamma = khz_to_radps(0.08);
    p.z     = 14e-9;
    p.F     = 5e-24;
    return p;
}

Matrix random_density(int n, std::mt19937& rng) {
    std::normal_distribution<double> dist;
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = Complex(dist(rng), dist(rng));
    Matrix rho = a * a.adjoint();
    return rho / rho.trace();
}

Matrix random_hermitian(int n, std::mt19937& rng) {
    std::normal_distribution<double> dist;
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = Complex(dist(rng), dist(rng));
    return hermitize(a);
}

Matrix vacuum_projector(const HilbertSpec& spec) {
    const Vector v = spec.include_spin
                         ? tensor_state(spin_minus(), fock_state(spec, 0))
                         : Vector(fock_state(spec, 0));
    return v * v.adjoint();
}

}  // namespace

TEST_CASE("lindblad derivative identities") {
    const HilbertSpec spec = HilbertSpec::bosonic(8);
    const auto lad = fock_ops(spec);
    const double gamma = 2.0;

    SECTION("commuting diagonal pieces give zero derivative") {
        Matrix rho = Matrix::Zero(8, 8);
        rho(0, 0) = 0.25;
        rho(1, 1) = 0.75;
        const Matrix H = hbar * 5.0 * lad.n;
        CHECK(lindblad_rhs(rho, H, 0.0, lad.a).norm() < 1e-20);
    }

    SECTION("occupation of |1><1| decays at 2 gamma") {
        Matrix rho = Matrix::Zero(8, 8);
        rho(1, 1) = 1.0;
        const Matrix H = Matrix::Zero(8, 8);
        const Matrix d = lindblad_rhs(rho, H, gamma, lad.a);
        CHECK(expectation(lad.n, d) == Catch::Approx(-2.0 * gamma).epsilon(1e-12));
    }

    SECTION("trace-free and hermitian on random hermitian inputs") {
        std::mt19937 rng(7);
        const Matrix H = hbar * random_hermitian(8, rng);
        for (int rep = 0; rep < 100; ++rep) {
            const Matrix rho = random_hermitian(8, rng);
            const Matrix d = lindblad_rhs(rho, H, gamma, lad.a);
            CHECK(std::abs(d.trace()) < 1e-12 * d.norm());
            CHECK((d - d.adjoint()).norm() < 1e-12 * d.norm());
        }
    }

    SECTION("dimension mismatch is rejected") {
        CHECK_THROWS_AS(lindblad_rhs(Matrix::Identity(4, 4), Matrix::Identity(8, 8), gamma,
                                     lad.a),
                        invalid_spec);
    }
}

TEST_CASE("free evolution keeps the occupation constant") {
    const HilbertSpec spec = HilbertSpec::bosonic(8);
    const auto lad = fock_ops(spec);
    Matrix rho0 = Matrix::Zero(8, 8);
    rho0(1, 1) = 1.0;
    EvolveConfig cfg;
    cfg.t_final = 2.0e-3;
    cfg.record_every = 2.0e-4;
    const auto res = evolve(rho0, Hamiltonian::fixed(hbar * khz_to_radps(0.3) * lad.n), 0.0,
                            spec, cfg, {lad.n}, {"n"});
    for (double v : res.series_for("n")) CHECK(std::abs(v - 1.0) < 1e-6);
}

TEST_CASE("pure decay of a coherent state follows the closed form") {
    const HilbertSpec spec = HilbertSpec::bosonic(20);
    const auto lad = fock_ops(spec);
    const double gamma = khz_to_radps(0.08);
    const Vector coh = displacement(1.0, spec) * fock_state(spec, 0);
    const Matrix rho0 = coh * coh.adjoint();

    EvolveConfig cfg;
    cfg.t_final = 2.0 / gamma;
    cfg.record_every = cfg.t_final / 10.0;
    const auto res =
        evolve(rho0, Hamiltonian::fixed(Matrix::Zero(20, 20)), gamma, spec, cfg, {lad.n}, {"n"});
    for (std::size_t i = 0; i < res.times.size(); ++i) {
        const double expected = std::exp(-2.0 * gamma * res.times[i]);
        CHECK(res.series_for("n")[i] == Catch::Approx(expected).margin(1e-7));
    }
}

TEST_CASE("trajectories preserve trace, hermiticity, positivity") {
    const HilbertSpec spec = HilbertSpec::full(10);
    SystemParams p = fig1_params();
    p.Omega = khz_to_radps(10.0);  // keep the run cheap; structure unchanged
    const Matrix H = rabi_hamiltonian(p, spec);

    EvolveConfig cfg;
    cfg.t_final = 2.0 / p.gamma;
    cfg.record_every = cfg.t_final / 20.0;
    double worst_trace = 0.0, worst_herm = 0.0, worst_eig = 0.0;
    const auto res = evolve(vacuum_projector(spec), Hamiltonian::fixed(H), p.gamma, spec, cfg,
                            {}, {}, [&](double, const Matrix& rho) {
                                worst_trace = std::max(worst_trace,
                                                       std::abs(rho.trace().real() - 1.0));
                                worst_herm = std::max(worst_herm, (rho - rho.adjoint()).norm());
                                worst_eig = std::min(worst_eig, min_eigenvalue(rho));
                            });
    CHECK(res.times.size() == 21);
    CHECK(worst_trace < 1e-6);
    CHECK(worst_herm < 1e-8);
    CHECK(worst_eig > -1e-6);
}

TEST_CASE("evolution is linear in the initial state") {
    const HilbertSpec spec = HilbertSpec::bosonic(6);
    std::mt19937 rng(11);
    const Matrix rho1 = random_density(6, rng);
    const Matrix rho2 = random_density(6, rng);
    const double alpha = 0.3;
    const Matrix H = hbar * khz_to_radps(1.0) * random_hermitian(6, rng);
    const double gamma = khz_to_radps(0.2);

    EvolveConfig cfg;
    cfg.t_final = 1.0e-3;
    auto run = [&](const Matrix& rho0) {
        return evolve(rho0, Hamiltonian::fixed(H), gamma, spec, cfg, {}, {}).final_state;
    };
    const Matrix combo = run(alpha * rho1 + (1.0 - alpha) * rho2);
    const Matrix split = alpha * run(rho1) + (1.0 - alpha) * run(rho2);
    CHECK((combo - split).norm() < 1e-6);
}

TEST_CASE("decoupled spin relaxes to the transverse ground state and vacuum") {
    const HilbertSpec spec = HilbertSpec::full(6);
    SystemParams p = fig1_params();
    p.g = 0.0;
    p.F = 0.0;
    const auto res = steady_state_evolve(rabi_hamiltonian(p, spec), p.gamma, spec);
    REQUIRE(res.converged);
    CHECK(trace_distance(res.rho, vacuum_projector(spec)) < 1e-6);
}

TEST_CASE("steady-state evolution reports non-convergence with the residual") {
    const HilbertSpec spec = HilbertSpec::full(6);
    const SystemParams p = fig1_params();
    SteadyStateOptions opt;
    opt.t_max = 1e-5;  // far too short to relax
    const auto res = steady_state_evolve(rabi_hamiltonian(p, spec), p.gamma, spec, opt);
    CHECK_FALSE(res.converged);
    CHECK(res.residual_over_gamma > 0.0);
}

TEST_CASE("direct solver: pure decay lands in the vacuum") {
    const HilbertSpec spec = HilbertSpec::bosonic(6);
    double resid = 0.0;
    const Matrix rho = steady_state_direct(Matrix::Zero(6, 6), 3.0, spec, &resid);
    CHECK(resid < 1e-10);
    CHECK(trace_distance(rho, vacuum_projector(spec)) < 1e-10);
}

TEST_CASE("direct solver flags a degenerate null space") {
    // No transverse field and no force: each spin sector keeps its own steady
    // state, so the Liouvillian kernel is two-dimensional.
    const HilbertSpec spec = HilbertSpec::full(8);
    SystemParams p = fig1_params();
    p.Omega = 0.0;
    p.F = 0.0;
    p.g = khz_to_radps(0.02);
    const Matrix H = rabi_hamiltonian(p, spec);
    try {
        (void)steady_state_direct(H, p.gamma, spec);
        FAIL("expected degenerate_steady_state");
    } catch (const degenerate_steady_state& e) {
        CHECK(e.multiplicity >= 2);
    }
}

TEST_CASE("direct solver rejects dimensions beyond the dense superoperator") {
    const HilbertSpec spec = HilbertSpec::bosonic(80);
    CHECK_THROWS_AS(steady_state_direct(Matrix::Zero(80, 80), 1.0, spec), invalid_spec);
}

TEST_CASE("evolution and direct solver agree on the steady state") {
    SECTION("effective bosonic model") {
        SystemParams p = fig1_params();
        const HilbertSpec spec = HilbertSpec::bosonic(16);
        const Matrix H = analytics::effective_hamiltonian(p, spec);
        const auto ev = steady_state_evolve(H, p.gamma, spec);
        REQUIRE(ev.converged);
        const Matrix direct = steady_state_direct(H, p.gamma, spec);
        CHECK(trace_distance(ev.rho, direct) < 1e-5);
    }

    SECTION("full model in the strongly mixing regime") {
        // Large 2g/Omega keeps the transverse manifolds strongly coupled so
        // the Liouvillian gap stays at order gamma; in the dispersive regime
        // (2g/Omega small) the spin depolarizes at (2g/Omega)^2 gamma, far too
        // slowly to integrate to the true fixed point.
        SystemParams p = fig1_params();
        p.Omega = khz_to_radps(2.0);
        p.g = khz_to_radps(0.8);
        p.gamma = khz_to_radps(0.3);
        const HilbertSpec spec = HilbertSpec::full(12);
        const Matrix H = rabi_hamiltonian(p, spec);
        SteadyStateOptions opt;
        opt.t_max = 250.0 / p.gamma;
        const auto ev = steady_state_evolve(H, p.gamma, spec, opt);
        REQUIRE(ev.converged);
        const Matrix direct = steady_state_direct(H, p.gamma, spec);
        CHECK(trace_distance(ev.rho, direct) < 1e-5);
    }

    SECTION("dispersive full model: the direct state is a fixed point of the stepper") {
        // Dual-method consistency in the metastable regime: integrating the
        // directly solved state must leave it in place.
        SystemParams p = fig1_params();
        p.Omega = khz_to_radps(20.0);
        p.g = khz_to_radps(0.98);
        const HilbertSpec spec = HilbertSpec::full(12);
        const Matrix H = rabi_hamiltonian(p, spec);
        const Matrix direct = steady_state_direct(H, p.gamma, spec);
        EvolveConfig cfg;
        cfg.t_final = 2.0 / p.gamma;
        const auto res = evolve(direct, Hamiltonian::fixed(H), p.gamma, spec, cfg, {}, {});
        CHECK(trace_distance(res.final_state, direct) < 1e-6);
    }
}

TEST_CASE("full-model quadrature relaxes onto the closed-form plateau", "[slow]") {
    // Reduced truncation; the acceptance suite repeats this at N_F = 40.
    const SystemParams p = fig1_params();
    const HilbertSpec spec = HilbertSpec::full(16);
    const auto lad = fock_ops(HilbertSpec::bosonic(16));
    const Matrix x_full = tensor(identity(2), Matrix(lad.a_dag + lad.a));

    EvolveConfig cfg;
    cfg.t_final = 10.0 / p.gamma;
    cfg.rel_tol = 1e-6;
    const auto res = evolve(vacuum_projector(spec), Hamiltonian::fixed(rabi_hamiltonian(p, spec)),
                            p.gamma, spec, cfg, {x_full}, {"x"});
    const auto d = analytics::derived(p);
    const double target = analytics::x_ss(d);  // -0.8707 at these parameters
    CHECK(res.series_for("x").back() == Catch::Approx(target).epsilon(0.02));
    CHECK_FALSE(res.truncation_unsafe);
}

TEST_CASE("schrodinger path: trivial phase evolution and norm conservation") {
    const HilbertSpec spec = HilbertSpec::bosonic(8);
    const auto lad = fock_ops(spec);
    EvolveConfig cfg;
    cfg.t_final = 5e-3;
    cfg.record_every = 1e-3;
    const auto res = schrodinger_evolve(fock_state(spec, 0),
                                        Hamiltonian::fixed(hbar * khz_to_radps(0.3) * lad.n),
                                        spec, cfg, {lad.n}, {"n"});
    for (double v : res.series_for("n")) CHECK(std::abs(v) < 1e-10);
    CHECK(res.norm_drift < 1e-10);
}

TEST_CASE("truncation monitor flags an overfull Fock space") {
    const HilbertSpec spec = HilbertSpec::bosonic(8);
    const auto lad = fock_ops(spec);
    // displaced drive pushes occupation into the top levels
    SystemParams p = fig1_params();
    p.F = 200e-24;
    const Matrix H = analytics::effective_hamiltonian(p, spec);
    EvolveConfig cfg;
    cfg.t_final = 5.0 / p.gamma;
    const auto res = evolve(vacuum_projector(spec), Hamiltonian::fixed(H), p.gamma, spec, cfg,
                            {lad.n}, {"n"});
    CHECK(res.truncation_unsafe);
    CHECK(res.max_tail > cfg.tail_threshold);
}

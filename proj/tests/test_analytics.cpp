// Closed-form steady-state results checked against the vectorized-Liouvillian
// null space of the effective bosonic model, plus the rotated
// displaced-squeezed-thermal reconstruction of the steady state.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rabisense/analytics.hpp"
#include "rabisense/dynamics.hpp"
#include "rabisense/hilbert.hpp"
#include "rabisense/matrix_utils.hpp"

using namespace rabisense;
using namespace rabisense::hilbert;
using namespace rabisense::analytics;

namespace {

SystemParams fig2_params() {
    SystemParams p;
    p.omega = khz_to_radps(0.30);
    p.Omega = khz_to_radps(320.0);
    p.g     = khz_to_radps(4.0);
    p.gamma = khz_to_radps(0.08);
    p.z     = 14e-9;
    p.F     = 5e-24;
    return p;
}

SystemParams coupling_free() {
    SystemParams p = fig2_params();
    p.g = 0.0;
    p.gamma = 0.0;
    return p;
}

struct Moments {
    double x, p, var_x, var_p, s12, n, var_n, purity;
};

Moments moments_of(const Matrix& rho, int nf) {
    const auto lad = fock_ops(HilbertSpec::bosonic(nf));
    const Matrix x = lad.a_dag + lad.a;
    const Matrix p = im * (lad.a_dag - lad.a);
    Moments m;
    m.x = expectation(x, rho);
    m.p = expectation(p, rho);
    m.var_x = expectation(Matrix(x * x), rho) - m.x * m.x;
    m.var_p = expectation(Matrix(p * p), rho) - m.p * m.p;
    m.s12 = 0.5 * expectation(Matrix(x * p + p * x), rho) - m.x * m.p;
    m.n = expectation(lad.n, rho);
    m.var_n = expectation(Matrix(lad.n * lad.n), rho) - m.n * m.n;
    m.purity = purity_of(rho);
    return m;
}

double fitted_slope(const std::vector<double>& logx, const std::vector<double>& logy) {
    const std::size_t n = logx.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += logx[i];
        sy += logy[i];
        sxx += logx[i] * logx[i];
        sxy += logx[i] * logy[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("derived couplings") {
    SECTION("lambda_c reduces to 1 without dissipation") {
        CHECK(derived(coupling_free()).lambda_c == 1.0);
    }

    SECTION("reference parameter sets") {
        const auto d2 = derived(fig2_params());
        CHECK(d2.lambda == Catch::Approx(8.0 / std::sqrt(96.0)).epsilon(1e-12));
        CHECK(d2.f_tilde == Catch::Approx(0.3521444).epsilon(1e-5));

        SystemParams p4 = fig2_params();
        p4.g = khz_to_radps(4.5);
        p4.omega = khz_to_radps(0.28);
        const auto d4 = derived(p4);
        CHECK(d4.lambda == Catch::Approx(9.0 / std::sqrt(89.6)).epsilon(1e-12));
        CHECK(d4.lambda_c * d4.lambda_c == Catch::Approx(1.0816327).epsilon(1e-6));
    }

    SECTION("rejects non-positive frequencies") {
        SystemParams p = fig2_params();
        p.Omega = 0.0;
        CHECK_THROWS_AS(derived(p), invalid_spec);
    }
}

TEST_CASE("first moments and variances in closed form") {
    SECTION("uncoupled, undamped limit is a displaced vacuum") {
        const auto d = derived(coupling_free());
        CHECK(x_ss(d) == Catch::Approx(-d.f_tilde).epsilon(1e-12));
        CHECK(var_x_ss(d) == Catch::Approx(1.0).epsilon(1e-12));
        CHECK(p_ss(d, 0.0) == 0.0);
        CHECK(var_p_ss(d) == Catch::Approx(1.0).epsilon(1e-12));
    }

    SECTION("headline parameters land on the published plateau") {
        const auto d = derived(fig2_params());
        CHECK(x_ss(d) == Catch::Approx(-0.8707).epsilon(2e-4));
    }

    SECTION("momentum-to-position ratio is gamma/omega") {
        const SystemParams p = fig2_params();
        const auto d = derived(p);
        const double G = p.gamma / p.omega;
        CHECK(p_ss(d, G) / x_ss(d) == Catch::Approx(G).epsilon(1e-12));
    }

    SECTION("instability beyond the critical coupling") {
        SystemParams p = fig2_params();
        p.g = khz_to_radps(6.0);  // lambda > lambda_c
        CHECK_THROWS_AS(x_ss(derived(p)), instability_error);
    }
}

TEST_CASE("phonon statistics in closed form") {
    SECTION("coherent-state limit") {
        const auto d = derived(coupling_free());
        CHECK(n_ss(d) == Catch::Approx(0.25 * d.f_tilde * d.f_tilde).epsilon(1e-12));
        // Poissonian: variance equals the mean
        CHECK(var_n_ss(d) == Catch::Approx(n_ss(d)).epsilon(1e-12));
    }

    SECTION("signal minus its zero-force offset is quadratic in F") {
        SystemParams p = fig2_params();
        const double n1 = n_ss(derived(p));
        const double n0 = n_ss(derived(p.with_force(0.0)));
        const double n2 = n_ss(derived(p.with_force(2.0 * p.F)));
        CHECK((n2 - n0) / (n1 - n0) == Catch::Approx(4.0).epsilon(1e-10));
    }
}

TEST_CASE("variances do not depend on the force") {
    SystemParams p = fig2_params();
    const auto d1 = derived(p);
    const auto d2 = derived(p.with_force(2.0 * p.F));
    CHECK(var_x_ss(d1) == var_x_ss(d2));
    CHECK(var_p_ss(d1) == var_p_ss(d2));
    const double G = p.gamma / p.omega;
    CHECK(sigma12_ss(d1, G) == sigma12_ss(d2, G));
    CHECK(purity_ss(d1) == purity_ss(d2));
}

TEST_CASE("covariance matrix limits") {
    SECTION("vacuum at zero coupling") {
        const auto cov = covariance_ss(derived(coupling_free()), 0.0);
        CHECK((cov - Eigen::Matrix2d::Identity()).norm() < 1e-12);
    }

    SECTION("no cross correlation without dissipation") {
        SystemParams p = fig2_params();
        p.gamma = 0.0;
        CHECK(sigma12_ss(derived(p), 0.0) == 0.0);
    }

    SECTION("uncertainty bound on a parameter grid") {
        for (double frac : {0.0, 0.3, 0.7, 0.95, 0.999}) {
            for (double G : {0.0, 0.27, 1.0, 3.0}) {
                SystemParams p = fig2_params();
                p.gamma = G * p.omega;
                auto d = derived(p);
                p.g = 0.5 * frac * d.lambda_c * std::sqrt(p.omega * p.Omega);
                d = derived(p);
                const double det = covariance_ss(d, G).determinant();
                CHECK(det >= 1.0 - 1e-12);
                CHECK(purity_ss(d) ==
                      Catch::Approx(1.0 / std::sqrt(det)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("closed forms match the Liouvillian null space of the effective model") {
    const SystemParams p = fig2_params();
    const HilbertSpec spec = HilbertSpec::bosonic(30);
    const Matrix H = effective_hamiltonian(p, spec);
    const Matrix rho = dynamics::steady_state_direct(H, p.gamma, spec);
    const auto m = moments_of(rho, 30);

    const auto d = derived(p);
    const double G = p.gamma / p.omega;
    CHECK(m.x == Catch::Approx(x_ss(d)).margin(1e-4));
    CHECK(m.p == Catch::Approx(p_ss(d, G)).margin(1e-4));
    CHECK(m.var_x == Catch::Approx(std::pow(var_x_ss(d), 2)).margin(1e-4));
    CHECK(m.var_p == Catch::Approx(std::pow(var_p_ss(d), 2)).margin(1e-4));
    CHECK(m.s12 == Catch::Approx(sigma12_ss(d, G)).margin(1e-4));
    CHECK(m.n == Catch::Approx(n_ss(d)).margin(1e-4));
    CHECK(m.var_n == Catch::Approx(var_n_ss(d)).margin(2e-4));
    CHECK(m.purity == Catch::Approx(purity_ss(d)).margin(1e-4));
}

TEST_CASE("effective hamiltonian limits and guards") {
    SystemParams p = fig2_params();
    SECTION("bare oscillator at zero coupling and force") {
        p.g = 0.0;
        p.F = 0.0;
        const auto lad = fock_ops(HilbertSpec::bosonic(10));
        const Matrix H = effective_hamiltonian(p, HilbertSpec::bosonic(10));
        CHECK((H - hbar * p.omega * lad.n).norm() < 1e-12 * H.norm());
    }
    SECTION("spin spaces are rejected") {
        CHECK_THROWS_AS(effective_hamiltonian(p, HilbertSpec::full(10)), invalid_spec);
    }
}

TEST_CASE("gaussian decomposition limits") {
    SECTION("no squeezing without coupling") {
        const SystemParams p = coupling_free();
        const auto g = gaussian_decomposition(derived(p), 0.0);
        CHECK(g.squeeze_r == 0.0);
        const auto d = derived(p);
        CHECK(std::abs(g.disp_alpha) ==
              Catch::Approx(d.f_tilde / (2.0 * d.lambda_c)).epsilon(1e-12));
        CHECK(g.disp_alpha.real() < 0.0);  // force pushes <x> negative
        CHECK(g.rot_delta == 0.0);
        CHECK(g.squeeze_chi + g.rot_delta == Catch::Approx(0.0).margin(1e-15));
    }

    SECTION("thermal occupation follows the purity") {
        const auto g = gaussian_decomposition(derived(fig2_params()), 0.08 / 0.30);
        CHECK(g.thermal_n ==
              Catch::Approx((1.0 - g.purity) / (2.0 * g.purity)).epsilon(1e-12));
        CHECK(g.purity ==
              Catch::Approx(1.0 / std::sqrt(g.cov.determinant())).epsilon(1e-12));
    }
}

TEST_CASE("reconstructed state reproduces every steady-state moment") {
    const SystemParams p = fig2_params();
    const double G = p.gamma / p.omega;
    const auto d = derived(p);
    const auto g = gaussian_decomposition(d, G);
    const Matrix rho = reconstruct_state(g, HilbertSpec::bosonic(60));

    const auto m = moments_of(rho, 60);
    CHECK(m.x == Catch::Approx(g.mean_x).margin(1e-4));
    CHECK(m.p == Catch::Approx(g.mean_p).margin(1e-4));
    CHECK(m.var_x == Catch::Approx(g.cov(0, 0)).margin(1e-4));
    CHECK(m.var_p == Catch::Approx(g.cov(1, 1)).margin(1e-4));
    CHECK(m.s12 == Catch::Approx(g.cov(0, 1)).margin(1e-4));
    CHECK(m.purity == Catch::Approx(g.purity).margin(1e-4));
}

TEST_CASE("critical scaling exponents of the closed forms") {
    SystemParams p = fig2_params();
    p.F = 3.0 * hbar * p.omega / p.z;  // f_tilde = 3 so the quadratic term dominates <n>
    const double lc = derived(p).lambda_c;

    std::vector<double> lt, lx, ldx, ln;
    for (int i = 0; i < 10; ++i) {
        const double t = 0.005 * std::pow(10.0, i / 9.0);  // (lambda_c-lambda)/lambda_c
        SystemParams q = p;
        q.g = 0.5 * (1.0 - t) * lc * std::sqrt(p.omega * p.Omega);
        const auto d = derived(q);
        lt.push_back(std::log(t * lc));
        lx.push_back(std::log(-x_ss(d)));
        ldx.push_back(std::log(var_x_ss(d)));
        ln.push_back(std::log(n_ss(d)));
    }
    CHECK(fitted_slope(lt, lx) == Catch::Approx(-1.0).margin(0.05));
    CHECK(fitted_slope(lt, ldx) == Catch::Approx(-0.5).margin(0.05));
    CHECK(fitted_slope(lt, ln) == Catch::Approx(-2.0).margin(0.05));
}

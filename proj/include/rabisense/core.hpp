// core.hpp — Shared scalar/matrix aliases, physical constants, system parameters, errors

#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace rabisense {

using Complex = std::complex<double>;
using Matrix  = Eigen::MatrixXcd;
using Vector  = Eigen::VectorXcd;

inline constexpr double hbar = 1.054571817e-34;  // J s
inline constexpr double pi   = 3.14159265358979323846;

inline constexpr Complex im{0.0, 1.0};

// ------------------------------- errors -------------------------------------
//
// Physics-domain errors (unstable coupling, collapsed spectrum, ...) are kept
// distinct from numerical failures so front ends can map them to exit codes.

class physics_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// lambda >= lambda_c: no stable steady state exists
class instability_error : public physics_error {
public:
    using physics_error::physics_error;
};

// 2*xi >= omega: the quadratic Hamiltonian loses its harmonic spectrum
class spectrum_collapse_error : public physics_error {
public:
    using physics_error::physics_error;
};

class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Fock-space truncation cannot hold the requested state
class truncation_error : public numerical_error {
public:
    truncation_error(const std::string& msg, int suggested_fock_dim)
        : numerical_error(msg), suggested_fock_dim(suggested_fock_dim) {}
    int suggested_fock_dim;
};

class invalid_spec : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// ---------------------------- system parameters -----------------------------
//
// All values SI: angular frequencies in rad/s, z in meters, F in newtons.
// Conversion from config-file units (f/2pi in kHz, nm, yN) happens exactly
// once at the parse boundary, never here.

struct SystemParams {
    double omega = 0.0;  // oscillator frequency (rad/s)
    double Omega = 0.0;  // transverse field (rad/s)
    double g     = 0.0;  // spin-boson coupling (rad/s)
    double gamma = 0.0;  // bosonic decay rate (rad/s)
    double z     = 0.0;  // zero-point spread (m)
    double F     = 0.0;  // force (N), the estimation target

    void validate() const {
        if (omega < 0.0 || Omega < 0.0 || g < 0.0 || gamma < 0.0)
            throw invalid_spec("SystemParams: frequencies and gamma must be >= 0");
        if (!(z > 0.0))
            throw invalid_spec("SystemParams: z must be > 0");
    }

    SystemParams with_force(double newF) const {
        SystemParams q = *this;
        q.F = newF;
        return q;
    }
};

// kHz here always means f/2pi in kHz, the lab convention for quoting rates.
inline double khz_to_radps(double f_khz) { return 2.0 * pi * 1.0e3 * f_khz; }
inline double radps_to_khz(double w) { return w / (2.0 * pi * 1.0e3); }

}  // namespace rabisense

// ode.hpp — Embedded Dormand-Prince 5(4) stepper with PI step-size control.
//
// Generic over the state type (works for Eigen vectors and matrices); the
// error is measured in the Frobenius norm against abs_tol + rel_tol*||y||.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "rabisense/core.hpp"

namespace rabisense::ode {

struct StepOptions {
    double rel_tol  = 1e-8;
    double abs_tol  = 1e-10;
    double max_step = std::numeric_limits<double>::infinity();
    // Optional time-dependent ceiling, e.g. a fraction of the instantaneous
    // drive period for swept Hamiltonians.
    std::function<double(double)> max_step_fn;
};

struct StepStats {
    long accepted = 0;
    long rejected = 0;
};

template <class State>
class Dopri5 {
public:
    using Rhs = std::function<void(double, const State&, State&)>;

    Dopri5(Rhs rhs, StepOptions opts) : rhs_(std::move(rhs)), opts_(opts) {}

    void init(double t0, State y0) {
        t_ = t0;
        y_ = std::move(y0);
        k_[0] = y_;  // shape only
        rhs_(t_, y_, k_[0]);
        h_ = initial_step();
        have_k1_ = true;
        err_prev_ = 1.0;
    }

    double time() const { return t_; }
    const State& state() const { return y_; }
    State& state() { return y_; }
    const StepStats& stats() const { return stats_; }

    // Advance to exactly t_end. post_step(y) runs after every accepted step
    // (used to re-hermitize density matrices); it must be a small correction,
    // the stale FSAL derivative is kept.
    template <class PostStep>
    void advance_to(double t_end, PostStep&& post_step) {
        const double span = std::abs(t_end - t_);
        if (span == 0.0) return;
        const double t_scale = std::max(std::abs(t_), span);
        while (t_ < t_end) {
            double h = std::min({h_, opts_.max_step, t_end - t_});
            if (opts_.max_step_fn)
                h = std::min(h, opts_.max_step_fn(t_));
            if (h < 1e-14 * t_scale)
                throw numerical_error("ode: step size underflow at t = " + std::to_string(t_));
            if (!try_step(h))
                continue;
            post_step(y_);
            if (post_step_dirty_) {
                rhs_(t_, y_, k_[0]);  // refresh FSAL after an external correction
                post_step_dirty_ = false;
            }
        }
    }

    void advance_to(double t_end) {
        advance_to(t_end, [](State&) {});
    }

    // Mark that post_step modifies the state enough to need a fresh derivative.
    void set_post_step_refresh(bool on) { refresh_after_post_ = on; }

private:
    // Dormand-Prince 5(4) tableau
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // b - b_hat (embedded 4th order error weights), e7 from the FSAL stage
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    double initial_step() const {
        const double ynorm = y_.norm();
        const double fnorm = k_[0].norm();
        double h = (fnorm > 0.0) ? 0.01 * std::max(ynorm, 1e-12) / fnorm : 1e-6;
        return std::min(h, opts_.max_step);
    }

    bool try_step(double h) {
        const double t = t_;
        if (!have_k1_) {
            rhs_(t, y_, k_[0]);
            have_k1_ = true;
        }
        work_ = y_ + h * (a21 * k_[0]);
        rhs_(t + c2 * h, work_, k_[1]);
        work_ = y_ + h * (a31 * k_[0] + a32 * k_[1]);
        rhs_(t + c3 * h, work_, k_[2]);
        work_ = y_ + h * (a41 * k_[0] + a42 * k_[1] + a43 * k_[2]);
        rhs_(t + c4 * h, work_, k_[3]);
        work_ = y_ + h * (a51 * k_[0] + a52 * k_[1] + a53 * k_[2] + a54 * k_[3]);
        rhs_(t + c5 * h, work_, k_[4]);
        work_ = y_ + h * (a61 * k_[0] + a62 * k_[1] + a63 * k_[2] + a64 * k_[3] + a65 * k_[4]);
        rhs_(t + h, work_, k_[5]);
        y_new_ = y_ + h * (b1 * k_[0] + b3 * k_[2] + b4 * k_[3] + b5 * k_[4] + b6 * k_[5]);
        rhs_(t + h, y_new_, k_[6]);  // FSAL stage

        err_state_ = h * (e1 * k_[0] + e3 * k_[2] + e4 * k_[3] + e5 * k_[4] + e6 * k_[5] +
                          e7 * k_[6]);
        const double scale = opts_.abs_tol * std::sqrt(static_cast<double>(y_.size())) +
                             opts_.rel_tol * std::max(y_.norm(), y_new_.norm());
        const double err = err_state_.norm() / scale;

        if (err <= 1.0) {
            t_ += h;
            y_.swap(y_new_);
            k_[0].swap(k_[6]);  // FSAL
            stats_.accepted++;
            const double e = std::max(err, 1e-10);
            double fac = 0.9 * std::pow(e, -0.7 / 5.0) * std::pow(err_prev_, 0.4 / 5.0);
            fac = std::clamp(fac, 0.2, 5.0);
            h_ = h * fac;
            err_prev_ = e;
            post_step_dirty_ = refresh_after_post_;
            return true;
        }
        stats_.rejected++;
        h_ = h * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 1.0);
        return false;
    }

    Rhs rhs_;
    StepOptions opts_;
    double t_ = 0.0, h_ = 0.0, err_prev_ = 1.0;
    State y_, y_new_, work_, err_state_;
    State k_[7];
    bool have_k1_ = false;
    bool refresh_after_post_ = false;
    bool post_step_dirty_ = false;
    StepStats stats_;
};

}  // namespace rabisense::ode

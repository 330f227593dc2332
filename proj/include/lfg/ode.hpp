#pragma once

#include "lfg/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace lfg {

// Adaptive Dormand-Prince 5(4) with 4th-order continuous output
// (coefficients from Hairer/Norsett/Wanner, DOPRI5).

struct OdeOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    double h_init = 0.0; // 0: choose from the interval
    double h_min = 1e-14;
    long max_steps = 2000000;
    // return what was integrated so far when the step size collapses
    // (e.g. the right-hand side stops being evaluable), instead of throwing
    bool partial_on_collapse = false;
};

struct OdeStats {
    long steps = 0;
    long rejected = 0;
    long rhs_evals = 0;
};

class DenseSolution {
public:
    struct Step {
        double t0, h;
        Eigen::VectorXd r1, r2, r3, r4, r5;
    };

    double t_begin() const { return t_begin_; }
    double t_end() const { return t_end_; }

    Eigen::VectorXd operator()(double t) const {
        if (steps_.empty()) throw numerical_error("DenseSolution: empty");
        const double tc = std::clamp(t, t_begin_, t_end_);
        // binary search for the covering step
        std::size_t lo = 0, hi = steps_.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi + 1) / 2;
            if (steps_[mid].t0 <= tc)
                lo = mid;
            else
                hi = mid - 1;
        }
        const Step& s = steps_[lo];
        const double th = (tc - s.t0) / s.h;
        const double th1 = 1.0 - th;
        return s.r1 + th * (s.r2 + th1 * (s.r3 + th * (s.r4 + th1 * s.r5)));
    }

    OdeStats stats;
    bool stopped_early = false; // a stop-condition fired before t_end
    std::string stop_reason;

    // filled by the integrator
    std::vector<Step> steps_;
    double t_begin_ = 0, t_end_ = 0;

private:
};

using OdeRhs = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;
using OdeStop = std::function<bool(double, const Eigen::VectorXd&)>;

inline DenseSolution integrate_ode(const OdeRhs& f, Eigen::VectorXd y0, double t0, double t1,
                                   const OdeOptions& opt = {}, const OdeStop& stop = nullptr) {
    if (!(t1 > t0)) throw config_error("integrate_ode: need t1 > t0");

    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    static const double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

    DenseSolution sol;
    sol.t_begin_ = t0;

    double t = t0;
    double h = opt.h_init > 0 ? opt.h_init : (t1 - t0) / 100.0;
    Eigen::VectorXd y = std::move(y0);
    Eigen::VectorXd k1 = f(t, y);
    sol.stats.rhs_evals++;

    while (t < t1) {
        if (sol.stats.steps + sol.stats.rejected > opt.max_steps)
            throw numerical_error("integrate_ode: max step count exceeded");
        h = std::min(h, t1 - t);
        if (h < opt.h_min) {
            if (opt.partial_on_collapse && !sol.steps_.empty()) {
                sol.stopped_early = true;
                sol.stop_reason = "step size collapsed";
                return sol;
            }
            throw numerical_error("integrate_ode: step size collapsed");
        }

        Eigen::VectorXd y1, k7;
        try {
            const Eigen::VectorXd k2 = f(t + h / 5, y + h * (a21 * k1));
            const Eigen::VectorXd k3 = f(t + 3 * h / 10, y + h * (a31 * k1 + a32 * k2));
            const Eigen::VectorXd k4 = f(t + 4 * h / 5, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
            const Eigen::VectorXd k5 =
                f(t + 8 * h / 9, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
            const Eigen::VectorXd k6 =
                f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
            y1 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            k7 = f(t + h, y1);
            sol.stats.rhs_evals += 6;

            const Eigen::VectorXd errv =
                h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            double err2 = 0;
            for (int i = 0; i < y.size(); ++i) {
                const double sc =
                    opt.abs_tol + opt.rel_tol * std::max(std::abs(y[i]), std::abs(y1[i]));
                const double q = errv[i] / sc;
                err2 += q * q;
            }
            const double err = std::sqrt(err2 / y.size());

            if (err <= 1.0) {
                DenseSolution::Step s;
                s.t0 = t;
                s.h = h;
                s.r1 = y;
                s.r2 = y1 - y;
                s.r3 = h * k1 - s.r2;
                s.r4 = s.r2 - h * k7 - s.r3;
                s.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
                sol.steps_.push_back(std::move(s));

                t += h;
                y = y1;
                k1 = k7; // FSAL
                sol.stats.steps++;
                sol.t_end_ = t;

                if (stop && stop(t, y)) {
                    sol.stopped_early = true;
                    sol.stop_reason = "stop condition";
                    return sol;
                }
            } else {
                sol.stats.rejected++;
            }
            const double fac = std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 10.0);
            h *= fac;
        } catch (const std::exception&) {
            // a trial state left the evaluable region: treat as a rejected step
            sol.stats.rejected++;
            h *= 0.25;
        }
    }
    return sol;
}

} // namespace lfg

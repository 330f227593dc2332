#pragma once

#include "lfg/connection.hpp"

#include <limits>
#include <optional>

namespace lfg {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Curvature endomorphism R^a_b(v) and Ricci scalar at (x, v).
struct CurvatureData {
    Vec x, v;
    Mat R;      // R^a_b
    double ric; // trace
};

inline CurvatureData curvature_at(const SpacetimeModel& m, const Vec& x, const Vec& v) {
    auto G = jetgeom::build(m, x, v, 2, 4);
    const int d = m.dim();
    CurvatureData out;
    out.x = x;
    out.v = v;
    out.R = Mat::Zero(d, d);
    for (int a = 0; a < d; ++a) {
        const Jet& Ga = G.spray[static_cast<std::size_t>(a)];
        for (int b = 0; b < d; ++b) {
            double r = 2.0 * Ga.deriv_x(b).value();
            const Jet& Nab = G.nonlinear[a][b];
            for (int dd = 0; dd < d; ++dd) {
                r -= Nab.deriv_x(dd).value() * v[dd];
                r += 2.0 * Nab.deriv_v(dd).value() * G.spray[static_cast<std::size_t>(dd)].value();
                r -= G.nonlinear[a][dd].value() * G.nonlinear[dd][b].value();
            }
            out.R(a, b) = r;
        }
    }
    out.ric = out.R.trace();
    return out;
}

inline Mat curvature_endomorphism(const SpacetimeModel& m, const Vec& x, const Vec& v) {
    return curvature_at(m, x, v).R;
}

inline double ricci(const SpacetimeModel& m, const Vec& x, const Vec& v) {
    return curvature_at(m, x, v).ric;
}

// --- weighted Ricci -----------------------------------------------------------

/// first and second derivative of Psi along the geodesic with initial
/// velocity v, by the chain rule through the spray: eta'' = -2G(eta')
inline std::pair<double, double> psi_along_geodesic(const SpacetimeModel& m, const Vec& x,
                                                    const Vec& v) {
    const Vec dp = m.dpsi(x);
    const Mat hp = m.d2psi(x);
    const Vec G = spray_at(m, x, v);
    const double first = dp.dot(v);
    const double second = v.dot(hp * v) - 2.0 * dp.dot(G);
    return {first, second};
}

/// Ric_N(v). N is any real != n, +infinity, or the N = n monotone limit via
/// n_limit = true (which yields -infinity when (Psi o eta)'(0) != 0).
inline double weighted_ricci(const SpacetimeModel& m, const Vec& x, const Vec& v, double N,
                             bool n_limit = false) {
    const int n = m.spatial_dim();
    const auto [p1, p2] = psi_along_geodesic(m, x, v);
    const double ric = ricci(m, x, v);
    if (n_limit) {
        if (p1 != 0.0) return -kInfinity;
        return ric + p2;
    }
    if (N == kInfinity) return ric + p2;
    if (N == static_cast<double>(n))
        throw config_error("weighted_ricci: N = n requires the explicit limit flag");
    return ric + p2 - p1 * p1 / (N - n);
}

// --- epsilon range -------------------------------------------------------------

struct EpsilonRange {
    double N;
    double epsilon;
    int n;
    double c; // c(N, epsilon) > 0
};

/// Admissibility per the epsilon-range: epsilon = 0 for N = 0,
/// |epsilon| < sqrt(N/(N-n)) for N != 0, n (limit |epsilon| < 1 at N = +inf),
/// any epsilon for N = n. Throws for N inside (0, n), which is outside the
/// allowed range of N altogether.
inline std::optional<EpsilonRange> epsilon_admissible(double N, double epsilon, int n) {
    if (N > 0.0 && N < static_cast<double>(n))
        throw config_error("epsilon range: N must lie in (-inf,0] or [n,+inf]");
    const double c_generic = [&] {
        if (N == 0.0) return 1.0 / n;
        if (N == kInfinity) return (1.0 - epsilon * epsilon) / n;
        return (1.0 - epsilon * epsilon * (N - n) / N) / n;
    }();

    bool ok;
    if (N == 0.0) {
        ok = (epsilon == 0.0);
    } else if (N == static_cast<double>(n)) {
        ok = true;
    } else if (N == kInfinity) {
        ok = std::abs(epsilon) < 1.0;
    } else {
        ok = std::abs(epsilon) < std::sqrt(N / (N - n));
    }
    if (!ok) return std::nullopt;
    return EpsilonRange{N, epsilon, n, c_generic};
}

} // namespace lfg

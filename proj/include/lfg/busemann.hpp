#pragma once

#include "lfg/congruence.hpp"

#include <cmath>

namespace lfg {

// Rays, truncated Busemann functions b_t(x) = t - d(x, eta(t)), their
// extrapolated limits, upper support functions, and the Laplacian
// comparison verifier.

/// scale v to unit F-speed
inline Vec unit_timelike(const SpacetimeModel& m, const Vec& x, const Vec& v) {
    return v / m.F(x, v);
}

struct Ray {
    const SpacetimeModel* model = nullptr;
    GeodesicSegment seg; // [0, T]
    double T = 0;

    Vec point(double t) const { return seg.position(t); }
    Vec velocity(double t) const { return seg.velocity(t); }
};

inline Ray make_ray(const SpacetimeModel& m, const Vec& z, const Vec& v, double T,
                    const OdeOptions& opt = {}) {
    if (std::abs(m.F(z, v) - 1.0) > 1e-9)
        throw config_error("make_ray: direction must be unit-speed (F = 1)");
    Ray r;
    r.model = &m;
    r.seg = integrate_geodesic(m, z, v, 0.0, T, opt);
    if (r.seg.cone_exit) throw numerical_error("make_ray: geodesic left the domain cone");
    r.T = T;
    return r;
}

/// a complete line: unit geodesic on [-T, T]
struct Line {
    const SpacetimeModel* model = nullptr;
    GeodesicSegment fwd, bwd;
    double T = 0;

    Vec point(double t) const { return t >= 0 ? fwd.position(t) : bwd.position(-t); }
    Vec velocity(double t) const {
        return t >= 0 ? fwd.velocity(t) : Vec(-bwd.velocity(-t));
    }
};

inline Ray forward_ray(const Line& l) {
    Ray r;
    r.model = l.model;
    r.seg = l.fwd;
    r.T = l.T;
    return r;
}

inline Line make_line(const SpacetimeModel& m, const Vec& z, const Vec& v, double T,
                      const OdeOptions& opt = {}) {
    if (std::abs(m.F(z, v) - 1.0) > 1e-9)
        throw config_error("make_line: direction must be unit-speed (F = 1)");
    Line l;
    l.model = &m;
    l.fwd = integrate_geodesic(m, z, v, 0.0, T, opt);
    l.bwd = integrate_geodesic(m, z, Vec(-v), 0.0, T, opt);
    if (l.fwd.cone_exit || l.bwd.cone_exit)
        throw numerical_error("make_line: geodesic left the domain cone");
    l.T = T;
    return l;
}

/// d(x, y) beyond the convexity radius, by splitting the chart-line BVP
/// connector into windows inside the radius and summing local distances.
/// Returns 0 when no future-causal connector is found.
inline double chained_distance(const SpacetimeModel& m, const Vec& x, const Vec& y,
                               double tol = 1e-10) {
    const double span = (y - x).norm();
    const double radius = m.convexity_radius();
    if (span <= radius) return local_distance(m, x, y, tol);

    if (!m.in_domain_cone(x, Vec(y - x))) return 0.0;
    BvpSolution bvp;
    try {
        bvp = solve_bvp(m, x, y, Vec(y - x), tol, 30, false);
    } catch (const numerical_error&) {
        return 0.0;
    } catch (const domain_error&) {
        return 0.0;
    }
    const auto cls = m.classify(x, bvp.v);
    if (cls.causality == Causality::spacelike || cls.orientation != Orientation::future)
        return 0.0;

    const int windows = static_cast<int>(std::ceil(span / (0.8 * radius)));
    double total = 0.0;
    for (int w = 0; w < windows; ++w) {
        const double a = static_cast<double>(w) / windows;
        const double b = static_cast<double>(w + 1) / windows;
        const double leg = local_distance(m, bvp.segment.position(a), bvp.segment.position(b), tol);
        if (leg == 0.0) return 0.0;
        total += leg;
    }
    return total;
}

/// straightness certificate: worst |length - distance| over sampled windows
/// within the convexity radius
inline double ray_straightness(const SpacetimeModel& m, const Ray& ray, int windows = 6) {
    double worst = 0.0;
    for (int w = 0; w < windows; ++w) {
        const double a = ray.T * w / windows;
        double b = ray.T * (w + 1) / windows;
        if ((ray.point(b) - ray.point(a)).norm() > m.convexity_radius()) continue;
        const double len = curve_length(
            m, [&](double t) { return std::pair<Vec, Vec>(ray.point(t), ray.velocity(t)); }, a,
            b);
        const double dist = local_distance(m, ray.point(a), ray.point(b));
        worst = std::max(worst, std::abs(len - dist));
    }
    return worst;
}

struct BusemannEvaluation {
    Vec x;
    std::vector<double> ts, values; // kept samples b_t(x)
    std::vector<double> dropped;    // t values without a causal connector
    double limit = 0;
    double uncertainty = 0;
    double worst_monotonicity_violation = 0; // max increase between samples
};

namespace detail {

inline void finalize_busemann(BusemannEvaluation& ev) {
    if (ev.ts.size() < 3)
        throw numerical_error("busemann: fewer than three reachable grid points");
    for (std::size_t k = 1; k < ev.values.size(); ++k)
        ev.worst_monotonicity_violation =
            std::max(ev.worst_monotonicity_violation, ev.values[k] - ev.values[k - 1]);
    // fit b_t = b_inf + beta / t on the largest three samples; the spread of
    // the three pairwise solutions is the reported uncertainty
    const std::size_t s = ev.ts.size();
    const double t1 = ev.ts[s - 3], t2 = ev.ts[s - 2], t3 = ev.ts[s - 1];
    const double b1 = ev.values[s - 3], b2 = ev.values[s - 2], b3 = ev.values[s - 1];
    auto pairfit = [](double ta, double ba, double tb, double bb) {
        return (ta * ba - tb * bb) / (ta - tb);
    };
    const double e12 = pairfit(t1, b1, t2, b2);
    const double e23 = pairfit(t2, b2, t3, b3);
    const double e13 = pairfit(t1, b1, t3, b3);
    ev.limit = (e12 + e23 + e13) / 3.0;
    ev.uncertainty = std::max({e12, e23, e13}) - std::min({e12, e23, e13});
}

} // namespace detail

inline BusemannEvaluation busemann_truncated(const SpacetimeModel& m, const Ray& ray,
                                             const Vec& x, const std::vector<double>& t_grid) {
    BusemannEvaluation ev;
    ev.x = x;
    for (double t : t_grid) {
        if (t > ray.T) throw config_error("busemann_truncated: grid beyond the ray span");
        double d = 0.0;
        bool ok = true;
        try {
            d = chained_distance(m, x, ray.point(t));
        } catch (const std::exception&) {
            ok = false;
        }
        if (!ok || d == 0.0) {
            ev.dropped.push_back(t);
            continue;
        }
        ev.ts.push_back(t);
        ev.values.push_back(t - d);
    }
    detail::finalize_busemann(ev);
    return ev;
}

/// reverse Busemann along a line: bbar_t(x) = t - d(eta(-t), x)
inline BusemannEvaluation reverse_busemann(const SpacetimeModel& m, const Line& line,
                                           const Vec& x, const std::vector<double>& t_grid) {
    BusemannEvaluation ev;
    ev.x = x;
    for (double t : t_grid) {
        if (t > line.T) throw config_error("reverse_busemann: grid beyond the line span");
        double d = 0.0;
        bool ok = true;
        try {
            d = chained_distance(m, line.point(-t), x);
        } catch (const std::exception&) {
            ok = false;
        }
        if (!ok || d == 0.0) {
            ev.dropped.push_back(t);
            continue;
        }
        ev.ts.push_back(t);
        ev.values.push_back(t - d);
    }
    detail::finalize_busemann(ev);
    return ev;
}

inline std::string busemann_csv(const BusemannEvaluation& ev) {
    std::vector<std::string> header;
    for (int a = 0; a < ev.x.size(); ++a) header.push_back("x" + std::to_string(a));
    header.insert(header.end(), {"t", "b_t", "b_limit", "uncertainty"});
    CsvWriter csv(header);
    for (std::size_t k = 0; k < ev.ts.size(); ++k) {
        std::vector<double> row;
        for (int a = 0; a < ev.x.size(); ++a) row.push_back(ev.x[a]);
        row.insert(row.end(), {ev.ts[k], ev.values[k], ev.limit, ev.uncertainty});
        csv.row(row);
    }
    return csv.body();
}

/// upper support function rho(x) = b(z) + t - d(x, zeta(t)) built from an
/// asymptote ray zeta emanating at z
struct SupportFunction {
    const SpacetimeModel* model = nullptr;
    const Ray* zeta = nullptr;
    double t = 0;
    double b_z = 0; // Busemann value at zeta(0)

    double operator()(const Vec& x) const {
        return b_z + t - chained_distance(*model, x, zeta->point(t));
    }
};

inline SupportFunction support_function(const SpacetimeModel& m, const Ray& zeta, double t,
                                        double b_eta_z) {
    if (t <= 0.0 || t > zeta.T) throw config_error("support_function: t outside (0, T]");
    return SupportFunction{&m, &zeta, t, b_eta_z};
}

// --- Laplacian comparison -----------------------------------------------------

/// margin report for eq. (Lcomp): Delta^Psi(-u)(eta(t)) vs the weighted
/// 1/phi bound, nondimensionalized by 1/t. LHS comes from the Lagrange
/// tensor of the distance congruence, RHS from quadrature.
inline ScenarioReport verify_laplacian_comparison(const SpacetimeModel& m, const Vec& z,
                                                  const Vec& v0, double N, double eps,
                                                  const std::vector<double>& t_grid,
                                                  double tol = 1e-6) {
    ScenarioReport rep;
    rep.experiment = "laplacian-comparison";
    rep.echo("model", m.name());
    rep.echo("N", N == kInfinity ? "inf" : std::to_string(N));
    rep.echo("eps", std::to_string(eps));

    const int n = m.spatial_dim();
    auto range = epsilon_admissible(N, eps, n);
    if (!range) throw config_error("laplacian comparison: (N, eps) not admissible");
    const double c = range->c;
    const bool n_limit = (N == static_cast<double>(n));

    double t_max = 0;
    for (double t : t_grid) t_max = std::max(t_max, t);
    auto st = evolve_lagrange(m, z, v0, 0.0, 1.02 * t_max, Mat::Zero(n, n),
                              Mat::Identity(n, n));

    // precondition: Ric_N >= 0 sampled along the geodesic
    double min_ric = kInfinity;
    for (double t : t_grid)
        min_ric = std::min(min_ric,
                           weighted_ricci(m, st.position(t), st.velocity(t), N, n_limit));
    rep.echo("min_sampled_Ric_N", std::to_string(min_ric));
    if (min_ric < -1e-9) {
        rep.precondition_failed = true;
        rep.precondition_note = "sampled Ric_N < 0 along the geodesic; theorem does not apply";
        return rep;
    }

    double worst = -kInfinity; // worst violation (LHS - RHS) * t
    for (double t : t_grid) {
        const double lhs = st.theta(t) - st.psi_prime(t); // trace B - dPsi(grad)
        const double pref = std::exp(2.0 * (eps - 1.0) / n * st.psi(t));
        const double rhs = pref / (c * phi_zeta(st, eps, t));
        worst = std::max(worst, (lhs - rhs) * t);
    }
    rep.add("comparison violation max((LHS-RHS)*t, 0)", std::max(worst, 0.0), tol);
    return rep;
}

/// reverse version (eq. Lcomp'): run the forward verifier on the reverse
/// structure with the opposite unit vector
inline ScenarioReport verify_laplacian_comparison_reverse(const SpacetimeModel& m, const Vec& z,
                                                          const Vec& v0, double N, double eps,
                                                          const std::vector<double>& t_grid,
                                                          double tol = 1e-6) {
    ReversedModel rev(m);
    auto rep = verify_laplacian_comparison(rev, z, Vec(-v0), N, eps, t_grid, tol);
    rep.experiment = "laplacian-comparison-reverse";
    return rep;
}

} // namespace lfg

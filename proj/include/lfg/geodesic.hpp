#pragma once

#include "lfg/curvature.hpp"
#include "lfg/ode.hpp"

#include <utility>

namespace lfg {

// Geodesics solve eta''^a + 2 G^a(eta') = 0. The phase-space state is
// y = (x, v) of size 2*dim.

struct GeodesicSegment {
    const SpacetimeModel* model = nullptr;
    double t0 = 0, t1 = 0;
    DenseSolution sol;
    bool cone_exit = false; // integration stopped before t1 at the domain boundary
    double L0 = 0;          // L(eta'(t0))
    double L_drift = 0;     // max |L(eta'(t)) - L0| over a sample grid

    double t_end() const { return sol.t_end(); }

    Vec position(double t) const {
        const Vec y = sol(t);
        return y.head(y.size() / 2);
    }
    Vec velocity(double t) const {
        const Vec y = sol(t);
        return y.tail(y.size() / 2);
    }
};

inline OdeRhs geodesic_rhs(const SpacetimeModel& m) {
    const int d = m.dim();
    return [&m, d](double, const Vec& y) {
        Vec dy(2 * d);
        const Vec x = y.head(d), v = y.tail(d);
        dy.head(d) = v;
        dy.tail(d) = -2.0 * spray_at(m, x, v);
        return dy;
    };
}

inline GeodesicSegment integrate_geodesic(const SpacetimeModel& m, const Vec& x, const Vec& v,
                                          double t0, double t1, const OdeOptions& opt_in = {}) {
    if (v.norm() == 0.0) throw config_error("integrate_geodesic: v must be nonzero");
    const int d = m.dim();
    OdeOptions opt = opt_in;
    opt.partial_on_collapse = true;

    Vec y0(2 * d);
    y0.head(d) = x;
    y0.tail(d) = v;

    GeodesicSegment seg;
    seg.model = &m;
    seg.t0 = t0;
    seg.t1 = t1;
    seg.L0 = m.eval_L(x, v);
    seg.sol = integrate_ode(geodesic_rhs(m), std::move(y0), t0, t1, opt);
    seg.cone_exit = seg.sol.stopped_early;

    const int probes = 33;
    for (int i = 0; i <= probes; ++i) {
        const double t = t0 + (seg.t_end() - t0) * i / probes;
        const Vec y = seg.sol(t);
        seg.L_drift =
            std::max(seg.L_drift, std::abs(m.eval_L(y.head(d), y.tail(d)) - seg.L0));
    }
    return seg;
}

inline Vec exponential_map(const SpacetimeModel& m, const Vec& x, const Vec& v,
                           const OdeOptions& opt = {}) {
    auto seg = integrate_geodesic(m, x, v, 0.0, 1.0, opt);
    if (seg.cone_exit)
        throw domain_error("exponential_map: geodesic left the domain cone before t = 1");
    return seg.position(1.0);
}

// --- Jacobi fields and parallel transport ------------------------------------

/// k Jacobi fields along one geodesic, integrated jointly with it.
/// State: (x, v, J columns, DJ columns); J'^a = DJ^a - Gamma^a_{bd}(v) v^b J^d,
/// (DJ)'^a = -R^a_b J^b - Gamma^a_{bd}(v) v^b (DJ)^d.
struct JacobiSystem {
    const SpacetimeModel* model = nullptr;
    int d = 0, k = 0;
    DenseSolution sol;

    Vec position(double t) const { return sol(t).head(d); }
    Vec velocity(double t) const { return sol(t).segment(d, d); }
    Mat J(double t) const {
        const Vec y = sol(t);
        return Eigen::Map<const Mat>(y.data() + 2 * d, d, k);
    }
    Mat DJ(double t) const {
        const Vec y = sol(t);
        return Eigen::Map<const Mat>(y.data() + 2 * d + d * k, d, k);
    }
};

inline JacobiSystem integrate_jacobi(const SpacetimeModel& m, const Vec& x, const Vec& v,
                                     double t0, double t1, const Mat& J0, const Mat& DJ0,
                                     const OdeOptions& opt = {}) {
    const int d = m.dim();
    const int k = static_cast<int>(J0.cols());
    if (J0.rows() != d || DJ0.rows() != d || DJ0.cols() != k)
        throw config_error("integrate_jacobi: initial data must be dim x k");

    auto rhs = [&m, d, k](double, const Vec& y) {
        const Vec xx = y.head(d), vv = y.segment(d, d);
        auto G = jetgeom::build(m, xx, vv, 2, 4);
        Vec spray(d);
        for (int a = 0; a < d; ++a) spray[a] = G.spray[static_cast<std::size_t>(a)].value();
        // Gamma(v) contracted with v in the first slot, and R^a_b(v)
        Mat C = Mat::Zero(d, d), R(d, d);
        for (int a = 0; a < d; ++a)
            for (int dd = 0; dd < d; ++dd)
                for (int b = 0; b < d; ++b)
                    C(a, dd) += G.chern[static_cast<std::size_t>(a)][b][dd].value() * vv[b];
        for (int a = 0; a < d; ++a) {
            const Jet& Ga = G.spray[static_cast<std::size_t>(a)];
            for (int b = 0; b < d; ++b) {
                double r = 2.0 * Ga.deriv_x(b).value();
                const Jet& Nab = G.nonlinear[a][b];
                for (int dd = 0; dd < d; ++dd) {
                    r -= Nab.deriv_x(dd).value() * vv[dd];
                    r += 2.0 * Nab.deriv_v(dd).value() * spray[dd];
                    r -= G.nonlinear[a][dd].value() * G.nonlinear[dd][b].value();
                }
                R(a, b) = r;
            }
        }

        const Eigen::Map<const Mat> J(y.data() + 2 * d, d, k);
        const Eigen::Map<const Mat> W(y.data() + 2 * d + d * k, d, k);
        Vec dy(2 * d + 2 * d * k);
        dy.head(d) = vv;
        dy.segment(d, d) = -2.0 * spray;
        Eigen::Map<Mat>(dy.data() + 2 * d, d, k) = W - C * J;
        Eigen::Map<Mat>(dy.data() + 2 * d + d * k, d, k) = -R * J - C * W;
        return dy;
    };

    Vec y0(2 * d + 2 * d * k);
    y0.head(d) = x;
    y0.segment(d, d) = v;
    Eigen::Map<Mat>(y0.data() + 2 * d, d, k) = J0;
    Eigen::Map<Mat>(y0.data() + 2 * d + d * k, d, k) = DJ0;

    JacobiSystem js;
    js.model = &m;
    js.d = d;
    js.k = k;
    js.sol = integrate_ode(rhs, std::move(y0), t0, t1, opt);
    return js;
}

/// parallel transport of the columns of V0 along the geodesic from (x, v):
/// V'^a = -Gamma^a_{bd}(eta') eta'^b V^d with reference vector eta'
struct TransportedFrame {
    const SpacetimeModel* model = nullptr;
    int d = 0, k = 0;
    DenseSolution sol;

    Vec position(double t) const { return sol(t).head(d); }
    Vec velocity(double t) const { return sol(t).segment(d, d); }
    Mat V(double t) const {
        const Vec y = sol(t);
        return Eigen::Map<const Mat>(y.data() + 2 * d, d, k);
    }
};

inline TransportedFrame parallel_transport(const SpacetimeModel& m, const Vec& x, const Vec& v,
                                           double t0, double t1, const Mat& V0,
                                           const OdeOptions& opt = {}) {
    const int d = m.dim();
    const int k = static_cast<int>(V0.cols());
    if (V0.rows() != d) throw config_error("parallel_transport: V0 must have dim rows");

    auto rhs = [&m, d, k](double, const Vec& y) {
        const Vec xx = y.head(d), vv = y.segment(d, d);
        auto G = jetgeom::build(m, xx, vv, 1, 3);
        Vec spray(d);
        Mat C = Mat::Zero(d, d);
        for (int a = 0; a < d; ++a) {
            spray[a] = G.spray[static_cast<std::size_t>(a)].value();
            for (int dd = 0; dd < d; ++dd)
                for (int b = 0; b < d; ++b)
                    C(a, dd) += G.chern[static_cast<std::size_t>(a)][b][dd].value() * vv[b];
        }
        const Eigen::Map<const Mat> V(y.data() + 2 * d, d, k);
        Vec dy(2 * d + d * k);
        dy.head(d) = vv;
        dy.segment(d, d) = -2.0 * spray;
        Eigen::Map<Mat>(dy.data() + 2 * d, d, k) = -C * V;
        return dy;
    };

    Vec y0(2 * d + d * k);
    y0.head(d) = x;
    y0.segment(d, d) = v;
    Eigen::Map<Mat>(y0.data() + 2 * d, d, k) = V0;

    TransportedFrame tf;
    tf.model = &m;
    tf.d = d;
    tf.k = k;
    tf.sol = integrate_ode(rhs, std::move(y0), t0, t1, opt);
    return tf;
}

// --- boundary value problem ---------------------------------------------------

struct BvpSolution {
    GeodesicSegment segment;
    Vec v;              // initial velocity, exp_x(v) = y
    int iterations = 0;
    double residual = 0; // |exp_x(v) - y| in chart coordinates
};

/// Newton shooting on v -> exp_x(v) - y. The Jacobian comes from Jacobi
/// fields with J0 = 0, DJ0 = I (exact when the connection is Berwald);
/// use_jacobi = false switches to forward differences.
inline BvpSolution solve_bvp(const SpacetimeModel& m, const Vec& x, const Vec& y,
                             const Vec& initial_guess, double tol = 1e-10, int max_iter = 30,
                             bool use_jacobi = true, const OdeOptions& opt = {}) {
    const int d = m.dim();
    Vec v = initial_guess;
    BvpSolution out;
    for (int it = 1; it <= max_iter; ++it) {
        out.iterations = it;
        auto seg = integrate_geodesic(m, x, v, 0.0, 1.0, opt);
        if (seg.cone_exit)
            throw domain_error("solve_bvp: geodesic left the domain cone before t = 1");
        const Vec endpoint = seg.position(1.0);
        const Vec r = endpoint - y;
        out.residual = r.norm();
        if (out.residual <= tol) {
            out.v = v;
            out.segment = std::move(seg);
            return out;
        }
        // only pay for a Jacobian when a Newton step is actually needed
        Mat jac(d, d);
        if (use_jacobi) {
            auto js = integrate_jacobi(m, x, v, 0.0, 1.0, Mat::Zero(d, d), Mat::Identity(d, d),
                                       opt);
            jac = js.J(1.0);
        } else {
            const double h = 1e-7 * std::max(1.0, v.norm());
            for (int j = 0; j < d; ++j) {
                Vec vj = v;
                vj[j] += h;
                jac.col(j) = (exponential_map(m, x, vj, opt) - endpoint) / h;
            }
        }
        const Vec dv = jac.partialPivLu().solve(r);
        if (!dv.allFinite()) throw numerical_error("solve_bvp: singular shooting Jacobian");
        v -= dv;
    }
    throw numerical_error("solve_bvp: Newton did not converge in " + std::to_string(max_iter) +
                          " iterations (residual " + std::to_string(out.residual) +
                          "); not a proof that no connector exists");
}

// --- length and local distance -------------------------------------------------

/// composite 7-point Gauss-Legendre integral of F(eta') over [t0, t1]
template <typename Curve> // Curve: double -> pair<Vec, Vec> (position, velocity)
double curve_length(const SpacetimeModel& m, Curve&& c, double t0, double t1, int panels = 16) {
    static const double node[] = {0.0,
                                  0.4058451513773971669066064,
                                  -0.4058451513773971669066064,
                                  0.7415311855993944398638648,
                                  -0.7415311855993944398638648,
                                  0.9491079123427585245261897,
                                  -0.9491079123427585245261897};
    static const double wt[] = {0.4179591836734693877551020, 0.3818300505051189449503698,
                                0.3818300505051189449503698, 0.2797053914892766679014678,
                                0.2797053914892766679014678, 0.1294849661688696932706114,
                                0.1294849661688696932706114};
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double a = t0 + (t1 - t0) * p / panels;
        const double b = t0 + (t1 - t0) * (p + 1) / panels;
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (int q = 0; q < 7; ++q) {
            const auto [xx, vv] = c(mid + half * node[q]);
            total += half * wt[q] * m.F(xx, vv);
        }
    }
    return total;
}

inline double length(const SpacetimeModel& m, const GeodesicSegment& seg, int panels = 16) {
    return curve_length(
        m, [&](double t) { return std::pair<Vec, Vec>(seg.position(t), seg.velocity(t)); },
        seg.t0, seg.t_end(), panels);
}

/// local Lorentz-Finsler distance within the declared convexity radius;
/// 0 when no future-causal connector is found
inline double local_distance(const SpacetimeModel& m, const Vec& x, const Vec& y,
                             double tol = 1e-10) {
    if ((y - x).norm() > m.convexity_radius())
        throw domain_error("local_distance: points beyond the declared convexity radius");
    const Vec guess = y - x;
    if (!m.in_domain_cone(x, guess)) return 0.0;
    BvpSolution bvp;
    try {
        // finite-difference shooting Jacobian: cheaper than the Jacobi system
        // at chart scale, and the endpoint residual certifies the result
        bvp = solve_bvp(m, x, y, guess, tol, 30, false);
    } catch (const numerical_error&) {
        return 0.0;
    } catch (const domain_error&) {
        return 0.0;
    }
    const auto cls = m.classify(x, bvp.v);
    if (cls.causality == Causality::spacelike || cls.orientation != Orientation::future)
        return 0.0;
    return length(m, bvp.segment);
}

// --- export --------------------------------------------------------------------

inline std::string trajectory_csv(const GeodesicSegment& seg, int samples = 200) {
    const int d = seg.model->dim();
    std::vector<std::string> header{"t"};
    for (int a = 0; a < d; ++a) header.push_back("x" + std::to_string(a));
    for (int a = 0; a < d; ++a) header.push_back("v" + std::to_string(a));
    CsvWriter csv(header);
    for (int i = 0; i <= samples; ++i) {
        const double t = seg.t0 + (seg.t_end() - seg.t0) * i / samples;
        const Vec y = seg.sol(t);
        std::vector<double> row{t};
        for (int a = 0; a < 2 * d; ++a) row.push_back(y[a]);
        csv.row(row);
    }
    return csv.body();
}

} // namespace lfg

#pragma once

#include "lfg/connection.hpp"

#include <cmath>

namespace lfg {

// Dual structure on the cotangent side: polar cone, L*, Legendre transform,
// and the gradient/Hessian/Laplacian calculus of temporal functions.

/// scalar function evaluable on x-jets
using ScalarField = std::function<Jet(std::span<const Jet>)>;

inline Jet field_jet(const SpacetimeModel& m, const ScalarField& f, const Vec& x, int x_order) {
    auto sp = JetSpace::get(m.dim(), x_order, 0);
    std::vector<Jet> xj;
    for (int a = 0; a < m.dim(); ++a) xj.push_back(Jet::variable_x(sp, a, x[a]));
    return f(xj);
}

inline Vec field_differential(const SpacetimeModel& m, const ScalarField& f, const Vec& x) {
    Jet fj = field_jet(m, f, x, 1);
    Vec d(m.dim());
    for (int a = 0; a < m.dim(); ++a) d[a] = fj.partial_x(a);
    return d;
}

/// membership in the polar cone, decided on sampled directions of the
/// validated future cone: omega(v) < 0 for every sample
inline bool in_polar_cone(const SpacetimeModel& m, const Vec& x, const Vec& omega,
                          int samples = 96) {
    const int d = m.dim();
    if (omega.dot(m.orientation(x)) >= 0.0) return false;
    auto dirs = halton_points(samples, d);
    for (const auto& h : dirs) {
        Vec dir(d);
        for (int a = 0; a < d; ++a) dir[a] = 2.0 * h[a] - 1.0;
        const Vec v = cone_vector(m, x, dir, 1.0, 1.0);
        if (omega.dot(v) >= 0.0) return false;
    }
    return true;
}

/// quadratic-model warm start: solve g_X(v, .) = omega at the orientation vector
inline Vec raise_index_at(const SpacetimeModel& m, const Vec& x, const Vec& omega) {
    const Mat g = m.fundamental_tensor(x, m.orientation(x));
    return g.partialPivLu().solve(omega);
}

namespace detail {

/// maximize omega(v) over the unit-F indicatrix in the chart v = (1, z)/F;
/// returns (sup, maximizer on the indicatrix)
inline std::pair<double, Vec> indicatrix_sup(const SpacetimeModel& m, const Vec& x,
                                             const Vec& omega, double tol = 1e-12) {
    const int d = m.dim();
    const int n = d - 1;
    auto sp = JetSpace::get(d, 0, 2);

    // warm start from the quadratic dual
    Vec v0 = raise_index_at(m, x, omega);
    if (v0[0] == 0.0 || m.eval_L(x, v0) >= 0.0) v0 = m.orientation(x);
    Vec z = v0.tail(n) / v0[0];

    auto phi_jet = [&](const Vec& zz) {
        std::vector<Jet> xj, vj;
        for (int a = 0; a < d; ++a) xj.push_back(Jet::constant(sp, x[a]));
        vj.push_back(Jet::constant(sp, 1.0)); // chart: v^0 fixed to 1
        for (int i = 0; i < n; ++i) vj.push_back(Jet::variable_v(sp, i + 1, zz[i]));
        Jet L = m.lagrangian(xj, vj);
        if (L.value() >= 0.0) throw domain_error("indicatrix chart left the cone");
        Jet num = Jet::constant(sp, omega[0]);
        for (int i = 0; i < n; ++i) num += omega[i + 1] * vj[static_cast<std::size_t>(i + 1)];
        return num * sqrt(-2.0 * L).recip();
    };

    double phival = 0;
    for (int it = 0; it < 80; ++it) {
        Jet p = phi_jet(z);
        phival = p.value();
        Vec grad(n);
        Mat H(n, n);
        for (int i = 0; i < n; ++i) {
            grad[i] = p.partial_v(i + 1);
            for (int j = i; j < n; ++j) {
                MultiIdx xm{}, vm{};
                vm[i + 1]++;
                vm[j + 1]++;
                H(i, j) = H(j, i) = p.partial(xm, vm);
            }
        }
        if (grad.norm() <= tol) break;
        Vec step = H.partialPivLu().solve(grad);
        if (!step.allFinite()) throw numerical_error("indicatrix maximization: singular Hessian");
        // damped Newton ascent on the concave objective, staying in the cone
        double lam = 1.0;
        for (int bt = 0; bt < 40; ++bt) {
            Vec zt = z - lam * step;
            Vec u(d);
            u[0] = 1.0;
            u.tail(n) = zt;
            if (m.in_domain_cone(x, u) && m.eval_L(x, u) < 0.0) {
                z = zt;
                break;
            }
            lam *= 0.5;
            if (bt == 39) throw numerical_error("indicatrix maximization: step stuck at cone");
        }
        if (it == 79) throw numerical_error("indicatrix maximization: no convergence");
    }
    Vec u(d);
    u[0] = 1.0;
    u.tail(n) = z;
    return {phival, Vec(u / m.F(x, u))};
}

} // namespace detail

/// L*(omega) = -1/2 (sup over the unit-F indicatrix of omega(v))^2
inline double dual_L(const SpacetimeModel& m, const Vec& x, const Vec& omega) {
    if (!in_polar_cone(m, x, omega))
        throw domain_error("dual_L: covector outside the polar cone");
    const auto [sup, v] = detail::indicatrix_sup(m, x, omega);
    (void)v;
    return -0.5 * sup * sup;
}

/// dL/dv at (x, v), as a covector
inline Vec momentum(const SpacetimeModel& m, const Vec& x, const Vec& v) {
    Jet L = m.L_jet(x, v, 0, 1);
    Vec p(m.dim());
    for (int a = 0; a < m.dim(); ++a) p[a] = L.partial_v(a);
    return p;
}

/// Legendre transform: the unique future vector v with dL/dv(v) = omega,
/// so that L(v) = L*(omega) = omega(v)/2. Newton with Jacobian g_v.
inline Vec legendre_transform(const SpacetimeModel& m, const Vec& x, const Vec& omega,
                              double tol = 1e-12) {
    const int d = m.dim();
    if (omega.norm() == 0.0) return Vec::Zero(d);
    if (!in_polar_cone(m, x, omega))
        throw domain_error("legendre_transform: covector outside the polar cone");

    Vec v = raise_index_at(m, x, omega);
    if (m.eval_L(x, v) >= 0.0) v = m.orientation(x) * omega.norm();
    const double scale = std::max(1.0, omega.norm());
    for (int it = 0; it < 60; ++it) {
        const Vec r = momentum(m, x, v) - omega;
        if (r.norm() <= tol * scale) return v;
        const Mat g = m.fundamental_tensor(x, v);
        Vec step = g.partialPivLu().solve(r);
        if (!step.allFinite())
            throw numerical_error("legendre_transform: singular fundamental tensor");
        double lam = 1.0;
        for (int bt = 0; bt < 40; ++bt) {
            Vec vt = v - lam * step;
            if (m.in_domain_cone(x, vt) && m.eval_L(x, vt) < 0.0) {
                v = vt;
                break;
            }
            lam *= 0.5;
            if (bt == 39) throw numerical_error("legendre_transform: step stuck at cone");
        }
    }
    throw numerical_error("legendre_transform: Newton did not reach tolerance " +
                          std::to_string(tol));
}

// --- temporal-function calculus -------------------------------------------------

/// gradient vector of -f at x (f temporal: -df in the polar cone)
inline Vec gradient(const SpacetimeModel& m, const ScalarField& f, const Vec& x) {
    const Vec omega = -field_differential(m, f, x);
    if (!in_polar_cone(m, x, omega))
        throw domain_error("gradient: function is not temporal at this point");
    return legendre_transform(m, x, omega);
}

/// Hessian endomorphism of -f at x: H(v) = D^{grad}_v(grad(-f)), computed by
/// implicit differentiation of dL/dv(x, V(x)) = -df(x) through jets of f
inline Mat hessian(const SpacetimeModel& m, const ScalarField& f, const Vec& x) {
    const int d = m.dim();
    const Vec V = gradient(m, f, x);

    // d2f and the mixed derivatives of L at (x, V)
    Jet fj = field_jet(m, f, x, 2);
    Mat d2f(d, d);
    for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) {
            MultiIdx xm{}, vm{};
            xm[a]++;
            xm[b]++;
            d2f(a, b) = d2f(b, a) = fj.partial(xm, vm);
        }

    Jet L = m.L_jet(x, V, 1, 2);
    Mat g(d, d), Lxv(d, d); // Lxv(c,a) = d^2 L / dx^c dv^a
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            MultiIdx xm{}, vm{};
            vm[a]++;
            vm[b]++;
            g(a, b) = L.partial(xm, vm);
            MultiIdx xm2{}, vm2{};
            xm2[b]++;
            vm2[a]++;
            Lxv(b, a) = L.partial(xm2, vm2);
        }

    // dV^b/dx^c from g_ab dV^b/dx^c = -d2f(c,a) - Lxv(c,a)
    Mat rhs(d, d); // column c holds the covector index a
    for (int c = 0; c < d; ++c)
        for (int a = 0; a < d; ++a) rhs(a, c) = -d2f(c, a) - Lxv(c, a);
    Mat dV = g.partialPivLu().solve(rhs); // dV(b, c) = dV^b/dx^c

    // H^a_c = dV^a/dx^c + Gamma^a_{cb}(V) V^b
    auto ch = chern_at(m, x, V);
    Mat H = dV;
    for (int a = 0; a < d; ++a)
        for (int c = 0; c < d; ++c)
            H(a, c) += (ch[static_cast<std::size_t>(a)].row(c) * V)(0, 0);
    return H;
}

inline double laplacian(const SpacetimeModel& m, const ScalarField& f, const Vec& x) {
    return hessian(m, f, x).trace();
}

/// Psi-Laplacian of -f
inline double weighted_laplacian(const SpacetimeModel& m, const ScalarField& f, const Vec& x) {
    const Vec V = gradient(m, f, x);
    return hessian(m, f, x).trace() - m.dpsi(x).dot(V);
}

} // namespace lfg

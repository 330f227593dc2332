#pragma once

#include "lfg/model.hpp"

#include <functional>
#include <vector>

namespace lfg {

// Geometry of (M, L) from jets of L. All derived quantities (formal
// Christoffel symbols, spray, nonlinear connection, Chern coefficients,
// curvature endomorphism) are themselves jets, so their x/v-derivatives
// stay exact as long as the underlying jet orders allow.

namespace jetgeom {

using JetVec = std::vector<Jet>;          // dim entries
using JetMat = std::vector<std::vector<Jet>>; // dim x dim

inline JetMat jet_matrix(int d, const Jet& zero) {
    return JetMat(static_cast<std::size_t>(d), JetVec(static_cast<std::size_t>(d), zero));
}

/// Gauss-Jordan inverse of a jet-valued matrix, pivoting on values.
inline JetMat invert(const JetMat& a_in) {
    const int d = static_cast<int>(a_in.size());
    JetMat a = a_in;
    Jet zero = a[0][0] * 0.0;
    Jet one = zero + 1.0;
    JetMat inv = jet_matrix(d, zero);
    for (int i = 0; i < d; ++i) inv[i][i] = one;
    for (int col = 0; col < d; ++col) {
        int piv = col;
        for (int r = col + 1; r < d; ++r)
            if (std::abs(a[r][col].value()) > std::abs(a[piv][col].value())) piv = r;
        if (std::abs(a[piv][col].value()) < 1e-300)
            throw numerical_error("jet matrix inverse: singular fundamental tensor");
        std::swap(a[piv], a[col]);
        std::swap(inv[piv], inv[col]);
        Jet pr = a[col][col].recip();
        for (int c = 0; c < d; ++c) {
            a[col][c] = a[col][c] * pr;
            inv[col][c] = inv[col][c] * pr;
        }
        for (int r = 0; r < d; ++r) {
            if (r == col) continue;
            Jet f = a[r][col];
            for (int c = 0; c < d; ++c) {
                a[r][c] -= f * a[col][c];
                inv[r][c] -= f * inv[col][c];
            }
        }
    }
    return inv;
}

/// All connection-level jets of a model at (x, v).
struct Geometry {
    int dim;
    JetVec xj, vj;       // seeded coordinates
    Jet L;
    JetMat g, ginv;      // fundamental tensor and inverse
    std::vector<JetMat> gamma; // gamma[a][b][d]
    JetVec spray;        // G^a
    JetMat nonlinear;    // N^a_b
    std::vector<JetMat> chern; // Gamma[a][b][d]
};

/// Build the geometry jets at (x, v). x_order/v_order are the caps for the
/// jet space of L; chern needs (1,3), curvature needs (2,4).
inline Geometry build(const SpacetimeModel& m, const Vec& x, const Vec& v, int x_order,
                      int v_order, bool with_chern = true) {
    const int d = m.dim();
    auto sp = JetSpace::get(d, x_order, v_order);
    Geometry G;
    G.dim = d;
    for (int a = 0; a < d; ++a) {
        G.xj.push_back(Jet::variable_x(sp, a, x[a]));
        G.vj.push_back(Jet::variable_v(sp, a, v[a]));
    }
    if (!m.in_domain_cone(x, v))
        throw domain_error(m.name() + ": vector outside the declared domain cone");
    G.L = m.lagrangian(G.xj, G.vj);

    Jet zero = G.L * 0.0;
    G.g = jet_matrix(d, zero);
    for (int a = 0; a < d; ++a) {
        Jet dLa = G.L.deriv_v(a);
        for (int b = a; b < d; ++b) G.g[a][b] = G.g[b][a] = dLa.deriv_v(b);
    }
    G.ginv = invert(G.g);

    // formal Christoffel symbols
    std::vector<JetMat> dgdx(static_cast<std::size_t>(d));
    for (int b = 0; b < d; ++b) {
        dgdx[static_cast<std::size_t>(b)] = jet_matrix(d, zero);
        for (int l = 0; l < d; ++l)
            for (int dd = 0; dd < d; ++dd)
                dgdx[static_cast<std::size_t>(b)][l][dd] = G.g[l][dd].deriv_x(b);
    }
    G.gamma.assign(static_cast<std::size_t>(d), jet_matrix(d, zero));
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
            for (int dd = b; dd < d; ++dd) {
                Jet s = zero;
                for (int l = 0; l < d; ++l)
                    s += G.ginv[a][l] *
                         (dgdx[static_cast<std::size_t>(b)][l][dd] +
                          dgdx[static_cast<std::size_t>(dd)][b][l] -
                          dgdx[static_cast<std::size_t>(l)][b][dd]);
                G.gamma[static_cast<std::size_t>(a)][b][dd] =
                    G.gamma[static_cast<std::size_t>(a)][dd][b] = 0.5 * s;
            }

    // geodesic spray and nonlinear connection
    G.spray.assign(static_cast<std::size_t>(d), zero);
    for (int a = 0; a < d; ++a) {
        Jet s = zero;
        for (int b = 0; b < d; ++b)
            for (int dd = 0; dd < d; ++dd)
                s += G.gamma[static_cast<std::size_t>(a)][b][dd] * G.vj[b] * G.vj[dd];
        G.spray[static_cast<std::size_t>(a)] = 0.5 * s;
    }
    if (v_order >= 3) {
        G.nonlinear = jet_matrix(d, zero);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                G.nonlinear[a][b] = G.spray[static_cast<std::size_t>(a)].deriv_v(b);
    }

    if (with_chern && v_order >= 3) {
        std::vector<JetMat> dgdv(static_cast<std::size_t>(d));
        for (int mu = 0; mu < d; ++mu) {
            dgdv[static_cast<std::size_t>(mu)] = jet_matrix(d, zero);
            for (int l = 0; l < d; ++l)
                for (int dd = 0; dd < d; ++dd)
                    dgdv[static_cast<std::size_t>(mu)][l][dd] = G.g[l][dd].deriv_v(mu);
        }
        G.chern.assign(static_cast<std::size_t>(d), jet_matrix(d, zero));
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                for (int dd = b; dd < d; ++dd) {
                    Jet s = zero;
                    for (int l = 0; l < d; ++l) {
                        Jet t = zero;
                        for (int mu = 0; mu < d; ++mu)
                            t += dgdv[static_cast<std::size_t>(mu)][l][dd] * G.nonlinear[mu][b] +
                                 dgdv[static_cast<std::size_t>(mu)][b][l] * G.nonlinear[mu][dd] -
                                 dgdv[static_cast<std::size_t>(mu)][b][dd] * G.nonlinear[mu][l];
                        s += G.ginv[a][l] * t;
                    }
                    G.chern[static_cast<std::size_t>(a)][b][dd] =
                        G.chern[static_cast<std::size_t>(a)][dd][b] =
                            G.gamma[static_cast<std::size_t>(a)][b][dd] - 0.5 * s;
                }
    }
    return G;
}

} // namespace jetgeom

/// Connection coefficients of (M, L) at a base point (x, v).
struct ConnectionData {
    Vec x, v;
    std::vector<Mat> gamma; // formal Christoffel gamma[a](b,d)
    Vec spray;              // G^a
    Mat nonlinear;          // N^a_b
    std::vector<Mat> chern; // Chern connection Gamma[a](b,d)
};

inline ConnectionData connection_at(const SpacetimeModel& m, const Vec& x, const Vec& v) {
    auto G = jetgeom::build(m, x, v, 1, 3);
    const int d = m.dim();
    ConnectionData c;
    c.x = x;
    c.v = v;
    c.spray = Vec(d);
    c.nonlinear = Mat(d, d);
    for (int a = 0; a < d; ++a) {
        c.spray[a] = G.spray[static_cast<std::size_t>(a)].value();
        for (int b = 0; b < d; ++b) c.nonlinear(a, b) = G.nonlinear[a][b].value();
    }
    for (int a = 0; a < d; ++a) {
        Mat ga(d, d), ch(d, d);
        for (int b = 0; b < d; ++b)
            for (int dd = 0; dd < d; ++dd) {
                ga(b, dd) = G.gamma[static_cast<std::size_t>(a)][b][dd].value();
                ch(b, dd) = G.chern[static_cast<std::size_t>(a)][b][dd].value();
            }
        c.gamma.push_back(ga);
        c.chern.push_back(ch);
    }
    return c;
}

/// Geodesic spray values only (cheap path for the integrator).
inline Vec spray_at(const SpacetimeModel& m, const Vec& x, const Vec& v) {
    auto G = jetgeom::build(m, x, v, 1, 2, /*with_chern=*/false);
    Vec s(m.dim());
    for (int a = 0; a < m.dim(); ++a) s[a] = G.spray[static_cast<std::size_t>(a)].value();
    return s;
}

/// Chern coefficients with reference vector w, as dim matrices.
inline std::vector<Mat> chern_at(const SpacetimeModel& m, const Vec& x, const Vec& w) {
    auto c = jetgeom::build(m, x, w, 1, 3);
    const int d = m.dim();
    std::vector<Mat> out;
    for (int a = 0; a < d; ++a) {
        Mat ch(d, d);
        for (int b = 0; b < d; ++b)
            for (int dd = 0; dd < d; ++dd)
                ch(b, dd) = c.chern[static_cast<std::size_t>(a)][b][dd].value();
        out.push_back(ch);
    }
    return out;
}

/// a vector field given as a jet-evaluable map of the point
using JetVectorField = std::function<std::vector<Jet>(std::span<const Jet>)>;

/// D_v^w V at x per the Chern covariant derivative with reference vector w.
inline Vec covariant_derivative(const SpacetimeModel& m, const Vec& x, const JetVectorField& V,
                                const Vec& v, const Vec& w) {
    const int d = m.dim();
    auto sp = JetSpace::get(d, 1, 0);
    std::vector<Jet> xj;
    for (int a = 0; a < d; ++a) xj.push_back(Jet::variable_x(sp, a, x[a]));
    auto Vj = V(xj);
    auto ch = chern_at(m, x, w);
    Vec out = Vec::Zero(d);
    for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
            out[a] += v[b] * Vj[static_cast<std::size_t>(a)].partial_x(b);
            for (int dd = 0; dd < d; ++dd)
                out[a] += ch[static_cast<std::size_t>(a)](b, dd) * v[b] *
                          Vj[static_cast<std::size_t>(dd)].value();
        }
    }
    return out;
}

/// Berwald audit: max over sampled v-pairs of the Chern-coefficient spread
/// per sampled base point, nondimensionalized by the local g scale.
inline ScenarioReport berwald_audit(const SpacetimeModel& m, const std::vector<Vec>& x_samples,
                                    int v_samples_per_x, double tau_berwald = 1e-8) {
    ScenarioReport rep;
    rep.experiment = "berwald";
    rep.echo("model", m.name());
    rep.echo("v_samples_per_x", std::to_string(v_samples_per_x));

    const int d = m.dim();
    double worst = 0.0;
    auto dirs = halton_points(v_samples_per_x, d);
    for (const auto& x : x_samples) {
        std::vector<Vec> vs;
        vs.push_back(m.orientation(x));
        for (const auto& h : dirs) {
            Vec dir(d);
            for (int a = 0; a < d; ++a) dir[a] = 2.0 * h[a] - 1.0;
            vs.push_back(cone_vector(m, x, dir, 0.35 + 0.6 * h[0], 1.0));
        }
        std::vector<Mat> ref;
        double scale = 1.0;
        for (std::size_t k = 0; k < vs.size(); ++k) {
            auto ch = chern_at(m, x, vs[k]);
            if (k == 0) {
                ref = ch;
                scale = m.fundamental_tensor(x, vs[0]).cwiseAbs().maxCoeff();
                continue;
            }
            for (int a = 0; a < d; ++a)
                worst = std::max(worst,
                                 (ch[static_cast<std::size_t>(a)] - ref[static_cast<std::size_t>(a)])
                                         .cwiseAbs()
                                         .maxCoeff() /
                                     scale);
        }
    }
    auto& c = rep.add("chern coefficient spread over v", worst, tau_berwald);
    c.note = worst <= tau_berwald ? "verdict: Berwald" : "verdict: non-Berwald";
    return rep;
}

} // namespace lfg

#pragma once

#include "lfg/geodesic.hpp"

namespace lfg {

// Lagrange tensors along a unit-speed timelike geodesic zeta: the n x n
// matrix J(t) on the g_{zdot}-orthogonal complement N_zeta(t), expressed in
// a parallel g_{zdot}-orthonormal frame, together with B = J' J^{-1} and the
// weighted quantities built from it.

/// initial g_v-orthonormal basis of the complement of v at x (d x n)
inline Mat orthonormal_complement(const SpacetimeModel& m, const Vec& x, const Vec& v) {
    const int d = m.dim();
    const int n = d - 1;
    const Mat g = m.fundamental_tensor(x, v);
    const double gvv = v.dot(g * v);
    if (gvv >= 0.0) throw config_error("orthonormal_complement: v must be timelike");

    Mat E(d, n);
    int col = 0;
    for (int a = 0; a < d && col < n; ++a) {
        Vec e = Vec::Zero(d);
        e[a] = 1.0;
        e -= (e.dot(g * v) / gvv) * v; // project g-orthogonal to v
        for (int j = 0; j < col; ++j) e -= e.dot(g * E.col(j)) * E.col(j);
        const double nrm2 = e.dot(g * e);
        if (nrm2 < 1e-12) continue; // axis parallel to v
        E.col(col++) = e / std::sqrt(nrm2);
    }
    if (col != n) throw numerical_error("orthonormal_complement: frame construction failed");
    return E;
}

struct CongruenceState {
    const SpacetimeModel* model = nullptr;
    int d = 0, n = 0;
    double t0 = 0, t1 = 0;
    Vec x0, v0;
    DenseSolution sol; // state: x(d), v(d), E(d*n), J(d*n), W(d*n)
    bool conjugate = false;
    double conjugate_time = 0;

    Vec position(double t) const { return sol(t).head(d); }
    Vec velocity(double t) const { return sol(t).segment(d, d); }
    Mat frame(double t) const {
        const Vec y = sol(t);
        return Eigen::Map<const Mat>(y.data() + 2 * d, d, n);
    }
    Mat J_full(double t) const {
        const Vec y = sol(t);
        return Eigen::Map<const Mat>(y.data() + 2 * d + d * n, d, n);
    }
    Mat W_full(double t) const {
        const Vec y = sol(t);
        return Eigen::Map<const Mat>(y.data() + 2 * d + 2 * d * n, d, n);
    }

    /// J and DJ in the parallel frame (n x n): components g_{zdot}(e_i, .)
    std::pair<Mat, Mat> J_frame(double t) const {
        const Vec y = sol(t);
        const Vec x = y.head(d), v = y.segment(d, d);
        const Mat g = model->fundamental_tensor(x, v);
        const Mat E = frame(t);
        return {Mat(E.transpose() * g * J_full(t)), Mat(E.transpose() * g * W_full(t))};
    }

    Mat B(double t) const {
        auto [J, W] = J_frame(t);
        Eigen::PartialPivLU<Mat> lu(J.transpose()); // B = W J^{-1} via solving J^T B^T = W^T
        Mat Bt = lu.solve(W.transpose()).transpose();
        if (!Bt.allFinite()) throw numerical_error("CongruenceState: singular J (conjugate point)");
        return Bt;
    }

    double theta(double t) const { return B(t).trace(); }

    /// worst deviation from g_{zdot}-orthonormality of the frame at t
    double frame_residual(double t) const {
        const Vec y = sol(t);
        const Vec x = y.head(d), v = y.segment(d, d);
        const Mat g = model->fundamental_tensor(x, v);
        const Mat E = frame(t);
        double r = (E.transpose() * g * E - Mat::Identity(n, n)).cwiseAbs().maxCoeff();
        r = std::max(r, (E.transpose() * g * v).cwiseAbs().maxCoeff());
        return r;
    }

    double psi(double t) const { return model->psi(position(t)); }
    double psi_prime(double t) const { return model->dpsi(position(t)).dot(velocity(t)); }
};

/// integrate the Lagrange tensor with initial data J0, DJ0 (n x n, frame
/// coordinates) along the geodesic from (x0, v0); F(v0) = 1 expected
inline CongruenceState evolve_lagrange(const SpacetimeModel& m, const Vec& x0, const Vec& v0,
                                       double t0, double t1, const Mat& J0, const Mat& DJ0,
                                       const OdeOptions& opt = {}) {
    const int d = m.dim();
    const int n = d - 1;
    if (std::abs(m.F(x0, v0) - 1.0) > 1e-9)
        throw config_error("evolve_lagrange: geodesic must be unit-speed (F(v0) = 1)");
    if (J0.rows() != n || J0.cols() != n || DJ0.rows() != n || DJ0.cols() != n)
        throw config_error("evolve_lagrange: J0, DJ0 must be n x n");

    const Mat E0 = orthonormal_complement(m, x0, v0);

    auto rhs = [&m, d, n](double, const Vec& y) {
        const Vec xx = y.head(d), vv = y.segment(d, d);
        auto G = jetgeom::build(m, xx, vv, 2, 4);
        Vec spray(d);
        for (int a = 0; a < d; ++a) spray[a] = G.spray[static_cast<std::size_t>(a)].value();
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

        const Eigen::Map<const Mat> E(y.data() + 2 * d, d, n);
        const Eigen::Map<const Mat> J(y.data() + 2 * d + d * n, d, n);
        const Eigen::Map<const Mat> W(y.data() + 2 * d + 2 * d * n, d, n);
        Vec dy(2 * d + 3 * d * n);
        dy.head(d) = vv;
        dy.segment(d, d) = -2.0 * spray;
        Eigen::Map<Mat>(dy.data() + 2 * d, d, n) = -C * E;
        Eigen::Map<Mat>(dy.data() + 2 * d + d * n, d, n) = W - C * J;
        Eigen::Map<Mat>(dy.data() + 2 * d + 2 * d * n, d, n) = -R * J - C * W;
        return dy;
    };

    Vec y0(2 * d + 3 * d * n);
    y0.head(d) = x0;
    y0.segment(d, d) = v0;
    Eigen::Map<Mat>(y0.data() + 2 * d, d, n) = E0;
    Eigen::Map<Mat>(y0.data() + 2 * d + d * n, d, n) = E0 * J0;
    Eigen::Map<Mat>(y0.data() + 2 * d + 2 * d * n, d, n) = E0 * DJ0;

    CongruenceState st;
    st.model = &m;
    st.d = d;
    st.n = n;
    st.t0 = t0;
    st.t1 = t1;
    st.x0 = x0;
    st.v0 = v0;
    st.sol = integrate_ode(rhs, std::move(y0), t0, t1, opt);

    // conjugate-point scan: relative determinant collapse of J in the frame
    double detscale = 0.0;
    const int probes = 64;
    for (int i = 1; i <= probes; ++i) {
        const double t = t0 + (st.sol.t_end() - t0) * i / probes;
        auto [J, W] = st.J_frame(t);
        (void)W;
        const double det = std::abs(J.determinant());
        if (det > detscale) detscale = det;
        if (detscale > 0.0 && det < 1e-10 * detscale) {
            st.conjugate = true;
            st.conjugate_time = t;
            st.t1 = t;
            break;
        }
    }
    return st;
}

// --- weighted quantities --------------------------------------------------------

struct WeightedCongruence {
    double t;
    Mat B_eps;        // n x n
    double theta_eps;
    Mat sigma_eps;    // trace-free part
    double psi, psi_prime;
};

inline WeightedCongruence weighted_quantities(const CongruenceState& st, double eps, double t) {
    const int n = st.n;
    WeightedCongruence w;
    w.t = t;
    w.psi = st.psi(t);
    w.psi_prime = st.psi_prime(t);
    const double factor = std::exp(2.0 * (1.0 - eps) / n * w.psi);
    w.B_eps = factor * (st.B(t) - (w.psi_prime / n) * Mat::Identity(n, n));
    w.theta_eps = w.B_eps.trace();
    w.sigma_eps = w.B_eps - (w.theta_eps / n) * Mat::Identity(n, n);
    return w;
}

/// reparametrization integral phi(t) = int_0^t e^{(2(eps-1)/n) Psi(zeta(s))} ds
/// by composite Gauss-Legendre along the integrated geodesic
inline double phi_zeta(const CongruenceState& st, double eps, double t, int panels = 32) {
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
    const int n = st.n;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double a = t * p / panels, b = t * (p + 1) / panels;
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (int q = 0; q < 7; ++q) {
            const double s = mid + half * node[q];
            total += half * wt[q] * std::exp(2.0 * (eps - 1.0) / n * st.psi(s));
        }
    }
    return total;
}

// --- Raychaudhuri residual -------------------------------------------------------

struct RaychaudhuriSample {
    double t;
    double theta_eps;
    double theta_star;      // e^{(2(1-eps)/n) Psi} theta_eps'
    double term_theta_star; // the five terms of the identity
    double term_c_theta2;
    double term_middle;
    double term_shear;
    double term_ric;
    double residual;        // |sum| / max(|term|)
};

/// evaluate the weighted Raychaudhuri identity at t; theta_eps' comes from a
/// five-point finite difference of the integrated trajectory (no analytic
/// shortcut through the Riccati equation)
inline RaychaudhuriSample raychaudhuri_residual_at(const SpacetimeModel& m,
                                                   const CongruenceState& st, double N,
                                                   double eps, double t) {
    const int n = st.n;
    if (!epsilon_admissible(N, eps, n))
        throw config_error("raychaudhuri: (N, eps) outside the admissible range");
    const double c = epsilon_admissible(N, eps, n)->c;

    const bool n_limit = (N == static_cast<double>(n));
    if (n_limit && std::abs(st.psi_prime(t)) > 1e-10)
        throw config_error("raychaudhuri: N = n requires (Psi o zeta)' = 0 along the geodesic");

    auto theta_eps_at = [&](double s) { return weighted_quantities(st, eps, s).theta_eps; };

    RaychaudhuriSample out;
    out.t = t;
    auto w = weighted_quantities(st, eps, t);
    out.theta_eps = w.theta_eps;
    const double factor = std::exp(2.0 * (1.0 - eps) / n * w.psi);

    // five-point first derivative, step proportional to t (theta ~ n/t scale)
    double h = 0.004 * std::max(std::abs(t), 0.05);
    h = std::min(h, 0.45 * std::min(t - st.t0, st.sol.t_end() - t));
    if (h <= 0.0) throw config_error("raychaudhuri: t too close to the trajectory ends");
    const double dtheta = (-theta_eps_at(t + 2 * h) + 8 * theta_eps_at(t + h) -
                           8 * theta_eps_at(t - h) + theta_eps_at(t - 2 * h)) /
                          (12 * h);
    out.theta_star = factor * dtheta;

    const double psi_star = factor * w.psi_prime;
    out.term_theta_star = out.theta_star;
    out.term_c_theta2 = c * w.theta_eps * w.theta_eps;

    if (N == kInfinity) {
        // analytic limit of the expanded square
        out.term_middle = (eps * w.theta_eps + psi_star) * (eps * w.theta_eps + psi_star) / n;
    } else if (n_limit) {
        // (Psi o zeta)' = 0 checked above; the square collapses
        out.term_middle = 0.0;
    } else {
        const double inner = eps * w.theta_eps / N + psi_star / (N - n);
        out.term_middle = N * (N - n) / n * inner * inner;
    }

    out.term_shear = (w.sigma_eps * w.sigma_eps).trace();

    // Ric_N(zeta^*) = factor^2 Ric_N(zdot) by 2-homogeneity
    const double ricN = weighted_ricci(m, st.position(t), st.velocity(t), N, n_limit);
    out.term_ric = factor * factor * ricN;

    const double sum = out.term_theta_star + out.term_c_theta2 + out.term_middle +
                       out.term_shear + out.term_ric;
    const double scale =
        std::max({std::abs(out.term_theta_star), std::abs(out.term_c_theta2),
                  std::abs(out.term_middle), std::abs(out.term_shear), std::abs(out.term_ric),
                  1e-30});
    out.residual = std::abs(sum) / scale;
    return out;
}

inline ScenarioReport raychaudhuri_report(const SpacetimeModel& m, const CongruenceState& st,
                                          double N, double eps, const std::vector<double>& grid,
                                          double tol = 1e-6) {
    ScenarioReport rep;
    rep.experiment = "raychaudhuri";
    rep.echo("model", m.name());
    rep.echo("N", N == kInfinity ? "inf" : std::to_string(N));
    rep.echo("eps", std::to_string(eps));
    double worst = 0.0;
    for (double t : grid) {
        auto s = raychaudhuri_residual_at(m, st, N, eps, t);
        worst = std::max(worst, s.residual);
    }
    rep.add("weighted Raychaudhuri identity residual (nondimensionalized)", worst, tol);
    return rep;
}

/// CSV rows (t, theta_eps, trace sigma_eps^2, residual)
inline std::string congruence_csv(const SpacetimeModel& m, const CongruenceState& st, double N,
                                  double eps, const std::vector<double>& grid) {
    CsvWriter csv({"t", "theta_eps", "trace_sigma_eps_sq", "residual"});
    for (double t : grid) {
        auto s = raychaudhuri_residual_at(m, st, N, eps, t);
        csv.row({t, s.theta_eps, s.term_shear, s.residual});
    }
    return csv.body();
}

} // namespace lfg

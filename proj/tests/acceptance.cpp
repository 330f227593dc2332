// Acceptance harness: one pass/fail line per criterion, exit 0 iff all pass.
// Each criterion pins its residual tolerances and a wall-clock budget.

#include "lfg/experiments.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>

using namespace lfg;

namespace {

Vec vec(std::initializer_list<double> xs) {
    Vec v(static_cast<int>(xs.size()));
    int i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

// u(x) = sqrt((x^0)^2 - |x bar|^2), Lorentzian distance from the origin
ScalarField minkowski_distance_field() {
    return [](std::span<const Jet> xj) {
        Jet s = sqr(xj[0]);
        for (std::size_t i = 1; i < xj.size(); ++i) s -= sqr(xj[i]);
        return sqrt(s);
    };
}

std::vector<double> uniform_grid(double a, double b, int count) {
    std::vector<double> g;
    for (int i = 0; i < count; ++i) g.push_back(a + (b - a) * i / (count - 1));
    return g;
}

struct Outcome {
    bool pass = true;
    double worst = 0.0;
    std::string detail;

    void bound(double residual, double tol, const std::string& what) {
        worst = std::max(worst, residual);
        if (residual <= tol) return;
        pass = false;
        char buf[64];
        std::snprintf(buf, sizeof buf, " [%s: %.3e > %.1e]", what.c_str(), residual, tol);
        detail += buf;
    }

    void require(bool ok, const std::string& what) {
        if (ok) return;
        pass = false;
        detail += " [" + what + "]";
    }
};

// 1. Euler identity and homogeneity of g on 1e4 samples per model
Outcome criterion_euler() {
    Outcome out;
    for (const auto& name : model_names()) {
        auto m = make_model(name, 3);
        auto rep = audit_model(*m, 10000, 20260823);
        for (const auto& c : rep.checks) {
            if (c.name.rfind("euler", 0) == 0) out.bound(c.residual, 1e-12, name + " euler");
            if (c.name.rfind("g 0-homogeneity", 0) == 0)
                out.bound(c.residual, 1e-12, name + " g(cv)=g(v)");
        }
    }
    return out;
}

// 2. Connection vs hand Christoffels; Berwald classification of the built-ins
Outcome criterion_connection() {
    Outcome out;
    auto mk = make_model("minkowski", 4);
    for (const auto& h : halton_points(5, 8)) {
        Vec x(4), v(4);
        for (int a = 0; a < 4; ++a) {
            x[a] = h[a] - 0.5;
            v[a] = 0.4 * (h[a + 4] - 0.5);
        }
        v[0] = 1.0;
        auto c = connection_at(*mk, x, v);
        double worst = c.spray.cwiseAbs().maxCoeff();
        for (const auto& g : c.gamma) worst = std::max(worst, g.cwiseAbs().maxCoeff());
        for (const auto& g : c.chern) worst = std::max(worst, g.cwiseAbs().maxCoeff());
        out.bound(worst, 1e-10, "minkowski Gamma = 0");
    }

    const double a = 0.8;
    auto fl = make_model("flrw", 3, {{"rate", a}});
    for (const auto& h : halton_points(5, 6)) {
        Vec x(3), v(3);
        for (int i = 0; i < 3; ++i) {
            x[i] = h[i] - 0.5;
            v[i] = 0.3 * (h[i + 3] - 0.5);
        }
        v[0] = 1.0;
        auto c = connection_at(*fl, x, v);
        const double e2t = std::exp(2.0 * a * x[0]);
        std::vector<Mat> expect(3, Mat::Zero(3, 3));
        for (int i = 1; i < 3; ++i) {
            expect[0](i, i) = a * e2t;
            expect[static_cast<std::size_t>(i)](0, i) = a;
            expect[static_cast<std::size_t>(i)](i, 0) = a;
        }
        double worst = 0.0;
        for (int al = 0; al < 3; ++al)
            worst = std::max(worst, (c.gamma[static_cast<std::size_t>(al)] -
                                     expect[static_cast<std::size_t>(al)])
                                        .cwiseAbs()
                                        .maxCoeff());
        out.bound(worst, 1e-10, "flrw hand Christoffels");
    }

    std::vector<Vec> xs = {vec({0.1, 0.2, -0.3}), vec({-0.4, 0.5, 0.0})};
    for (const auto& name : model_names()) {
        auto m = make_model(name, 3);
        const bool expect_berwald = (name != "nonberwald-quartic");
        auto rep = berwald_audit(*m, xs, 8);
        out.require((rep.verdict() == Verdict::pass) == expect_berwald,
                    name + (expect_berwald ? " should classify Berwald"
                                           : " should classify non-Berwald"));
    }
    return out;
}

// 3. Geodesic conservation, Jacobi-vs-variation oracle, BVP self-consistency
Outcome criterion_geodesic() {
    Outcome out;
    for (const char* name : {"flrw", "nonberwald-quartic", "weighted-minkowski"}) {
        auto m = make_model(name, 3);
        auto seg = integrate_geodesic(*m, Vec(Vec::Zero(3)), vec({1, 0.3, -0.15}), 0.0, 2.0);
        out.require(!seg.cone_exit, std::string(name) + " cone exit");
        out.bound(seg.L_drift / 2.0, 1e-8, std::string(name) + " L drift per unit t");
    }

    // Jacobi field against the finite-difference geodesic variation on flrw
    auto fl = make_model("flrw", 2, {{"rate", 1.0}});
    Vec x2 = vec({0.0, 0.1}), v2 = vec({1, 0.25});
    Mat J02(2, 1), W02(2, 1);
    J02 << 0.2, -0.3;
    W02 << 0.05, 0.4;
    auto jf = integrate_jacobi(*fl, x2, v2, 0.0, 1.0, J02, W02);
    const double s = 1e-5;
    auto base = integrate_geodesic(*fl, x2, v2, 0.0, 1.0);
    auto ch = chern_at(*fl, x2, v2);
    Vec jdot0 = W02.col(0);
    for (int al = 0; al < 2; ++al)
        jdot0[al] -= (v2.transpose() * ch[static_cast<std::size_t>(al)] * J02.col(0))(0, 0);
    auto pert = integrate_geodesic(*fl, Vec(x2 + s * J02.col(0)), Vec(v2 + s * jdot0), 0.0, 1.0);
    for (double t : {0.3, 0.7, 1.0}) {
        Vec fd = (pert.position(t) - base.position(t)) / s;
        out.bound((fd - jf.J(t).col(0)).norm() / std::max(1.0, fd.norm()), 1e-4,
                  "jacobi vs variation");
    }

    // local_distance(x, exp_x(v)) = F(v) inside the convexity radius
    for (const char* name : {"minkowski", "flrw", "flat-quartic"}) {
        auto m = make_model(name, 3);
        for (const auto& h : halton_points(6, 3, 3)) {
            Vec x = Vec::Zero(3), dir(3);
            for (int al = 0; al < 3; ++al) dir[al] = 2.0 * h[al] - 1.0;
            const Vec v = cone_vector(*m, x, dir, 0.8 * h[1], 0.3);
            const Vec y = exponential_map(*m, x, v);
            const double F = m->F(x, v);
            out.bound(std::abs(local_distance(*m, x, y) - F) / F, 1e-8,
                      std::string(name) + " bvp self-consistency");
        }
    }
    return out;
}

// 4. Legendre transform: round trip, reverse Cauchy-Schwarz on 1e4 pairs,
//    Hessian symmetry, Berwald second-derivative law
Outcome criterion_legendre() {
    Outcome out;
    for (const char* name : {"minkowski", "flrw", "flat-quartic", "nonberwald-quartic"}) {
        auto m = make_model(name, 3);
        Vec x = vec({0.3, -0.2, 0.1});
        for (const auto& h : halton_points(24, 3)) {
            Vec dir(3);
            for (int al = 0; al < 3; ++al) dir[al] = 2.0 * h[al] - 1.0;
            Vec omega = momentum(*m, x, cone_vector(*m, x, dir, 0.8 * h[0], 0.5 + h[1]));
            Vec v = legendre_transform(*m, x, omega);
            out.bound((momentum(*m, x, v) - omega).norm(), 1e-9,
                      std::string(name) + " round trip");
        }
    }

    for (const char* name : {"minkowski", "flat-quartic"}) {
        auto m = make_model(name, 3);
        Vec x = vec({0.1, 0.2, -0.3});
        auto oms = halton_points(100, 3, 7);
        auto vs = halton_points(100, 3, 211);
        double worst_violation = 0.0;
        for (const auto& ho : oms) {
            Vec diro(3);
            for (int al = 0; al < 3; ++al) diro[al] = 2.0 * ho[al] - 1.0;
            Vec omega = momentum(*m, x, cone_vector(*m, x, diro, 0.85 * ho[1], 1.0));
            const double Ls = dual_L(*m, x, omega);
            for (const auto& hv : vs) {
                Vec dirv(3);
                for (int al = 0; al < 3; ++al) dirv[al] = 2.0 * hv[al] - 1.0;
                Vec v = cone_vector(*m, x, dirv, 0.9 * hv[2], 0.3 + 2.0 * hv[0]);
                const double lhs = Ls * m->eval_L(x, v);
                const double rhs = 0.25 * omega.dot(v) * omega.dot(v);
                worst_violation =
                    std::max(worst_violation, (lhs - rhs) / std::max(1.0, std::abs(rhs)));
            }
            Vec veq = legendre_transform(*m, x, omega);
            const double lhs = Ls * m->eval_L(x, veq);
            const double rhs = 0.25 * omega.dot(veq) * omega.dot(veq);
            out.bound(std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)), 1e-9,
                      std::string(name) + " equality at transform");
        }
        out.bound(worst_violation, 1e-12, std::string(name) + " reverse Cauchy-Schwarz");
    }

    ScalarField wavy = [](std::span<const Jet> xj) {
        return xj[0] + 0.15 * sin(xj[1]) + 0.1 * xj[2] * xj[2];
    };
    for (const char* name : {"flat-quartic", "flrw"}) {
        auto m = make_model(name, 3);
        Vec x = vec({0.4, 0.3, -0.2});
        Vec V = gradient(*m, wavy, x);
        Mat H = hessian(*m, wavy, x);
        const Mat S = m->fundamental_tensor(x, V) * H;
        out.bound((S - S.transpose()).cwiseAbs().maxCoeff(), 1e-8,
                  std::string(name) + " hessian symmetry");
    }

    // Berwald law (-f o xi)''(0) = g_V(H v, v) against a 5-point difference
    struct Case {
        const char* model;
        ScalarField f;
    };
    std::vector<Case> cases = {{"flrw", [](std::span<const Jet> xj) { return xj[0]; }},
                               {"minkowski", minkowski_distance_field()}};
    for (auto& c : cases) {
        auto m = make_model(c.model, 2);
        Vec x = vec({1.0, 0.2}), v = vec({0.8, 0.3});
        Vec V = gradient(*m, c.f, x);
        Mat H = hessian(*m, c.f, x);
        const double lhs = v.dot(m->fundamental_tensor(x, V) * (H * v));
        OdeOptions tight;
        tight.abs_tol = tight.rel_tol = 1e-13;
        auto seg = integrate_geodesic(*m, x, v, 0.0, 0.2, tight);
        auto segb = integrate_geodesic(*m, x, Vec(-v), 0.0, 0.2, tight);
        auto feval = [&](double t) {
            Vec p = t >= 0 ? seg.position(t) : segb.position(-t);
            auto sp = JetSpace::get(2, 0, 0);
            std::vector<Jet> xj;
            for (int al = 0; al < 2; ++al) xj.push_back(Jet::constant(sp, p[al]));
            return -c.f(xj).value();
        };
        const double h = 0.02;
        const double fd = (-feval(2 * h) + 16 * feval(h) - 30 * feval(0) + 16 * feval(-h) -
                           feval(-2 * h)) /
                          (12 * h * h);
        out.bound(std::abs(fd - lhs), 1e-7, std::string(c.model) + " second-derivative law");
    }
    return out;
}

// 5. Weighted Raychaudhuri identity over the (model, N, eps) matrix
Outcome criterion_raychaudhuri() {
    Outcome out;
    const int n = 2; // dim 3
    const auto grid = uniform_grid(0.1, 5.0, 15);
    int checked = 0, rejected = 0;
    for (const char* name : {"minkowski", "weighted-minkowski", "flrw"}) {
        auto m = make_model(name, 3);
        auto st = evolve_lagrange(*m, Vec(Vec::Zero(3)), vec({1, 0, 0}), 0.0, 5.3,
                                  Mat::Zero(n, n), Mat::Identity(n, n));
        const bool weighted = std::string(name) == "weighted-minkowski";
        for (double N : {2.0, 4.0, kInfinity, -1.0}) {
            for (double eps : {0.0, 0.5, 1.0}) {
                if (!epsilon_admissible(N, eps, n)) {
                    // eq:erange rejections: eps=1 at N=inf and N=-1
                    out.require(eps == 1.0 && (N == kInfinity || N == -1.0),
                                "unexpected rejection");
                    ++rejected;
                    continue;
                }
                if (N == n && weighted) {
                    // N = n needs (Psi o zeta)' = 0; must be refused, not computed
                    bool threw = false;
                    try {
                        raychaudhuri_report(*m, st, N, eps, grid, 1e-6);
                    } catch (const config_error&) {
                        threw = true;
                    }
                    out.require(threw, "N = n with Psi' != 0 not refused");
                    ++rejected;
                    continue;
                }
                auto rep = raychaudhuri_report(*m, st, N, eps, grid, 1e-6);
                out.bound(rep.checks.at(0).residual, 1e-6,
                          std::string(name) + " N=" + std::to_string(N) +
                              " eps=" + std::to_string(eps));
                ++checked;
            }
        }
    }
    out.require(checked == 27 && rejected == 9, "combination count");
    return out;
}

// 6. Laplacian comparison with the Minkowski equality case
Outcome criterion_laplacian() {
    Outcome out;
    const int n = 2;
    const auto grid = uniform_grid(0.1, 5.0, 12);
    for (const char* name : {"minkowski", "weighted-minkowski"}) {
        auto m = make_model(name, 3); // weight Psi = -0.5 x^0, a <= 0
        auto rep = verify_laplacian_comparison(*m, Vec(Vec::Zero(3)), vec({1, 0, 0}), kInfinity,
                                               0.0, grid, 1e-6);
        out.require(!rep.precondition_failed, std::string(name) + " precondition");
        out.bound(rep.checks.at(0).residual, 1e-6, std::string(name) + " comparison margin");
        auto repr = verify_laplacian_comparison_reverse(*m, Vec(Vec::Zero(3)), vec({1, 0, 0}),
                                                        kInfinity, 0.0, grid, 1e-6);
        out.bound(repr.checks.at(0).residual, 1e-6,
                  std::string(name) + " reverse comparison margin");
    }

    // Minkowski eps=0: LHS = n/t = RHS with c = 1/n, equality within 1e-9
    auto mk = make_model("minkowski", 3);
    auto st = evolve_lagrange(*mk, Vec(Vec::Zero(3)), vec({1, 0, 0}), 0.0, 5.3, Mat::Zero(n, n),
                              Mat::Identity(n, n));
    double worst = 0.0;
    for (double t : grid) {
        const double lhs = st.theta(t) - st.psi_prime(t);
        const double rhs = 1.0 / ((1.0 / n) * phi_zeta(st, 0.0, t));
        worst = std::max(worst, std::abs(lhs - rhs) * t);
    }
    out.bound(worst, 1e-9, "minkowski equality");
    return out;
}

// 7. Busemann functions: closed form, monotonicity, support inequality, b + bbar
Outcome criterion_busemann() {
    Outcome out;
    auto m = make_model("minkowski", 3);
    auto ray = make_ray(*m, Vec(Vec::Zero(3)), vec({1, 0, 0}), 45.0);
    const std::vector<double> grid{2, 5, 10, 20, 40};
    auto ev = busemann_truncated(*m, ray, vec({0, 0.5, 0}), grid);
    out.bound(std::abs(ev.limit - 0.0), 2e-3, "extrapolation vs closed form x^0");
    out.bound(ev.worst_monotonicity_violation, 1e-9, "b_t monotonicity");

    // support function rho >= b_t' for t' >> t near the base point
    auto eta = make_ray(*m, Vec(Vec::Zero(3)), vec({1, 0, 0}), 900.0);
    Vec z = vec({0, 0.5, 0});
    auto zeta = make_ray(*m, z, vec({1, 0, 0}), 10.0);
    auto rho = support_function(*m, zeta, 1.0, 0.0);
    int tested = 0;
    for (const auto& h : halton_points(60, 3)) {
        Vec x = z;
        for (int al = 0; al < 3; ++al) x[al] += 0.5 * h[al] - 0.25;
        if ((x.tail(2) - z.tail(2)).norm() < 0.08) continue;
        const double d = chained_distance(*m, x, eta.point(800.0));
        if (d == 0.0) continue;
        out.bound((800.0 - d) - rho(x), 1e-6, "support inequality margin");
        ++tested;
    }
    out.require(tested >= 30, "support samples");

    for (const char* name : {"minkowski", "flat-quartic"}) {
        auto mm = make_model(name, 3);
        auto line = make_line(*mm, Vec(Vec::Zero(3)), vec({1, 0, 0}), 45.0);
        auto fwd = forward_ray(line);
        for (auto xi : {vec({0.3, 0.2, -0.1}), vec({-0.4, 0.05, 0.1})}) {
            auto b = busemann_truncated(*mm, fwd, xi, grid);
            auto bb = reverse_busemann(*mm, line, xi, grid);
            out.bound(std::abs(b.limit + bb.limit), 2e-3, std::string(name) + " b + bbar");
        }
    }
    return out;
}

// 8. Splitting certificates and their negative controls
Outcome criterion_splitting() {
    Outcome out;
    Vec z = Vec::Zero(3);
    for (const char* name : {"minkowski", "flat-quartic"}) {
        auto m = make_model(name, 3);
        auto cert = verify_splitting(*m, z);
        out.require(cert.pass(), std::string(name) + " certificate");
    }
    auto nb = make_model("nonberwald-quartic", 3, {{"eps", 0.1}});
    auto certn = verify_splitting(*nb, z);
    out.require(certn.failed_checks() == std::vector<std::string>{"translation_drift"},
                "nonberwald-quartic must fail exactly translation_drift");
    auto wm = make_model("weighted-minkowski", 3);
    auto certw = verify_splitting(*wm, z);
    out.require(certw.failed_checks() == std::vector<std::string>{"psi_drift"},
                "timelike-gradient weight must fail exactly psi_drift");
    return out;
}

// 9. Epsilon-range admissibility table
Outcome criterion_erange() {
    Outcome out;
    const int n = 3;
    const double eps_list[] = {0.0, 0.5, -0.5, 1.0, -1.0, 1.5, -1.5};
    auto expect_admissible = [n](double N, double eps) {
        if (N == 0.0) return eps == 0.0;
        if (N == static_cast<double>(n)) return true;
        if (N == kInfinity) return std::abs(eps) < 1.0;
        return eps * eps < N / (N - n); // N = 2n
    };
    for (double N : {0.0, 3.0, 6.0, kInfinity}) {
        for (double eps : eps_list) {
            auto r = epsilon_admissible(N, eps, n);
            out.require(r.has_value() == expect_admissible(N, eps), "admissibility table");
            if (!r) continue;
            const double c_expect =
                (N == kInfinity) ? (1.0 - eps * eps) / n
                                 : (N == 0.0 ? 1.0 / n : (1.0 - eps * eps * (N - n) / N) / n);
            out.bound(std::abs(r->c - c_expect), 1e-15, "c(N,eps)");
        }
    }
    // eps = 1 admissible exactly on N in [n, +inf)
    out.require(epsilon_admissible(3.0, 1.0, n).has_value() &&
                    epsilon_admissible(6.0, 1.0, n).has_value() &&
                    !epsilon_admissible(0.0, 1.0, n).has_value() &&
                    !epsilon_admissible(kInfinity, 1.0, n).has_value(),
                "eps = 1 window");
    // c(0,0) = 1/n
    out.require(std::abs(epsilon_admissible(0.0, 0.0, n)->c - 1.0 / n) < 1e-15, "c(0,0)");
    return out;
}

} // namespace

int main() {
    struct Entry {
        const char* name;
        double budget_s;
        Outcome (*fn)();
    };
    const Entry entries[] = {
        {"euler/homogeneity", 10, criterion_euler},
        {"connection vs hand Christoffels + Berwald classification", 30, criterion_connection},
        {"geodesic/Jacobi/BVP", 60, criterion_geodesic},
        {"Legendre transform suite", 60, criterion_legendre},
        {"weighted Raychaudhuri identity matrix", 120, criterion_raychaudhuri},
        {"Laplacian comparison", 60, criterion_laplacian},
        {"Busemann suite", 120, criterion_busemann},
        {"splitting certificates", 120, criterion_splitting},
        {"epsilon-range gate", 1, criterion_erange},
    };

    int failures = 0;
    for (int i = 0; i < 9; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = entries[i].fn();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string(" [exception: ") + e.what() + "]";
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > entries[i].budget_s) {
            out.pass = false;
            out.detail += " [over budget]";
        }
        if (!out.pass) ++failures;
        std::printf("criterion %d %s: %s (worst residual %.3e, %.1fs of %gs)%s\n", i + 1,
                    out.pass ? "PASS" : "FAIL", entries[i].name, out.worst, secs,
                    entries[i].budget_s, out.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}

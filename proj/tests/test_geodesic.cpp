#include "lfg/geodesic.hpp"
#include "lfg/models_builtin.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace lfg;

namespace {

Vec vec(std::initializer_list<double> xs) {
    Vec v(static_cast<int>(xs.size()));
    int i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

} // namespace

TEST_CASE("dopri5 reproduces exp and the harmonic oscillator") {
    auto rhs = [](double, const Vec& y) { return y; };
    auto sol = integrate_ode(rhs, Vec::Ones(1), 0.0, 2.0);
    CHECK(sol(2.0)[0] == Catch::Approx(std::exp(2.0)).epsilon(1e-10));
    CHECK(sol(1.37)[0] == Catch::Approx(std::exp(1.37)).epsilon(1e-9)); // dense output

    auto osc = [](double, const Vec& y) { return vec({y[1], -y[0]}); };
    auto s2 = integrate_ode(osc, vec({1, 0}), 0.0, 10.0);
    CHECK(s2(10.0)[0] == Catch::Approx(std::cos(10.0)).margin(1e-9));
    CHECK(s2(7.3)[1] == Catch::Approx(-std::sin(7.3)).margin(1e-8));
}

TEST_CASE("minkowski geodesics are straight lines") {
    auto m = make_model("minkowski", 4);
    Vec x = Vec::Zero(4), v = vec({1, 0, 0, 0});
    auto seg = integrate_geodesic(*m, x, v, 0.0, 2.0);
    CHECK(!seg.cone_exit);
    for (double t : {0.0, 0.5, 1.3, 2.0}) {
        CHECK((seg.position(t) - t * v).norm() < 1e-12);
        CHECK((seg.velocity(t) - v).norm() < 1e-12);
    }
    CHECK(seg.L_drift < 1e-14);
}

TEST_CASE("flat quartic geodesics are affine lines") {
    auto m = make_model("flat-quartic", 3, {{"eps", 0.1}});
    Vec x = vec({0.2, -0.1, 0.4}), v = vec({1, 0.3, -0.2});
    auto seg = integrate_geodesic(*m, x, v, 0.0, 1.5);
    for (double t : {0.4, 1.0, 1.5}) CHECK((seg.position(t) - (x + t * v)).norm() < 1e-10);
    CHECK(seg.L_drift < 1e-12);
}

TEST_CASE("flrw geodesic conserves L") {
    auto m = make_model("flrw", 3, {{"rate", 1.0}});
    Vec x = Vec::Zero(3), v = vec({1, 0.3, -0.15});
    auto seg = integrate_geodesic(*m, x, v, 0.0, 1.0);
    CHECK(!seg.cone_exit);
    CHECK(seg.L_drift <= 1e-8);
}

TEST_CASE("exponential map") {
    auto m = make_model("minkowski", 3);
    Vec x = vec({0.1, 0.2, 0.0}), v = vec({1, 0.4, -0.3});
    CHECK((exponential_map(*m, x, v) - (x + v)).norm() < 1e-11);
    auto fq = make_model("flat-quartic", 3, {{"eps", 0.1}});
    CHECK((exponential_map(*fq, x, v) - (x + v)).norm() < 1e-10);
}

TEST_CASE("exponential map derivative matches the Jacobi-field Jacobian") {
    auto m = make_model("flrw", 2, {{"rate", 1.0}});
    const int d = 2;
    Vec x = vec({0.1, 0.3}), v = vec({1, 0.2});
    auto js = integrate_jacobi(*m, x, v, 0.0, 1.0, Mat::Zero(d, d), Mat::Identity(d, d));
    Mat J = js.J(1.0);
    // forward-difference Jacobian of exp_x
    const double h = 1e-6;
    Vec base = exponential_map(*m, x, v);
    for (int j = 0; j < d; ++j) {
        Vec vj = v;
        vj[j] += h;
        Vec col = (exponential_map(*m, x, vj) - base) / h;
        CHECK((col - J.col(j)).norm() / std::max(1.0, J.col(j).norm()) < 1e-5);
    }
}

TEST_CASE("jacobi fields: flat cases and the geodesic-variation oracle") {
    auto mk = make_model("minkowski", 3);
    Vec x = Vec::Zero(3), v = vec({1, 0.2, 0});
    Mat J0 = Mat::Zero(3, 1), W0(3, 1);
    W0 << 0.3, -0.1, 0.7;
    auto js = integrate_jacobi(*mk, x, v, 0.0, 2.0, J0, W0);
    CHECK((js.J(2.0) - 2.0 * W0).norm() < 1e-10);

    auto fq = make_model("flat-quartic", 3, {{"eps", 0.1}});
    Mat J0b(3, 1);
    J0b << 0.1, 0.2, -0.05;
    auto js2 = integrate_jacobi(*fq, x, v, 0.0, 1.0, J0b, W0);
    CHECK((js2.J(1.0) - (J0b + W0)).norm() < 1e-9);

    // variation oracle on flrw: J(t) ~ (eta_s(t) - eta(t)) / s for the
    // geodesic family eta_s with initial data (x + s*J0, v + s*W0)
    auto fl = make_model("flrw", 2, {{"rate", 1.0}});
    Vec x2 = vec({0.0, 0.1}), v2 = vec({1, 0.25});
    Mat J02(2, 1), W02(2, 1);
    J02 << 0.2, -0.3;
    W02 << 0.05, 0.4;
    auto jf = integrate_jacobi(*fl, x2, v2, 0.0, 1.0, J02, W02);
    const double s = 1e-5;
    auto base = integrate_geodesic(*fl, x2, v2, 0.0, 1.0);
    // coordinate initial velocity of the variation: J'(0) = DJ(0) - Gamma(v)(v, J0)
    auto ch = chern_at(*fl, x2, v2);
    Vec jdot0 = W02.col(0);
    for (int a = 0; a < 2; ++a)
        jdot0[a] -= (v2.transpose() * ch[static_cast<std::size_t>(a)] * J02.col(0))(0, 0);
    auto pert = integrate_geodesic(*fl, Vec(x2 + s * J02.col(0)), Vec(v2 + s * jdot0), 0.0, 1.0);
    for (double t : {0.3, 0.7, 1.0}) {
        Vec fd = (pert.position(t) - base.position(t)) / s;
        CHECK((fd - jf.J(t).col(0)).norm() / std::max(1.0, fd.norm()) < 1e-4);
    }
}

TEST_CASE("parallel transport preserves components on minkowski and L on berwald models") {
    auto mk = make_model("minkowski", 3);
    Vec x = Vec::Zero(3), v = vec({1, 0.3, 0});
    Mat V0(3, 1);
    V0 << 0.9, 0.1, -0.4;
    auto tf = parallel_transport(*mk, x, v, 0.0, 1.0, V0);
    CHECK((tf.V(1.0) - V0).norm() < 1e-12);

    // flat quartic is Berwald: L(V(t)) constant
    auto fq = make_model("flat-quartic", 3, {{"eps", 0.1}});
    Vec vq = vec({1, 0.25, -0.1});
    Mat Vq(3, 1);
    Vq << 1.0, -0.2, 0.3;
    auto tq = parallel_transport(*fq, x, vq, 0.0, 1.0, Vq);
    const double L0 = fq->eval_L(x, Vq.col(0));
    double drift = 0;
    for (double t = 0; t <= 1.0; t += 0.1)
        drift = std::max(drift, std::abs(fq->eval_L(tq.position(t), tq.V(t).col(0)) - L0));
    CHECK(drift <= 1e-9);

    // flrw (Lorentzian, hence Berwald) with actual curvature of transport
    auto fl = make_model("flrw", 2, {{"rate", 1.0}});
    Vec x2 = Vec::Zero(2), v2 = vec({1, 0.2});
    Mat V2(2, 1);
    V2 << 1.0, 0.3;
    auto t2 = parallel_transport(*fl, x2, v2, 0.0, 1.0, V2);
    const double L2 = fl->eval_L(x2, V2.col(0));
    double drift2 = 0;
    for (double t = 0; t <= 1.0; t += 0.1)
        drift2 = std::max(drift2, std::abs(fl->eval_L(t2.position(t), t2.V(t).col(0)) - L2));
    CHECK(drift2 <= 1e-9);
}

TEST_CASE("parallel transport drifts L on the non-berwald model") {
    auto nb = make_model("nonberwald-quartic", 3, {{"eps", 0.1}});
    Vec x = Vec::Zero(3), v = vec({1, 0.2, 0.1});
    Mat V0(3, 1);
    V0 << 1.0, -0.3, 0.2;
    auto tf = parallel_transport(*nb, x, v, 0.0, 1.0, V0);
    const double L0 = nb->eval_L(x, V0.col(0));
    double drift = 0;
    for (double t = 0; t <= 1.0; t += 0.1)
        drift = std::max(drift, std::abs(nb->eval_L(tf.position(t), tf.V(t).col(0)) - L0));
    CHECK(drift > 1e-6); // regression constant: measurably nonzero
}

TEST_CASE("bvp shooting") {
    auto mk = make_model("minkowski", 3);
    Vec x = Vec::Zero(3), y = vec({1, 0.3, 0});
    auto b = solve_bvp(*mk, x, y, vec({1, 0, 0}));
    CHECK((b.v - y).norm() < 1e-10);
    CHECK(b.residual <= 1e-10);

    auto fq = make_model("flat-quartic", 3, {{"eps", 0.1}});
    Vec x2 = vec({0.2, 0.1, -0.3});
    auto b2 = solve_bvp(*fq, x2, y, vec({1, 0, 0}));
    CHECK((b2.v - (y - x2)).norm() < 1e-9);

    auto fl = make_model("flrw", 2, {{"rate", 1.0}});
    auto b3 = solve_bvp(*fl, Vec(Vec::Zero(2)), vec({0.8, 0.3}), vec({0.8, 0.3}));
    CHECK(b3.residual <= 1e-10);
    CHECK((b3.segment.position(1.0) - vec({0.8, 0.3})).norm() < 1e-9);
}

TEST_CASE("length") {
    auto mk = make_model("minkowski", 3);
    auto seg = integrate_geodesic(*mk, Vec(Vec::Zero(3)), vec({2, 0, 0}), 0.0, 1.0);
    CHECK(length(*mk, seg) == Catch::Approx(2.0).epsilon(1e-12));

    // reparametrization invariance
    auto straight = [&](double t) {
        Vec v = vec({2, 0.6, 0});
        return std::pair<Vec, Vec>(t * t * v, 2.0 * t * v); // eta(t) = t^2 v on [0,1]
    };
    const double l1 = curve_length(*mk, straight, 0.0, 1.0);
    auto affine = [&](double t) {
        Vec v = vec({2, 0.6, 0});
        return std::pair<Vec, Vec>(t * v, v);
    };
    CHECK(l1 == Catch::Approx(curve_length(*mk, affine, 0.0, 1.0)).epsilon(1e-10));

    // broken causal curve 0 -> (1, 0.9, 0) -> (2, 0, 0)
    auto broken = [&](double t) -> std::pair<Vec, Vec> {
        if (t < 1.0) return {t * vec({1, 0.9, 0}), vec({1, 0.9, 0})};
        return {vec({1, 0.9, 0}) + (t - 1.0) * vec({1, -0.9, 0}), vec({1, -0.9, 0})};
    };
    const double expect = 2.0 * std::sqrt(1.0 - 0.81);
    CHECK(curve_length(*mk, broken, 0.0, 1.0) + curve_length(*mk, broken, 1.0, 2.0) ==
          Catch::Approx(expect).epsilon(1e-10));
}

TEST_CASE("local distance") {
    auto mk = make_model("minkowski", 4);
    Vec o = Vec::Zero(4);
    CHECK(local_distance(*mk, o, vec({1, 0, 0, 0})) == Catch::Approx(1.0).epsilon(1e-10));
    CHECK(local_distance(*mk, o, vec({1, 0.6, 0, 0})) == Catch::Approx(0.8).epsilon(1e-10));
    // no causal connector
    CHECK(local_distance(*mk, o, vec({0.1, 1, 0, 0})) == 0.0);
    CHECK(local_distance(*mk, o, vec({-1, 0.2, 0, 0})) == 0.0); // past-pointing

    // reverse triangle equality along a geodesic
    Vec z = vec({2, 0.5, 0.3, 0});
    Vec y = 0.5 * z;
    CHECK(local_distance(*mk, o, z) ==
          Catch::Approx(local_distance(*mk, o, y) + local_distance(*mk, y, z)).epsilon(1e-9));

    // convexity radius scope
    auto fl = make_model("flrw", 2, {{"rate", 1.0}});
    CHECK_THROWS_AS(local_distance(*fl, Vec(Vec::Zero(2)), vec({5, 0})), lfg::domain_error);
}

TEST_CASE("bvp self-consistency: local_distance(x, exp_x(v)) = F(v)") {
    auto fl = make_model("flrw", 2, {{"rate", 1.0}});
    Vec x = vec({0.0, 0.2}), v = vec({0.4, 0.1});
    Vec y = exponential_map(*fl, x, v);
    const double dist = local_distance(*fl, x, y);
    CHECK(dist == Catch::Approx(fl->F(x, v)).epsilon(1e-8));
}

TEST_CASE("berwald reference-vector independence of the covariant derivative") {
    for (const char* name : {"minkowski", "flrw", "flat-quartic"}) {
        auto m = make_model(name, 3);
        Vec x = vec({0.1, 0.2, -0.1});
        JetVectorField field = [](std::span<const Jet> xj) {
            std::vector<Jet> V;
            V.push_back(xj[1] * xj[1] + 1.0);
            V.push_back(0.5 * xj[0]);
            V.push_back(xj[2] - xj[0]);
            return V;
        };
        Vec v = vec({1, 0.3, 0.1});
        Vec w1 = vec({1, 0.1, -0.2}), w2 = vec({1.4, -0.3, 0.25});
        Vec d1 = covariant_derivative(*m, x, field, v, w1);
        Vec d2 = covariant_derivative(*m, x, field, v, w2);
        INFO(name);
        CHECK((d1 - d2).norm() <= 1e-9);
    }
}

TEST_CASE("cone exit truncates the segment") {
    // spatially accelerating "geodesic" cannot happen, so use the domain cone
    // of the quartic model with spacelike-approaching data: a straight line
    // through the cone boundary in x-dependent disguise is not available;
    // instead start outside-adjacent: velocity near the domain boundary in a
    // model whose cone varies with x is not among the built-ins, so check the
    // plain failure path: initial data outside the cone throws.
    auto fq = make_model("flat-quartic", 3, {{"eps", 0.1}});
    CHECK_THROWS_AS(integrate_geodesic(*fq, Vec(Vec::Zero(3)), vec({0.1, 1, 0}), 0.0, 1.0),
                    lfg::domain_error);
}

TEST_CASE("trajectory csv export") {
    auto mk = make_model("minkowski", 2);
    auto seg = integrate_geodesic(*mk, Vec(Vec::Zero(2)), vec({1, 0.5}), 0.0, 1.0);
    auto csv = trajectory_csv(seg, 4);
    CHECK(csv.rfind("t,x0,x1,v0,v1\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
    CHECK(csv.find("\r") == std::string::npos);
}

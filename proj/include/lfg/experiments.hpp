#pragma once

#include "lfg/config.hpp"
#include "lfg/connection.hpp"
#include "lfg/models_builtin.hpp"
#include "lfg/splitting.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <future>
#include <random>
#include <thread>

namespace lfg {

// Scenario runner: binds a configured model, weight, and experiment, and
// produces a report plus CSV artifacts. Shared by the lfslab tool and tests.

inline std::vector<std::string> experiment_names() {
    return {"audit",   "berwald",   "raychaudhuri",      "laplacian-comparison",
            "busemann", "splitting", "legendre-roundtrip"};
}

/// worker cap: min(hardware, LFSLAB_THREADS), at least 1
inline int worker_cap() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("LFSLAB_THREADS")) {
        try {
            n = std::min(n, std::max(1, std::stoi(env)));
        } catch (const std::exception&) {
            throw config_error("LFSLAB_THREADS: cannot parse worker count");
        }
    }
    return n;
}

struct ExperimentResult {
    ScenarioReport report;
    std::vector<std::pair<std::string, std::string>> csv_files; // name -> body
    std::string extra_text;    // appended to report.txt (e.g. a certificate)
    nlohmann::json extra;      // merged into report.json under "certificate"
};

namespace detail {

inline std::unique_ptr<SpacetimeModel> model_from_config(const Config& cfg) {
    const std::string name = cfg.str("model.name", "minkowski");
    const int dim = cfg.integer("model.dim", 3);
    ParamMap params;
    for (const char* key : {"eps", "rate", "a"})
        if (cfg.has(std::string("model.") + key))
            params[key] = cfg.num(std::string("model.") + key, 0.0);
    auto m = make_model(name, dim, params);
    if (cfg.has("weight.name")) {
        ParamMap wp;
        for (const char* key : {"a", "value", "index"})
            if (cfg.has(std::string("weight.") + key))
                wp[key] = cfg.num(std::string("weight.") + key, 0.0);
        m->set_weight(make_weight(cfg.str("weight.name", "zero"), wp));
    }
    return m;
}

inline std::vector<double> uniform_grid(double a, double b, int count) {
    if (count < 2 || b <= a) throw config_error("grid: need t1 > t0 and at least 2 points");
    std::vector<double> g;
    for (int i = 0; i < count; ++i) g.push_back(a + (b - a) * i / (count - 1));
    return g;
}

inline std::string checks_csv(const ScenarioReport& rep) {
    std::ostringstream os;
    os << "check,residual,tolerance,pass\n";
    for (const auto& c : rep.checks) {
        char buf[96];
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%d\n", c.residual, c.tolerance,
                      c.pass ? 1 : 0);
        std::string name = c.name;
        std::replace(name.begin(), name.end(), ',', ';');
        os << name << buf;
    }
    return os.str();
}

inline void echo_common(ScenarioReport& rep, const Config& cfg) {
    rep.echo("dim", std::to_string(cfg.integer("model.dim", 3)));
    if (cfg.has("weight.name")) rep.echo("weight", cfg.str("weight.name", "zero"));
    rep.echo("seed", std::to_string(cfg.integer("seed", 12345)));
    rep.echo("workers", std::to_string(worker_cap()));
}

inline ExperimentResult run_audit(const SpacetimeModel& m, const Config& cfg) {
    ExperimentResult res;
    res.report = audit_model(m, cfg.integer("audit.samples", 2000),
                             static_cast<unsigned>(cfg.integer("seed", 12345)));
    return res;
}

inline ExperimentResult run_berwald(const SpacetimeModel& m, const Config& cfg) {
    const int d = m.dim();
    const int nx = cfg.integer("berwald.x_samples", 6);
    std::vector<Vec> xs;
    for (const Vec& h : halton_points(nx, d)) xs.push_back(Vec(h.array() - 0.5));
    ExperimentResult res;
    res.report = berwald_audit(m, xs, cfg.integer("berwald.v_samples", 12),
                               cfg.num("tol.berwald", 1e-8));
    return res;
}

inline ExperimentResult run_raychaudhuri(const SpacetimeModel& m, const Config& cfg) {
    const int n = m.spatial_dim();
    const double N = cfg.num("N", kInfinity);
    const double eps = cfg.num("eps", 0.0);
    if (!epsilon_admissible(N, eps, n))
        throw config_error("raychaudhuri: (N, eps) outside the admissible range");

    const Vec z = Vec::Zero(m.dim());
    const Vec v0 = unit_timelike(m, z, m.orientation(z));
    const auto grid = uniform_grid(cfg.num("grid.t0", 0.1), cfg.num("grid.t1", 5.0),
                                   cfg.integer("grid.points", 12));
    auto st = evolve_lagrange(m, z, v0, 0.0, 1.02 * grid.back(), Mat::Zero(n, n),
                              Mat::Identity(n, n));

    ExperimentResult res;
    res.report = raychaudhuri_report(m, st, N, eps, grid, cfg.num("tol.raychaudhuri", 1e-6));
    res.csv_files.emplace_back("congruence.csv", congruence_csv(m, st, N, eps, grid));
    return res;
}

inline ExperimentResult run_laplacian(const SpacetimeModel& m, const Config& cfg) {
    const int n = m.spatial_dim();
    const double N = cfg.num("N", kInfinity);
    const double eps = cfg.num("eps", 0.0);
    if (!epsilon_admissible(N, eps, n))
        throw config_error("laplacian-comparison: (N, eps) outside the admissible range");

    const Vec z = Vec::Zero(m.dim());
    const Vec v0 = unit_timelike(m, z, m.orientation(z));
    const auto grid = uniform_grid(cfg.num("grid.t0", 0.1), cfg.num("grid.t1", 5.0),
                                   cfg.integer("grid.points", 12));
    const double tol = cfg.num("tol.laplacian", 1e-6);

    ExperimentResult res;
    res.report = verify_laplacian_comparison(m, z, v0, N, eps, grid, tol);
    if (!res.report.precondition_failed && cfg.integer("laplacian.reverse", 1) != 0) {
        auto rev = verify_laplacian_comparison_reverse(m, z, v0, N, eps, grid, tol);
        for (auto& c : rev.checks) {
            c.name = "reverse: " + c.name;
            res.report.checks.push_back(c);
        }
        if (rev.precondition_failed) {
            res.report.precondition_failed = true;
            res.report.precondition_note = "reverse structure: " + rev.precondition_note;
        }
    }
    return res;
}

inline ExperimentResult run_busemann(const SpacetimeModel& m, const Config& cfg) {
    const int d = m.dim();
    const double T = cfg.num("ray.t_max", 45.0);
    const auto grid = cfg.list("ray.grid", {5.0, 10.0, 20.0, 40.0});
    if (grid.back() > T) throw config_error("busemann: ray.grid exceeds ray.t_max");

    const Vec z = Vec::Zero(d);
    const Vec v0 = unit_timelike(m, z, m.orientation(z));
    auto line = make_line(m, z, v0, T);
    auto ray = forward_ray(line);

    Vec x = z;
    x[1] += cfg.num("busemann.offset", 0.3);

    auto fwd = busemann_truncated(m, ray, x, grid);
    auto bwd = reverse_busemann(m, line, x, grid);

    ExperimentResult res;
    auto& rep = res.report;
    rep.experiment = "busemann";
    rep.echo("model", m.name());
    rep.echo("ray.t_max", std::to_string(T));
    rep.add("ray straightness |length - distance|", ray_straightness(m, ray),
            cfg.num("tol.straightness", 1e-8));
    rep.add("b_t monotonicity violation", fwd.worst_monotonicity_violation,
            cfg.num("tol.monotonicity", 1e-9));
    rep.add("extrapolation uncertainty", fwd.uncertainty, cfg.num("tol.busemann", 2e-3));
    rep.add("b + bbar (product models: = 0)", std::abs(fwd.limit + bwd.limit),
            cfg.num("tol.busemann", 2e-3));
    res.csv_files.emplace_back("busemann_forward.csv", busemann_csv(fwd));
    res.csv_files.emplace_back("busemann_reverse.csv", busemann_csv(bwd));
    return res;
}

inline ExperimentResult run_splitting(const SpacetimeModel& m, const Config& cfg) {
    SplittingOptions opt;
    opt.tilt = cfg.num("splitting.tilt", opt.tilt);
    opt.line_span = cfg.num("splitting.line_span", opt.line_span);
    opt.t_grid = cfg.list("splitting.t_grid", opt.t_grid);
    opt.r_fit = cfg.num("splitting.r_fit", opt.r_fit);

    auto cert = verify_splitting(m, Vec(Vec::Zero(m.dim())), opt);
    ExperimentResult res;
    res.report = cert.report();
    res.extra_text = cert.text();
    res.extra = cert.json();
    return res;
}

inline ExperimentResult run_legendre_roundtrip(const SpacetimeModel& m, const Config& cfg) {
    const int d = m.dim();
    const int count = cfg.integer("legendre.samples", 200);
    const double tol = cfg.num("tol.legendre", 1e-9);

    std::mt19937 rng(static_cast<unsigned>(cfg.integer("seed", 12345)));
    std::uniform_real_distribution<double> box(-0.5, 0.5), unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Vec> xs, vs;
    for (int s = 0; s < count; ++s) {
        Vec x(d), dir(d);
        for (int a = 0; a < d; ++a) {
            x[a] = box(rng);
            dir[a] = gauss(rng);
        }
        xs.push_back(x);
        vs.push_back(cone_vector(m, x, dir, 0.9 * unit(rng), 0.3 + 2.0 * unit(rng)));
    }

    // independent samples: fan out across the worker cap
    const int workers = std::min(worker_cap(), count);
    std::vector<std::future<std::pair<double, double>>> futs;
    for (int w = 0; w < workers; ++w)
        futs.push_back(std::async(std::launch::async, [&, w] {
            double worst_v = 0.0, worst_L = 0.0;
            for (int s = w; s < count; s += workers) {
                const Vec p = momentum(m, xs[s], vs[s]);
                const Vec v2 = legendre_transform(m, xs[s], p);
                const double scale = std::max(1.0, vs[s].norm());
                worst_v = std::max(worst_v, (v2 - vs[s]).norm() / scale);
                worst_L = std::max(worst_L, std::abs(dual_L(m, xs[s], p) -
                                                     m.eval_L(xs[s], vs[s])) /
                                                std::max(1.0, std::abs(m.eval_L(xs[s], vs[s]))));
            }
            return std::pair<double, double>(worst_v, worst_L);
        }));
    double worst_v = 0.0, worst_L = 0.0;
    for (auto& f : futs) {
        auto [wv, wl] = f.get();
        worst_v = std::max(worst_v, wv);
        worst_L = std::max(worst_L, wl);
    }

    ExperimentResult res;
    auto& rep = res.report;
    rep.experiment = "legendre-roundtrip";
    rep.echo("model", m.name());
    rep.echo("samples", std::to_string(count));
    rep.add("roundtrip |L*(momentum(v)) - v| (relative)", worst_v, tol);
    rep.add("involution |L*(omega) - L(v)| (relative)", worst_L, tol);
    return res;
}

} // namespace detail

inline ExperimentResult run_experiment(const Config& cfg) {
    const std::string exp = cfg.str("experiment", "audit");
    auto m = detail::model_from_config(cfg);

    const auto t_start = std::chrono::steady_clock::now();
    ExperimentResult res;
    if (exp == "audit") res = detail::run_audit(*m, cfg);
    else if (exp == "berwald") res = detail::run_berwald(*m, cfg);
    else if (exp == "raychaudhuri") res = detail::run_raychaudhuri(*m, cfg);
    else if (exp == "laplacian-comparison") res = detail::run_laplacian(*m, cfg);
    else if (exp == "busemann") res = detail::run_busemann(*m, cfg);
    else if (exp == "splitting") res = detail::run_splitting(*m, cfg);
    else if (exp == "legendre-roundtrip") res = detail::run_legendre_roundtrip(*m, cfg);
    else throw config_error("unknown experiment: " + exp);

    detail::echo_common(res.report, cfg);
    res.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    res.csv_files.emplace_back("checks.csv", detail::checks_csv(res.report));
    return res;
}

} // namespace lfg

#pragma once

#include "lfg/busemann.hpp"
#include "lfg/legendre.hpp"

#include <cmath>
#include <functional>

namespace lfg {

// Verification of product-splitting consequences on candidate product
// spacetimes: the Busemann-gradient congruence, reconstruction of the
// product metric -dt^2 + h, translation isometries, and weight constancy
// along the lines.

/// limit from b_t = b + c1/t + c2/t^2 through the largest three samples;
/// sharper than the pairwise 1/t fits when the 1/t^2 tail matters
inline double busemann_limit2(const BusemannEvaluation& ev) {
    const std::size_t s = ev.ts.size();
    if (s < 3) throw numerical_error("busemann_limit2: need at least three samples");
    Mat A(3, 3);
    Vec b(3);
    for (int i = 0; i < 3; ++i) {
        const double u = 1.0 / ev.ts[s - 3 + static_cast<std::size_t>(i)];
        A(i, 0) = 1.0;
        A(i, 1) = u;
        A(i, 2) = u * u;
        b[i] = ev.values[s - 3 + static_cast<std::size_t>(i)];
    }
    return A.partialPivLu().solve(b)[0];
}

/// local quadratic model of a sampled scalar: value, differential, Hessian
struct QuadraticFit {
    double value = 0;
    Vec grad;
    Mat hess;
    double rcond = 0; // of the least-squares design matrix
};

/// least-squares quadratic over a symmetric stencil of radius r_fit
inline QuadraticFit fit_quadratic(const std::function<double(const Vec&)>& f, const Vec& x,
                                  double r_fit = 0.1) {
    const int d = static_cast<int>(x.size());
    std::vector<Vec> offs;
    offs.push_back(Vec::Zero(d));
    for (int a = 0; a < d; ++a) {
        Vec e = Vec::Zero(d);
        e[a] = r_fit;
        offs.push_back(e);
        offs.push_back(Vec(-e));
    }
    const double s = r_fit / std::sqrt(2.0);
    for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b) {
            Vec e = Vec::Zero(d);
            e[a] = s;
            e[b] = s;
            offs.push_back(e);
            e[b] = -s;
            offs.push_back(e);
        }

    const int nc = 1 + d + d * (d + 1) / 2; // constant, linear, symmetric quadratic
    Mat A(static_cast<int>(offs.size()), nc);
    Vec y(static_cast<int>(offs.size()));
    for (std::size_t r = 0; r < offs.size(); ++r) {
        const Vec& o = offs[r];
        y[static_cast<int>(r)] = f(Vec(x + o));
        int c = 0;
        A(static_cast<int>(r), c++) = 1.0;
        for (int a = 0; a < d; ++a) A(static_cast<int>(r), c++) = o[a];
        for (int a = 0; a < d; ++a)
            for (int b = a; b < d; ++b)
                A(static_cast<int>(r), c++) = (a == b ? 0.5 : 1.0) * o[a] * o[b];
    }

    Eigen::ColPivHouseholderQR<Mat> qr(A);
    const auto& R = qr.matrixR();
    double dmax = 0, dmin = kInfinity;
    for (int i = 0; i < nc; ++i) {
        const double v = std::abs(R(i, i));
        dmax = std::max(dmax, v);
        dmin = std::min(dmin, v);
    }
    QuadraticFit fit;
    fit.rcond = dmax > 0 ? dmin / dmax : 0.0;
    if (fit.rcond < 1e-10)
        throw numerical_error("fit_quadratic: stencil conditioning failure (rcond " +
                              std::to_string(fit.rcond) + ")");
    const Vec coef = qr.solve(y);
    fit.value = coef[0];
    fit.grad = coef.segment(1, d);
    fit.hess = Mat(d, d);
    int c = 1 + d;
    for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) fit.hess(a, b) = fit.hess(b, a) = coef[c++];
    return fit;
}

// --- Busemann gradient lines ---------------------------------------------------

struct GradientLineCheck {
    std::vector<Vec> samples;
    std::vector<Vec> omegas;         // fitted differential of bbar
    std::vector<Vec> gradients;      // unit grad bbar = Legendre transform of omega
    std::vector<double> bbar_values; // fitted bbar at the samples
    std::vector<GeodesicSegment> lines;
    double flow_deviation_max = 0;     // gradient flow vs geodesic line
    double affinity_residual_max = 0;  // |b(zeta_x(t)) - b(x) - t|
    double hessian_norm_max = 0;
    double fit_rcond_min = kInfinity;
};

/// fit bbar locally, take its gradient through the Legendre transform,
/// integrate the gradient flow, and compare with the geodesic line it
/// should coincide with
inline GradientLineCheck check_busemann_gradient_lines(
    const SpacetimeModel& m, const Line& eta, const std::vector<Vec>& samples,
    const std::vector<double>& t_grid, double r_fit = 0.1, double t_flow = 1.0,
    int flow_steps = 4) {
    GradientLineCheck out;
    out.samples = samples;

    auto bbar = [&](const Vec& p) {
        return busemann_limit2(reverse_busemann(m, eta, p, t_grid));
    };
    auto unit_gradient = [&](const Vec& p) {
        const Vec omega = fit_quadratic(bbar, p, r_fit).grad;
        const Vec V = legendre_transform(m, p, omega);
        return Vec(V / m.F(p, V));
    };
    const Ray fwd = forward_ray(eta);
    auto b_fwd = [&](const Vec& p) {
        return busemann_limit2(busemann_truncated(m, fwd, p, t_grid));
    };

    for (const Vec& x : samples) {
        auto fit = fit_quadratic(bbar, x, r_fit);
        out.fit_rcond_min = std::min(out.fit_rcond_min, fit.rcond);
        out.hessian_norm_max = std::max(out.hessian_norm_max, fit.hess.cwiseAbs().maxCoeff());
        out.bbar_values.push_back(fit.value);
        out.omegas.push_back(fit.grad);

        Vec V = legendre_transform(m, x, fit.grad);
        V /= m.F(x, V);
        out.gradients.push_back(V);

        auto seg = integrate_geodesic(m, x, V, 0.0, t_flow);
        if (seg.cone_exit)
            throw numerical_error("check_busemann_gradient_lines: line left the domain cone");

        // midpoint flow of the unit gradient field against the geodesic
        Vec p = x;
        const double h = t_flow / flow_steps;
        for (int k = 0; k < flow_steps; ++k) {
            const Vec g1 = (k == 0) ? V : unit_gradient(p);
            const Vec pm = p + 0.5 * h * g1;
            p += h * unit_gradient(pm);
            const double dev = (p - seg.position((k + 1) * h)).norm();
            out.flow_deviation_max = std::max(out.flow_deviation_max, dev);
        }

        const double affinity = std::abs(b_fwd(seg.position(t_flow)) - b_fwd(x) - t_flow);
        out.affinity_residual_max = std::max(out.affinity_residual_max, affinity);
        out.lines.push_back(std::move(seg));
    }
    return out;
}

// --- product metric reconstruction ----------------------------------------------

struct ProductChart {
    Vec base;        // chart origin
    Vec axis;        // unit grad bbar at the origin, in coordinates
    Mat fiber_basis; // d x n, orthonormal basis of ker(d bbar) at the origin
    Mat fiber_block; // h at flow time 0
    double unit_speed_residual = 0;   // max |g_V(V,V) + 1|
    double orthogonality_residual = 0; // max |g_V(V, w)| over fiber directions
    double fiber_drift = 0;            // max |h(t) - h(0)| along the flow
};

namespace detail {

/// orthonormal basis (Euclidean) of the kernel of a covector
inline Mat covector_kernel(const Vec& omega) {
    const int d = static_cast<int>(omega.size());
    Eigen::FullPivLU<Mat> lu(omega.transpose());
    Mat K = lu.kernel(); // d x (d-1)
    Eigen::HouseholderQR<Mat> qr(K);
    return Mat(qr.householderQ() * Mat::Identity(d, d - 1));
}

} // namespace detail

/// evaluate g_V with V = grad bbar at the samples and check the product
/// block structure and its invariance along the flow
inline ProductChart reconstruct_product_metric(const SpacetimeModel& m,
                                               const GradientLineCheck& glc,
                                               const std::vector<double>& flow_grid) {
    if (glc.samples.empty())
        throw config_error("reconstruct_product_metric: no samples");
    ProductChart chart;
    double t_max = 0;
    for (double t : flow_grid) t_max = std::max(t_max, t);

    for (std::size_t i = 0; i < glc.samples.size(); ++i) {
        const Vec& x = glc.samples[i];
        const Vec& V = glc.gradients[i];
        const Mat g = m.fundamental_tensor(x, V);
        const Mat W = detail::covector_kernel(glc.omegas[i]);

        const double vv = (V.transpose() * g * V)(0, 0);
        chart.unit_speed_residual = std::max(chart.unit_speed_residual, std::abs(vv + 1.0));
        chart.orthogonality_residual =
            std::max(chart.orthogonality_residual, (V.transpose() * g * W).cwiseAbs().maxCoeff());

        const Mat h0 = W.transpose() * g * W;
        auto seg = integrate_geodesic(m, x, V, 0.0, t_max);
        if (seg.cone_exit)
            throw numerical_error("reconstruct_product_metric: flow left the domain cone");
        for (double t : flow_grid) {
            const Mat gt = m.fundamental_tensor(seg.position(t), seg.velocity(t));
            const Mat ht = W.transpose() * gt * W;
            chart.fiber_drift = std::max(chart.fiber_drift, (ht - h0).cwiseAbs().maxCoeff());
        }
        if (i == 0) {
            chart.base = x;
            chart.axis = V;
            chart.fiber_basis = W;
            chart.fiber_block = h0;
        }
    }
    return chart;
}

// --- translation isometry -------------------------------------------------------

/// transport each sample v along the translation line from x0 and compare
/// L before and after, both at the transported point and at the chart
/// translate x0 + t * axis
inline double check_translation_isometry(const SpacetimeModel& m, const Vec& x0, const Vec& axis,
                                         const std::vector<double>& t_values,
                                         const std::vector<Vec>& v_samples) {
    double t_max = 0;
    for (double t : t_values) t_max = std::max(t_max, t);
    OdeOptions opt;
    opt.abs_tol = opt.rel_tol = 1e-12;

    double worst = 0;
    for (const Vec& v : v_samples) {
        Mat V0(v.size(), 1);
        V0.col(0) = v;
        auto tf = parallel_transport(m, x0, axis, 0.0, t_max, V0, opt);
        const double L0 = m.eval_L(x0, v);
        for (double t : t_values) {
            const Vec vt = tf.V(t).col(0);
            worst = std::max(worst, std::abs(m.eval_L(tf.position(t), vt) - L0));
            const Vec chart_pt = x0 + t * axis;
            if (m.in_domain_cone(chart_pt, vt))
                worst = std::max(worst, std::abs(m.eval_L(chart_pt, vt) - L0));
        }
    }
    return worst;
}

/// max |dPsi(zeta')| along the constructed lines
inline double check_weight_constancy(const SpacetimeModel& m,
                                     const std::vector<GeodesicSegment>& lines,
                                     int samples_per_line = 9) {
    double worst = 0;
    for (const auto& seg : lines) {
        for (int k = 0; k < samples_per_line; ++k) {
            const double t =
                seg.t0 + (seg.t_end() - seg.t0) * k / std::max(1, samples_per_line - 1);
            worst = std::max(worst, std::abs(m.dpsi(seg.position(t)).dot(seg.velocity(t))));
        }
    }
    return worst;
}

// --- certificate ----------------------------------------------------------------

struct SplittingTolerances {
    double b_plus_bbar = 2e-3;
    double gradient_parallelism = 1e-5;
    double hessian_bbar = 1e-4;
    double translation_drift = 1e-7;
    double psi_drift = 1e-8;
    double metric_drift = 1e-7;
};

struct SplittingCertificate {
    std::string model;
    Vec line_velocity;
    int sample_count = 0;
    SplittingTolerances tol;

    double b_plus_bbar = 0;
    double gradient_parallelism = 0;
    double hessian_bbar = 0;
    double translation_drift = 0;
    double psi_drift = 0;
    double metric_drift = 0;

    // informational (not gated separately)
    double unit_speed_residual = 0;
    double orthogonality_residual = 0;
    double affinity_residual = 0;
    std::string note;

    static constexpr const char* kAssumed =
        "universal-cover lift of the line is a straight line (assumed, not checked)";

    std::vector<std::pair<std::string, std::pair<double, double>>> residuals() const {
        return {{"b_plus_bbar", {b_plus_bbar, tol.b_plus_bbar}},
                {"gradient_parallelism", {gradient_parallelism, tol.gradient_parallelism}},
                {"hessian_bbar", {hessian_bbar, tol.hessian_bbar}},
                {"translation_drift", {translation_drift, tol.translation_drift}},
                {"psi_drift", {psi_drift, tol.psi_drift}},
                {"metric_drift", {metric_drift, tol.metric_drift}}};
    }

    std::vector<std::string> failed_checks() const {
        std::vector<std::string> out;
        for (const auto& [name, rv] : residuals())
            if (rv.first > rv.second) out.push_back(name);
        return out;
    }

    bool pass() const { return failed_checks().empty(); }

    std::string text() const {
        std::ostringstream os;
        os << "certificate: splitting\n";
        os << "model: " << model << "\n";
        os << "line.velocity:";
        for (int a = 0; a < line_velocity.size(); ++a) os << ' ' << line_velocity[a];
        os << "\n";
        os << "samples: " << sample_count << "\n";
        for (const auto& [name, rv] : residuals()) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "%.3e (tol %.1e) [%s]", rv.first, rv.second,
                          rv.first <= rv.second ? "pass" : "FAIL");
            os << "residual." << name << ": " << buf << "\n";
        }
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3e", unit_speed_residual);
        os << "info.unit_speed_residual: " << buf << "\n";
        std::snprintf(buf, sizeof buf, "%.3e", orthogonality_residual);
        os << "info.orthogonality_residual: " << buf << "\n";
        std::snprintf(buf, sizeof buf, "%.3e", affinity_residual);
        os << "info.affinity_residual: " << buf << "\n";
        if (!note.empty()) os << "note: " << note << "\n";
        os << "assumed: " << kAssumed << "\n";
        os << "verdict: " << (pass() ? "pass" : "fail") << "\n";
        return os.str();
    }

    nlohmann::json json() const {
        nlohmann::json j;
        j["certificate"] = "splitting";
        j["model"] = model;
        j["line_velocity"] = std::vector<double>(line_velocity.data(),
                                                 line_velocity.data() + line_velocity.size());
        j["samples"] = sample_count;
        for (const auto& [name, rv] : residuals())
            j["residuals"][name] = {{"value", rv.first},
                                    {"tolerance", rv.second},
                                    {"pass", rv.first <= rv.second}};
        j["info"] = {{"unit_speed_residual", unit_speed_residual},
                     {"orthogonality_residual", orthogonality_residual},
                     {"affinity_residual", affinity_residual}};
        if (!note.empty()) j["note"] = note;
        j["assumed"] = kAssumed;
        j["verdict"] = pass() ? "pass" : "fail";
        return j;
    }

    ScenarioReport report() const {
        ScenarioReport rep;
        rep.experiment = "splitting";
        rep.echo("model", model);
        rep.echo("assumed", kAssumed);
        for (const auto& [name, rv] : residuals()) rep.add(name, rv.first, rv.second);
        if (!note.empty()) rep.echo("note", note);
        return rep;
    }
};

struct SplittingOptions {
    double tilt = 0.003; // spatial x^1 component of the line direction
    double line_span = 420.0;
    std::vector<double> t_grid = {100.0, 200.0, 400.0};
    double r_fit = 0.1;
    double t_flow = 1.0;
    int flow_steps = 4;
    int fiber_samples = 3;
    std::vector<double> metric_grid = {0.5, 1.0, 2.0};
    std::vector<double> translation_t = {2.0, 8.0};
    int translation_samples = 6;
    SplittingTolerances tol;
};

/// full certificate run on the line through z. The line direction is a
/// slightly tilted orientation vector: a generic axis avoids accidental
/// alignment with model symmetries that could mask anisotropy.
inline SplittingCertificate verify_splitting(const SpacetimeModel& m, const Vec& z,
                                             const SplittingOptions& opt = {}) {
    const int d = m.dim();
    if (d < 3) throw config_error("verify_splitting: needs dim >= 3 for fiber sampling");

    Vec u = m.orientation(z);
    u[1] += opt.tilt;
    u = unit_timelike(m, z, u);
    auto line = make_line(m, z, u, opt.line_span);

    // fiber samples: z itself plus transverse offsets
    std::vector<Vec> samples{z};
    auto pts = halton_points(opt.fiber_samples, d - 1, 7);
    for (const auto& h : pts) {
        Vec x = z;
        for (int a = 1; a < d; ++a) x[a] += 0.7 * h[a - 1] - 0.35;
        samples.push_back(x);
    }

    auto glc = check_busemann_gradient_lines(m, line, samples, opt.t_grid, opt.r_fit,
                                             opt.t_flow, opt.flow_steps);
    auto chart = reconstruct_product_metric(m, glc, opt.metric_grid);

    // b + bbar on the samples
    const Ray fwd = forward_ray(line);
    double bpb = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double b = busemann_limit2(busemann_truncated(m, fwd, samples[i], opt.t_grid));
        bpb = std::max(bpb, std::abs(b + glc.bbar_values[i]));
    }

    // translation probes: generic cone vectors at the chart origin
    std::vector<Vec> vs;
    {
        Vec e1 = Vec::Zero(d);
        e1[1] = 1.0;
        vs.push_back(cone_vector(m, z, e1, 1.0, 1.0));
        for (const auto& h : halton_points(opt.translation_samples - 1, d, 31)) {
            Vec dir(d);
            for (int a = 0; a < d; ++a) dir[a] = 2.0 * h[a] - 1.0;
            vs.push_back(cone_vector(m, z, dir, 1.0, 1.0));
        }
    }

    SplittingCertificate cert;
    cert.model = m.name();
    cert.line_velocity = u;
    cert.sample_count = static_cast<int>(samples.size());
    cert.tol = opt.tol;
    cert.b_plus_bbar = bpb;
    cert.gradient_parallelism = glc.flow_deviation_max;
    cert.hessian_bbar = glc.hessian_norm_max;
    cert.translation_drift =
        check_translation_isometry(m, z, chart.axis, opt.translation_t, vs);
    cert.psi_drift = check_weight_constancy(m, glc.lines);
    cert.metric_drift = chart.fiber_drift;
    cert.unit_speed_residual = chart.unit_speed_residual;
    cert.orthogonality_residual = chart.orthogonality_residual;
    cert.affinity_residual = glc.affinity_residual_max;
    if (cert.psi_drift > opt.tol.psi_drift)
        cert.note = "weight varies along the lines; for a timelike-gradient weight the "
                    "curvature hypothesis Ric_N >= 0 already fails at finite N";
    return cert;
}

} // namespace lfg

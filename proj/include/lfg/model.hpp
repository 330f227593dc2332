#pragma once

#include "lfg/errors.hpp"
#include "lfg/jet.hpp"
#include "lfg/report.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace lfg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Weight function Psi(x), evaluable on x-jets.
struct Weight {
    std::string name = "zero";
    std::function<Jet(std::span<const Jet>)> fn;

    Jet operator()(std::span<const Jet> x) const {
        if (!fn) return Jet::constant(x[0].space(), 0.0);
        return fn(x);
    }

    static Weight zero() { return Weight{}; }
};

enum class Causality { timelike, lightlike, spacelike, zero };
enum class Orientation { future, past, none };

struct CausalClass {
    Causality causality;
    Orientation orientation;
    bool on_tolerance_band = false; // |L| landed inside the null band
};

/// A weighted Finsler spacetime model: L(x,v), weight Psi(x), and a
/// time-orientation field X. Immutable after construction.
class SpacetimeModel {
public:
    virtual ~SpacetimeModel() = default;

    int dim() const { return dim_; }            // n+1
    int spatial_dim() const { return dim_ - 1; } // n

    virtual std::string name() const = 0;
    virtual std::string describe() const { return name(); }

    virtual Jet lagrangian(std::span<const Jet> x, std::span<const Jet> v) const = 0;

    /// time-orientation vector field X(x); built-ins use d/dx^0
    virtual Vec orientation(const Vec& x) const {
        (void)x;
        Vec e0 = Vec::Zero(dim_);
        e0[0] = 1.0;
        return e0;
    }

    /// where L is defined and evaluated (TM minus 0 unless overridden)
    virtual bool in_domain_cone(const Vec& x, const Vec& v) const {
        (void)x;
        return v.norm() > 0.0;
    }

    /// declared aperture of the validated cone around X as a fraction of
    /// the Minkowski light cone; samplers stay inside it
    virtual double cone_aperture() const { return 0.9; }

    virtual bool reversible_claimed() const { return true; }

    /// radius within which BVP connectors are trusted to be maximizing
    virtual double convexity_radius() const { return 1e12; }

    const Weight& weight() const { return weight_; }
    void set_weight(Weight w) { weight_ = std::move(w); }

    // --- evaluation -------------------------------------------------------

    Jet L_jet(const Vec& x, const Vec& v, int x_order, int v_order) const {
        require_cone(x, v);
        auto sp = JetSpace::get(dim_, x_order, v_order);
        std::vector<Jet> xj, vj;
        for (int a = 0; a < dim_; ++a) {
            xj.push_back(Jet::variable_x(sp, a, x[a]));
            vj.push_back(Jet::variable_v(sp, a, v[a]));
        }
        return lagrangian(xj, vj);
    }

    double eval_L(const Vec& x, const Vec& v) const {
        require_cone(x, v);
        auto sp = JetSpace::get(dim_, 0, 0);
        std::vector<Jet> xj, vj;
        for (int a = 0; a < dim_; ++a) {
            xj.push_back(Jet::constant(sp, x[a]));
            vj.push_back(Jet::constant(sp, v[a]));
        }
        return lagrangian(xj, vj).value();
    }

    /// g_{ab}(x,v) = d^2 L / dv^a dv^b
    Mat fundamental_tensor(const Vec& x, const Vec& v, bool check_signature = false) const {
        Jet L = L_jet(x, v, 0, 2);
        Mat g(dim_, dim_);
        for (int a = 0; a < dim_; ++a) {
            for (int b = a; b < dim_; ++b) {
                MultiIdx xm{}, vm{};
                vm[a]++;
                vm[b]++;
                g(a, b) = g(b, a) = L.partial(xm, vm);
            }
        }
        if (check_signature) {
            Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
            int neg = 0;
            for (int i = 0; i < dim_; ++i)
                if (es.eigenvalues()[i] < 0) ++neg;
            if (neg != 1) {
                std::ostringstream os;
                os << "fundamental tensor signature is not (-,+,...,+); eigenvalues:";
                for (int i = 0; i < dim_; ++i) os << ' ' << es.eigenvalues()[i];
                throw numerical_error(os.str());
            }
        }
        return g;
    }

    /// F = sqrt(-2L) for causal v
    double F(const Vec& x, const Vec& v) const {
        const double L = eval_L(x, v);
        if (L > 0.0) throw domain_error("F: vector is spacelike");
        return std::sqrt(-2.0 * L);
    }

    double tau_null() const { return tau_null_; }

    CausalClass classify(const Vec& x, const Vec& v) const {
        const double vn2 = v.squaredNorm();
        if (vn2 == 0.0) return {Causality::zero, Orientation::none, false};
        if (!in_domain_cone(x, v)) return {Causality::spacelike, Orientation::none, false};
        const double L = eval_L(x, v);
        const double band = tau_null_ * vn2;
        CausalClass c{};
        c.on_tolerance_band = std::abs(L) <= band;
        if (L > band) {
            c.causality = Causality::spacelike;
            c.orientation = Orientation::none;
            return c;
        }
        c.causality = c.on_tolerance_band ? Causality::lightlike : Causality::timelike;
        // future iff g_X(X, v) < 0 on the (convex) cone component of X
        const Vec w = orientation(x);
        const Mat gw = fundamental_tensor(x, w);
        const double inner = w.transpose() * gw * v;
        c.orientation = inner < 0.0 ? Orientation::future : Orientation::past;
        return c;
    }

    // --- weight helpers ---------------------------------------------------

    Jet psi_jet(const Vec& x, int x_order) const {
        auto sp = JetSpace::get(dim_, x_order, 0);
        std::vector<Jet> xj;
        for (int a = 0; a < dim_; ++a) xj.push_back(Jet::variable_x(sp, a, x[a]));
        return weight_(xj);
    }

    double psi(const Vec& x) const { return psi_jet(x, 0).value(); }

    Vec dpsi(const Vec& x) const {
        Jet p = psi_jet(x, 1);
        Vec d(dim_);
        for (int a = 0; a < dim_; ++a) d[a] = p.partial_x(a);
        return d;
    }

    Mat d2psi(const Vec& x) const {
        Jet p = psi_jet(x, 2);
        Mat h(dim_, dim_);
        for (int a = 0; a < dim_; ++a)
            for (int b = a; b < dim_; ++b) {
                MultiIdx xm{}, vm{};
                xm[a]++;
                xm[b]++;
                h(a, b) = h(b, a) = p.partial(xm, vm);
            }
        return h;
    }

protected:
    explicit SpacetimeModel(int dim) : dim_(dim) {
        if (dim < 2) throw config_error("SpacetimeModel: dim must be >= 2");
    }

    void require_cone(const Vec& x, const Vec& v) const {
        if (!in_domain_cone(x, v))
            throw domain_error(name() + ": vector outside the declared domain cone");
    }

    int dim_;
    Weight weight_;
    double tau_null_ = 1e-9;
};

/// reverse structure: L(x, v) evaluated at -v, time-oriented by -X.
/// The weight is carried over unchanged.
class ReversedModel : public SpacetimeModel {
public:
    explicit ReversedModel(const SpacetimeModel& inner) : SpacetimeModel(inner.dim()), inner_(inner) {
        set_weight(inner.weight());
    }

    std::string name() const override { return inner_.name() + "-reversed"; }
    std::string describe() const override { return "reverse structure of " + inner_.describe(); }

    Jet lagrangian(std::span<const Jet> x, std::span<const Jet> v) const override {
        std::vector<Jet> nv;
        nv.reserve(v.size());
        for (const auto& j : v) nv.push_back(-j);
        return inner_.lagrangian(x, nv);
    }

    Vec orientation(const Vec& x) const override { return -inner_.orientation(x); }
    bool in_domain_cone(const Vec& x, const Vec& v) const override {
        return inner_.in_domain_cone(x, Vec(-v));
    }
    double cone_aperture() const override { return inner_.cone_aperture(); }
    bool reversible_claimed() const override { return inner_.reversible_claimed(); }
    double convexity_radius() const override { return inner_.convexity_radius(); }

private:
    const SpacetimeModel& inner_;
};

// --- sampling helpers -------------------------------------------------------

/// deterministic low-discrepancy points in [0,1]^d (Halton)
inline std::vector<Vec> halton_points(int count, int d, int skip = 20) {
    static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19};
    std::vector<Vec> pts;
    for (int k = skip; k < skip + count; ++k) {
        Vec p(d);
        for (int j = 0; j < d; ++j) {
            const int base = primes[j % 8];
            double f = 1.0, r = 0.0;
            int i = k;
            while (i > 0) {
                f /= base;
                r += f * (i % base);
                i /= base;
            }
            p[j] = r;
        }
        pts.push_back(p);
    }
    return pts;
}

/// timelike vector in the validated cone around X(x): X plus a spatial
/// perturbation reaching a fraction aperture*u of the model's own null
/// boundary in that direction, scaled by scale > 0
inline Vec cone_vector(const SpacetimeModel& m, const Vec& x, const Vec& dir_unit, double u,
                       double scale) {
    const Vec X = m.orientation(x);
    Vec spatial = dir_unit;
    spatial[0] = 0.0;
    const double ns = spatial.norm();
    if (ns == 0.0 || u == 0.0) return scale * X;
    spatial /= ns;

    auto L_at = [&](double lam) -> double {
        const Vec v = X + lam * spatial;
        if (!m.in_domain_cone(x, v)) return 1.0; // past the cone: treat as spacelike
        return m.eval_L(x, v);
    };
    // bracket the null boundary along the spatial direction
    double lo = 0.0, hi = 1.0;
    while (L_at(hi) < 0.0 && hi < 1e6) {
        lo = hi;
        hi *= 2.0;
    }
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (L_at(mid) < 0.0 ? lo : hi) = mid;
    }
    return scale * (X + (m.cone_aperture() * u * lo) * spatial);
}

/// vector at a fraction aperture*u of the *domain cone* boundary (where L
/// stops being defined); for models defined on all of TM\0 this falls back
/// to the null boundary. Used by the signature scan.
inline Vec domain_cone_vector(const SpacetimeModel& m, const Vec& x, const Vec& dir_unit,
                              double u, double scale) {
    const Vec X = m.orientation(x);
    Vec spatial = dir_unit;
    spatial[0] = 0.0;
    const double ns = spatial.norm();
    if (ns == 0.0 || u == 0.0) return scale * X;
    spatial /= ns;

    auto inside = [&](double lam) { return m.in_domain_cone(x, X + lam * spatial); };
    double lo = 0.0, hi = 1.0;
    while (inside(hi) && hi < 64.0) {
        lo = hi;
        hi *= 2.0;
    }
    if (inside(hi)) return cone_vector(m, x, dir_unit, u, scale); // unbounded domain
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (inside(mid) ? lo : hi) = mid;
    }
    return scale * (X + (m.cone_aperture() * u * lo) * spatial);
}

/// samples (x,v) pairs and reports homogeneity, signature, orientation and
/// reversibility residuals
inline ScenarioReport audit_model(const SpacetimeModel& m, int sample_budget, unsigned seed) {
    ScenarioReport rep;
    rep.experiment = "audit";
    rep.echo("model", m.name());
    rep.echo("samples", std::to_string(sample_budget));
    rep.echo("seed", std::to_string(seed));

    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> box(-1.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const int d = m.dim();
    double worst_hom = 0.0, worst_euler = 0.0, worst_g0hom = 0.0, worst_rev = 0.0;
    int signature_failures = 0, orientation_failures = 0;

    for (int s = 0; s < sample_budget; ++s) {
        Vec x(d), dir(d);
        for (int a = 0; a < d; ++a) {
            x[a] = box(rng);
            dir[a] = gauss(rng);
        }
        const Vec v = cone_vector(m, x, dir, unit(rng), 0.25 + 2.0 * unit(rng));
        const double L = m.eval_L(x, v);

        // positive 2-homogeneity
        const double c = 0.3 + 2.0 * unit(rng);
        const double Lc = m.eval_L(x, c * v);
        worst_hom = std::max(worst_hom, std::abs(Lc - c * c * L) / std::max(1.0, std::abs(L)));

        // Euler identity g_v(v,v) = 2L and 0-homogeneity of g
        {
            const Mat g = m.fundamental_tensor(x, v);
            const double q = v.transpose() * g * v;
            worst_euler =
                std::max(worst_euler, std::abs(q - 2.0 * L) / std::max(1.0, std::abs(L)));
            const Mat gc = m.fundamental_tensor(x, c * v);
            worst_g0hom = std::max(worst_g0hom, (gc - g).cwiseAbs().maxCoeff());
        }

        // signature scan over the declared domain-cone patch
        const Vec vd = domain_cone_vector(m, x, dir, unit(rng), 1.0);
        try {
            m.fundamental_tensor(x, vd, true);
        } catch (const numerical_error&) {
            ++signature_failures;
        }

        // future classification of cone samples
        auto cls = m.classify(x, v);
        if (cls.causality != Causality::timelike || cls.orientation != Orientation::future)
            ++orientation_failures;

        if (m.reversible_claimed() && m.in_domain_cone(x, -v)) {
            const double Lr = m.eval_L(x, -v);
            worst_rev = std::max(worst_rev, std::abs(Lr - L) / std::max(1.0, std::abs(L)));
        }
    }

    rep.add("homogeneity L(cv)=c^2 L(v)", worst_hom, 1e-12);
    rep.add("euler g_v(v,v)=2L(v)", worst_euler, 1e-12);
    rep.add("g 0-homogeneity", worst_g0hom, 1e-12);
    rep.add("signature failures", signature_failures, 0.0);
    rep.add("orientation failures", orientation_failures, 0.0);
    if (m.reversible_claimed()) rep.add("reversibility L(-v)=L(v)", worst_rev, 1e-12);

    // L(X) < 0 on sampled points
    std::mt19937 rng2(seed + 1);
    double worst_LX = -1.0;
    for (int s = 0; s < std::min(sample_budget, 256); ++s) {
        Vec x(d);
        for (int a = 0; a < d; ++a) x[a] = box(rng2);
        worst_LX = std::max(worst_LX, m.eval_L(x, m.orientation(x)));
    }
    rep.add("orientation field timelike (max L(X), must be < 0)", worst_LX, -1e-15,
            "negative by margin");
    return rep;
}

} // namespace lfg

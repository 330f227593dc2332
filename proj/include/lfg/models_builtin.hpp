#pragma once

#include "lfg/model.hpp"

#include <map>
#include <memory>
#include <sstream>

namespace lfg {

using ParamMap = std::map<std::string, double>;

namespace detail {
inline double param(const ParamMap& p, const std::string& key, double fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}
} // namespace detail

/// L = (-(v^0)^2 + sum_i (v^i)^2) / 2
class Minkowski : public SpacetimeModel {
public:
    explicit Minkowski(int dim, std::string name = "minkowski")
        : SpacetimeModel(dim), name_(std::move(name)) {}
    std::string name() const override { return name_; }
    std::string describe() const override {
        std::string s = name_ + ": L = (-(v^0)^2 + |vbar|^2)/2 on all of TM\\0; "
                                "quadratic, hence Lorentzian and Berwald with Γ = 0, R = 0; "
                                "geodesics are affine lines, d(x,y) = F(y-x) for causal y-x.";
        if (name_ != "minkowski")
            s += " Carries the weight Psi = a x^0 (timelike gradient).";
        return s;
    }
    Jet lagrangian(std::span<const Jet> x, std::span<const Jet> v) const override {
        (void)x;
        Jet L = -0.5 * sqr(v[0]);
        for (int i = 1; i < dim_; ++i) L += 0.5 * sqr(v[static_cast<std::size_t>(i)]);
        return L;
    }
    double cone_aperture() const override { return 0.95; }

private:
    std::string name_;
};

/// FLRW-like Lorentzian metric g = -dt^2 + s(t)^2 (dx^1..dx^n), s(t)=exp(rate*t)
class Flrw : public SpacetimeModel {
public:
    Flrw(int dim, double rate) : SpacetimeModel(dim), rate_(rate) {}
    std::string name() const override { return "flrw"; }
    std::string describe() const override {
        std::ostringstream os;
        os << "flrw: L = (-(v^0)^2 + e^{2a x^0} |vbar|^2)/2 with a = " << rate_
           << "; Lorentzian (Berwald); gamma^0_{ii} = a e^{2a x^0}, gamma^i_{0i} = a; "
              "Ric(d_t) = -n a^2.";
        return os.str();
    }
    Jet lagrangian(std::span<const Jet> x, std::span<const Jet> v) const override {
        Jet s2 = exp(2.0 * rate_ * x[0]);
        Jet L = -0.5 * sqr(v[0]);
        for (int i = 1; i < dim_; ++i) L += 0.5 * s2 * sqr(v[static_cast<std::size_t>(i)]);
        return L;
    }
    double rate() const { return rate_; }
    double cone_aperture() const override { return 0.95; }
    double convexity_radius() const override { return 0.5; }

private:
    double rate_;
};

/// flat non-quadratic Berwald family:
/// L = L_mink + eps * b(x) * Q(v) / (2 Fm^2),  Fm^2 = (v^0)^2 - |vbar|^2,
/// with Q a spatial quartic. b == 1 gives x-independent (Berwald) models.
class QuarticFamily : public SpacetimeModel {
public:
    enum class Kind { axis, axis_x_dependent, isotropic };

    QuarticFamily(int dim, double eps, Kind kind) : SpacetimeModel(dim), eps_(eps), kind_(kind) {}

    std::string name() const override {
        switch (kind_) {
            case Kind::axis: return "flat-quartic";
            case Kind::axis_x_dependent: return "nonberwald-quartic";
            case Kind::isotropic: return "product-berwald";
        }
        return "quartic";
    }

    std::string describe() const override {
        std::ostringstream os;
        os << name() << ": L = L_mink + eps*" << (kind_ == Kind::axis_x_dependent ? "x^1*" : "")
           << (kind_ == Kind::isotropic ? "sum_i (v^i)^4" : "(v^1)^4")
           << "/(2((v^0)^2-|vbar|^2)) with eps = " << eps_
           << "; declared domain cone: (v^0)^2 > |vbar|^2 (validated aperture "
           << cone_aperture() << " around X = d_t);"
           << (kind_ == Kind::axis_x_dependent
                   ? " x-dependent quartic term, non-Berwald by construction."
                   : " x-independent, hence flat Berwald: Γ = 0, R = 0, geodesics affine.");
        return os.str();
    }

    Jet lagrangian(std::span<const Jet> x, std::span<const Jet> v) const override {
        Jet Fm2 = sqr(v[0]);
        for (int i = 1; i < dim_; ++i) Fm2 -= sqr(v[static_cast<std::size_t>(i)]);
        Jet L = -0.5 * Fm2;
        Jet Q = [&] {
            if (kind_ == Kind::isotropic) {
                Jet q = sqr(sqr(v[1]));
                for (int i = 2; i < dim_; ++i) q += sqr(sqr(v[static_cast<std::size_t>(i)]));
                return q;
            }
            return sqr(sqr(v[1]));
        }();
        Jet term = (0.5 * eps_) * Q / Fm2;
        if (kind_ == Kind::axis_x_dependent) term = term * x[1];
        return L + term;
    }

    bool in_domain_cone(const Vec& x, const Vec& v) const override {
        (void)x;
        double fm2 = v[0] * v[0];
        for (int i = 1; i < dim_; ++i) fm2 -= v[i] * v[i];
        return fm2 > 0.0;
    }

    double cone_aperture() const override { return 0.8; }
    double eps() const { return eps_; }

private:
    double eps_;
    Kind kind_;
};

// --- weights ----------------------------------------------------------------

inline Weight make_weight(const std::string& name, const ParamMap& params) {
    Weight w;
    w.name = name;
    if (name == "zero") {
        return w;
    }
    if (name == "constant") {
        const double c = detail::param(params, "value", 1.0);
        w.fn = [c](std::span<const Jet> x) { return Jet::constant(x[0].space(), c); };
        return w;
    }
    if (name == "linear-t") { // Psi = a * x^0 (timelike gradient)
        const double a = detail::param(params, "a", -0.5);
        w.fn = [a](std::span<const Jet> x) { return a * x[0]; };
        return w;
    }
    if (name == "fiber-linear") { // Psi = a * x^i, i >= 1 (constant along d_t lines)
        const double a = detail::param(params, "a", 0.5);
        const int i = static_cast<int>(detail::param(params, "index", 1.0));
        if (i < 1) throw config_error("fiber-linear weight: index must be a spatial coordinate");
        w.fn = [a, i](std::span<const Jet> x) {
            return a * x[static_cast<std::size_t>(i)];
        };
        return w;
    }
    throw config_error("unknown weight: " + name);
}

// --- registry ----------------------------------------------------------------

inline std::vector<std::string> model_names() {
    return {"minkowski", "weighted-minkowski", "flrw",
            "flat-quartic", "nonberwald-quartic", "product-berwald"};
}

inline std::unique_ptr<SpacetimeModel> make_model(const std::string& name, int dim,
                                                  const ParamMap& params = {}) {
    using detail::param;
    std::unique_ptr<SpacetimeModel> m;
    if (name == "minkowski") {
        m = std::make_unique<Minkowski>(dim);
    } else if (name == "weighted-minkowski") {
        m = std::make_unique<Minkowski>(dim, "weighted-minkowski");
        m->set_weight(make_weight("linear-t", {{"a", param(params, "a", -0.5)}}));
    } else if (name == "flrw") {
        m = std::make_unique<Flrw>(dim, param(params, "rate", 1.0));
    } else if (name == "flat-quartic") {
        m = std::make_unique<QuarticFamily>(dim, param(params, "eps", 0.1),
                                            QuarticFamily::Kind::axis);
    } else if (name == "nonberwald-quartic") {
        m = std::make_unique<QuarticFamily>(dim, param(params, "eps", 0.1),
                                            QuarticFamily::Kind::axis_x_dependent);
    } else if (name == "product-berwald") {
        m = std::make_unique<QuarticFamily>(dim, param(params, "eps", 0.1),
                                            QuarticFamily::Kind::isotropic);
    } else {
        throw config_error("unknown model: " + name);
    }
    return m;
}

} // namespace lfg

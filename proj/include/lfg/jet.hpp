#pragma once

#include "lfg/errors.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <map>
#include <span>
#include <unordered_map>
#include <vector>

namespace lfg {

// Dense truncated Taylor arithmetic over the 2*dim slots
// (x^0..x^n, v^0..v^n), with independent total-order caps for the
// x-group and the v-group. Coefficients are stored Taylor-normalized
// (partial derivative divided by the factorial of the multi-index), so
// multiplication is a plain truncated polynomial product.

inline constexpr int kMaxXOrder = 2;
inline constexpr int kMaxVOrder = 4;
inline constexpr int kMaxDim = 8;

using MultiIdx = std::array<std::uint8_t, kMaxDim>;

namespace detail {

inline void enumerate_group(int nvar, int cap, std::vector<MultiIdx>& out) {
    // graded enumeration so the zero index comes first
    MultiIdx cur{};
    out.push_back(cur);
    for (int deg = 1; deg <= cap; ++deg) {
        // all exponent vectors of total degree == deg
        std::vector<MultiIdx> level;
        auto rec = [&](auto&& self, int slot, int rem, MultiIdx& idx) -> void {
            if (slot == nvar - 1) {
                idx[slot] = static_cast<std::uint8_t>(rem);
                level.push_back(idx);
                idx[slot] = 0;
                return;
            }
            for (int e = rem; e >= 0; --e) {
                idx[slot] = static_cast<std::uint8_t>(e);
                self(self, slot + 1, rem - e, idx);
            }
            idx[slot] = 0;
        };
        MultiIdx idx{};
        rec(rec, 0, deg, idx);
        out.insert(out.end(), level.begin(), level.end());
    }
}

inline std::uint64_t pack(const MultiIdx& m, int nvar) {
    std::uint64_t key = 0;
    for (int i = 0; i < nvar; ++i) key = (key << 3) | m[i];
    return key;
}

} // namespace detail

class JetSpace {
public:
    struct Pair {
        std::int32_t a, b, result;
    };

    static std::shared_ptr<const JetSpace> get(int dim, int x_order, int v_order);

    int dim() const { return dim_; }
    int x_order() const { return x_order_; }
    int v_order() const { return v_order_; }
    int size() const { return static_cast<int>(nx_ * nv_); }
    int nx() const { return static_cast<int>(nx_); }
    int nv() const { return static_cast<int>(nv_); }

    // position of the coefficient for (x multi-index, v multi-index)
    int position(const MultiIdx& xm, const MultiIdx& vm) const {
        auto ix = xlookup_.find(detail::pack(xm, dim_));
        auto iv = vlookup_.find(detail::pack(vm, dim_));
        if (ix == xlookup_.end() || iv == vlookup_.end()) return -1;
        return static_cast<int>(ix->second * nv_ + iv->second);
    }

    const std::vector<MultiIdx>& x_indices() const { return xidx_; }
    const std::vector<MultiIdx>& v_indices() const { return vidx_; }
    const std::vector<Pair>& x_pairs() const { return xpairs_; }
    const std::vector<Pair>& v_pairs() const { return vpairs_; }
    int x_total(int xi) const { return xtotal_[static_cast<std::size_t>(xi)]; }
    int v_total(int vi) const { return vtotal_[static_cast<std::size_t>(vi)]; }

    double index_factorial(int pos) const { return fact_[static_cast<std::size_t>(pos)]; }

private:
    JetSpace(int dim, int x_order, int v_order);

    int dim_, x_order_, v_order_;
    std::size_t nx_ = 0, nv_ = 0;
    std::vector<MultiIdx> xidx_, vidx_;
    std::vector<int> xtotal_, vtotal_;
    std::unordered_map<std::uint64_t, std::size_t> xlookup_, vlookup_;
    std::vector<Pair> xpairs_, vpairs_;
    std::vector<double> fact_; // product of exponent factorials per position
};

inline JetSpace::JetSpace(int dim, int x_order, int v_order)
    : dim_(dim), x_order_(x_order), v_order_(v_order) {
    if (dim < 1 || dim > kMaxDim)
        throw config_error("JetSpace: dim out of range");
    if (x_order < 0 || x_order > kMaxXOrder || v_order < 0 || v_order > kMaxVOrder)
        throw config_error("JetSpace: order cap exceeded (x<=2, v<=4)");

    detail::enumerate_group(dim, x_order, xidx_);
    detail::enumerate_group(dim, v_order, vidx_);
    nx_ = xidx_.size();
    nv_ = vidx_.size();

    auto total = [&](const MultiIdx& m) {
        int t = 0;
        for (int i = 0; i < dim_; ++i) t += m[i];
        return t;
    };
    for (std::size_t i = 0; i < nx_; ++i) {
        xlookup_[detail::pack(xidx_[i], dim_)] = i;
        xtotal_.push_back(total(xidx_[i]));
    }
    for (std::size_t i = 0; i < nv_; ++i) {
        vlookup_[detail::pack(vidx_[i], dim_)] = i;
        vtotal_.push_back(total(vidx_[i]));
    }

    auto build_pairs = [&](const std::vector<MultiIdx>& idx,
                           const std::unordered_map<std::uint64_t, std::size_t>& lookup,
                           int cap, std::vector<Pair>& pairs) {
        const auto m = idx.size();
        for (std::size_t a = 0; a < m; ++a) {
            for (std::size_t b = 0; b < m; ++b) {
                MultiIdx s{};
                int t = 0;
                for (int i = 0; i < dim_; ++i) {
                    s[i] = static_cast<std::uint8_t>(idx[a][i] + idx[b][i]);
                    t += s[i];
                }
                if (t > cap) continue;
                auto it = lookup.find(detail::pack(s, dim_));
                pairs.push_back({static_cast<std::int32_t>(a), static_cast<std::int32_t>(b),
                                 static_cast<std::int32_t>(it->second)});
            }
        }
    };
    build_pairs(xidx_, xlookup_, x_order_, xpairs_);
    build_pairs(vidx_, vlookup_, v_order_, vpairs_);

    static const double fac[] = {1, 1, 2, 6, 24};
    fact_.resize(nx_ * nv_);
    for (std::size_t xi = 0; xi < nx_; ++xi) {
        double fx = 1;
        for (int i = 0; i < dim_; ++i) fx *= fac[xidx_[xi][i]];
        for (std::size_t vi = 0; vi < nv_; ++vi) {
            double fv = 1;
            for (int i = 0; i < dim_; ++i) fv *= fac[vidx_[vi][i]];
            fact_[xi * nv_ + vi] = fx * fv;
        }
    }
}

inline std::shared_ptr<const JetSpace> JetSpace::get(int dim, int x_order, int v_order) {
    static std::mutex mtx;
    static std::map<std::tuple<int, int, int>, std::shared_ptr<const JetSpace>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto key = std::make_tuple(dim, x_order, v_order);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto sp = std::shared_ptr<const JetSpace>(new JetSpace(dim, x_order, v_order));
    cache.emplace(key, sp);
    return sp;
}

class Jet {
public:
    Jet() = default;

    static Jet constant(std::shared_ptr<const JetSpace> sp, double value) {
        Jet j(std::move(sp));
        j.c_[0] = value;
        return j;
    }
    // seed slot alpha of the x-group as an independent variable
    static Jet variable_x(std::shared_ptr<const JetSpace> sp, int alpha, double value) {
        Jet j(std::move(sp));
        j.c_[0] = value;
        if (j.sp_->x_order() > 0) {
            MultiIdx xm{}, vm{};
            xm[alpha] = 1;
            j.c_[static_cast<std::size_t>(j.sp_->position(xm, vm))] = 1.0;
        }
        return j;
    }
    static Jet variable_v(std::shared_ptr<const JetSpace> sp, int alpha, double value) {
        Jet j(std::move(sp));
        j.c_[0] = value;
        if (j.sp_->v_order() > 0) {
            MultiIdx xm{}, vm{};
            vm[alpha] = 1;
            j.c_[static_cast<std::size_t>(j.sp_->position(xm, vm))] = 1.0;
        }
        return j;
    }

    const std::shared_ptr<const JetSpace>& space() const { return sp_; }
    double value() const { return c_.empty() ? 0.0 : c_[0]; }
    int valid_x() const { return vx_; }
    int valid_v() const { return vv_; }

    // mixed partial derivative; throws if the requested order exceeds what
    // this jet still carries (never a silent zero)
    double partial(const MultiIdx& xm, const MultiIdx& vm) const {
        int tx = 0, tv = 0;
        for (int i = 0; i < sp_->dim(); ++i) {
            tx += xm[i];
            tv += vm[i];
        }
        if (tx > vx_ || tv > vv_)
            throw config_error("Jet::partial: requested order exceeds jet's valid order");
        const int pos = sp_->position(xm, vm);
        return c_[static_cast<std::size_t>(pos)] * sp_->index_factorial(pos);
    }

    // single-slot conveniences
    double partial_v(int a) const {
        MultiIdx xm{}, vm{};
        vm[a] = 1;
        return partial(xm, vm);
    }
    double partial_x(int a) const {
        MultiIdx xm{}, vm{};
        xm[a] = 1;
        return partial(xm, vm);
    }

    // d/dx^alpha as a jet over the same space (one x-order consumed)
    Jet deriv_x(int alpha) const {
        if (vx_ < 1) throw config_error("Jet::deriv_x: x-order exhausted");
        Jet r(sp_);
        r.vx_ = vx_ - 1;
        r.vv_ = vv_;
        const auto& xs = sp_->x_indices();
        const int nv = sp_->nv();
        for (std::size_t xi = 0; xi < xs.size(); ++xi) {
            if (sp_->x_total(static_cast<int>(xi)) >= sp_->x_order()) continue;
            MultiIdx up = xs[xi];
            up[alpha]++;
            MultiIdx vz{};
            const int base = sp_->position(up, vz);
            if (base < 0) continue;
            const double mult = up[alpha];
            for (int vi = 0; vi < nv; ++vi)
                r.c_[xi * static_cast<std::size_t>(nv) + static_cast<std::size_t>(vi)] =
                    mult * c_[static_cast<std::size_t>(base + vi)];
        }
        return r;
    }

    Jet deriv_v(int alpha) const {
        if (vv_ < 1) throw config_error("Jet::deriv_v: v-order exhausted");
        Jet r(sp_);
        r.vx_ = vx_;
        r.vv_ = vv_ - 1;
        const auto& vs = sp_->v_indices();
        const int nv = sp_->nv();
        const int nx = sp_->nx();
        for (std::size_t vi = 0; vi < vs.size(); ++vi) {
            if (sp_->v_total(static_cast<int>(vi)) >= sp_->v_order()) continue;
            MultiIdx up = vs[vi];
            up[alpha]++;
            MultiIdx xz{};
            const int src = sp_->position(xz, up);
            if (src < 0) continue;
            // src is position(0, up) == column index of the bumped v-index
            const double mult = up[alpha];
            for (int xi = 0; xi < nx; ++xi)
                r.c_[static_cast<std::size_t>(xi) * static_cast<std::size_t>(nv) + vi] =
                    mult * c_[static_cast<std::size_t>(xi) * static_cast<std::size_t>(nv) +
                              static_cast<std::size_t>(src)];
        }
        return r;
    }

    Jet operator-() const {
        Jet r = *this;
        for (auto& v : r.c_) v = -v;
        return r;
    }

    Jet& operator+=(const Jet& o) {
        check_space(o);
        vx_ = std::min(vx_, o.vx_);
        vv_ = std::min(vv_, o.vv_);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        check_space(o);
        vx_ = std::min(vx_, o.vx_);
        vv_ = std::min(vv_, o.vv_);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
        return *this;
    }
    Jet& operator+=(double s) {
        c_[0] += s;
        return *this;
    }
    Jet& operator-=(double s) {
        c_[0] -= s;
        return *this;
    }
    Jet& operator*=(double s) {
        for (auto& v : c_) v *= s;
        return *this;
    }
    Jet& operator/=(double s) { return *this *= 1.0 / s; }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator+(Jet a, double s) { return a += s; }
    friend Jet operator+(double s, Jet a) { return a += s; }
    friend Jet operator-(Jet a, double s) { return a -= s; }
    friend Jet operator-(double s, const Jet& a) { return -a + s; }
    friend Jet operator*(Jet a, double s) { return a *= s; }
    friend Jet operator*(double s, Jet a) { return a *= s; }
    friend Jet operator/(Jet a, double s) { return a /= s; }

    friend Jet operator*(const Jet& a, const Jet& b) {
        a.check_space(b);
        Jet r(a.sp_);
        r.vx_ = std::min(a.vx_, b.vx_);
        r.vv_ = std::min(a.vv_, b.vv_);
        const auto& xp = a.sp_->x_pairs();
        const auto& vp = a.sp_->v_pairs();
        const std::size_t nv = static_cast<std::size_t>(a.sp_->nv());
        for (const auto& px : xp) {
            const double* ra = a.c_.data() + static_cast<std::size_t>(px.a) * nv;
            const double* rb = b.c_.data() + static_cast<std::size_t>(px.b) * nv;
            double* rr = r.c_.data() + static_cast<std::size_t>(px.result) * nv;
            for (const auto& pv : vp)
                rr[pv.result] += ra[pv.a] * rb[pv.b];
        }
        return r;
    }

    friend Jet operator/(const Jet& a, const Jet& b) { return a * b.recip(); }
    friend Jet operator/(double s, const Jet& b) { return b.recip() * s; }

    // composition with an analytic univariate function given by its
    // derivatives at value(): f(u) = sum_k d[k]/k! (u - u0)^k
    Jet compose(std::span<const double> derivs) const {
        const int K = vx_ + vv_;
        Jet p = *this;
        p.c_[0] = 0.0;
        Jet r = Jet::constant(sp_, derivs[0]);
        r.vx_ = vx_;
        r.vv_ = vv_;
        Jet pk = Jet::constant(sp_, 1.0);
        pk.vx_ = vx_;
        pk.vv_ = vv_;
        double kfac = 1.0;
        for (int k = 1; k <= K && k < static_cast<int>(derivs.size()); ++k) {
            pk = pk * p;
            kfac *= k;
            r += pk * (derivs[static_cast<std::size_t>(k)] / kfac);
        }
        return r;
    }

    Jet recip() const {
        const double u0 = value();
        if (u0 == 0.0) throw numerical_error("Jet::recip: division by zero jet value");
        std::array<double, kMaxXOrder + kMaxVOrder + 1> d{};
        double p = 1.0 / u0;
        double kfac = 1.0;
        for (int k = 0; k <= vx_ + vv_; ++k) {
            d[static_cast<std::size_t>(k)] = kfac * p; // k-th derivative of 1/u: (-1)^k k!/u^{k+1}
            p /= -u0;
            kfac *= (k + 1);
        }
        return compose(std::span<const double>(d.data(), static_cast<std::size_t>(vx_ + vv_ + 1)));
    }

private:
    explicit Jet(std::shared_ptr<const JetSpace> sp)
        : sp_(std::move(sp)),
          c_(static_cast<std::size_t>(sp_->size()), 0.0),
          vx_(sp_->x_order()),
          vv_(sp_->v_order()) {}

    void check_space(const Jet& o) const {
        if (sp_.get() != o.sp_.get())
            throw config_error("Jet: mixing jets from different spaces");
    }

    std::shared_ptr<const JetSpace> sp_;
    std::vector<double> c_;
    int vx_ = 0, vv_ = 0;
};

inline Jet sqrt(const Jet& u) {
    const double u0 = u.value();
    if (u0 <= 0.0) throw domain_error("jet sqrt of non-positive value");
    const int K = u.valid_x() + u.valid_v();
    std::array<double, kMaxXOrder + kMaxVOrder + 1> d{};
    d[0] = std::sqrt(u0);
    double coef = 0.5;
    for (int k = 1; k <= K; ++k) {
        d[static_cast<std::size_t>(k)] = coef * d[0] / std::pow(u0, k);
        coef *= (0.5 - k);
    }
    return u.compose(std::span<const double>(d.data(), static_cast<std::size_t>(K + 1)));
}

inline Jet exp(const Jet& u) {
    const int K = u.valid_x() + u.valid_v();
    std::array<double, kMaxXOrder + kMaxVOrder + 1> d{};
    const double e = std::exp(u.value());
    for (int k = 0; k <= K; ++k) d[static_cast<std::size_t>(k)] = e;
    return u.compose(std::span<const double>(d.data(), static_cast<std::size_t>(K + 1)));
}

inline Jet log(const Jet& u) {
    const double u0 = u.value();
    if (u0 <= 0.0) throw domain_error("jet log of non-positive value");
    const int K = u.valid_x() + u.valid_v();
    std::array<double, kMaxXOrder + kMaxVOrder + 1> d{};
    d[0] = std::log(u0);
    double p = 1.0 / u0, kfac = 1.0;
    for (int k = 1; k <= K; ++k) {
        d[static_cast<std::size_t>(k)] = kfac * p;
        p /= -u0;
        kfac *= k;
    }
    return u.compose(std::span<const double>(d.data(), static_cast<std::size_t>(K + 1)));
}

inline Jet pow(const Jet& u, double e) {
    const double u0 = u.value();
    if (u0 <= 0.0) throw domain_error("jet pow of non-positive base");
    const int K = u.valid_x() + u.valid_v();
    std::array<double, kMaxXOrder + kMaxVOrder + 1> d{};
    double coef = 1.0;
    for (int k = 0; k <= K; ++k) {
        d[static_cast<std::size_t>(k)] = coef * std::pow(u0, e - k);
        coef *= (e - k);
    }
    return u.compose(std::span<const double>(d.data(), static_cast<std::size_t>(K + 1)));
}

inline Jet sin(const Jet& u) {
    const int K = u.valid_x() + u.valid_v();
    std::array<double, kMaxXOrder + kMaxVOrder + 1> d{};
    const double s = std::sin(u.value()), c = std::cos(u.value());
    const double cyc[4] = {s, c, -s, -c};
    for (int k = 0; k <= K; ++k) d[static_cast<std::size_t>(k)] = cyc[k % 4];
    return u.compose(std::span<const double>(d.data(), static_cast<std::size_t>(K + 1)));
}

inline Jet cos(const Jet& u) {
    const int K = u.valid_x() + u.valid_v();
    std::array<double, kMaxXOrder + kMaxVOrder + 1> d{};
    const double s = std::sin(u.value()), c = std::cos(u.value());
    const double cyc[4] = {c, -s, -c, s};
    for (int k = 0; k <= K; ++k) d[static_cast<std::size_t>(k)] = cyc[k % 4];
    return u.compose(std::span<const double>(d.data(), static_cast<std::size_t>(K + 1)));
}

inline Jet sqr(const Jet& u) { return u * u; }

// Evaluate a scalar function of (point, vector) with all mixed partials up
// to the requested orders. f receives the seeded jet coordinates.
template <typename F>
Jet lift(F&& f, std::span<const double> x, std::span<const double> v, int x_order, int v_order) {
    const int dim = static_cast<int>(x.size());
    auto sp = JetSpace::get(dim, x_order, v_order);
    std::vector<Jet> xj, vj;
    xj.reserve(static_cast<std::size_t>(dim));
    vj.reserve(static_cast<std::size_t>(dim));
    for (int a = 0; a < dim; ++a) {
        xj.push_back(Jet::variable_x(sp, a, x[static_cast<std::size_t>(a)]));
        vj.push_back(Jet::variable_v(sp, a, v[static_cast<std::size_t>(a)]));
    }
    return f(std::span<const Jet>(xj), std::span<const Jet>(vj));
}

} // namespace lfg

#pragma once

#include "stable_anticipate/common.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <list>
#include <mutex>
#include <queue>
#include <unordered_map>
#include <vector>

namespace sa {

/// Result of a vector-valued adaptive integration.
template <std::size_t N>
struct VecIntegral {
    std::array<double, N> value{};
    std::array<double, N> err{};
    std::array<double, N> l1{};  // integral of |f_k|, used for the roundoff floor
    std::size_t nodes = 0;
    bool converged = true;
};

namespace detail {

// 15-point Kronrod nodes (non-negative half) and weights, with the embedded
// 7-point Gauss weights on the odd Kronrod nodes.
inline constexpr std::array<double, 8> gk_x = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> gk_wk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gk_wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <std::size_t N>
struct Panel {
    double a = 0.0, b = 0.0;
    std::array<double, N> val{}, err{}, l1{};
    double score = 0.0;
    bool operator<(const Panel& o) const { return score < o.score; }
};

template <std::size_t N, class F>
Panel<N> gk15(F& f, double a, double b) {
    Panel<N> p;
    p.a = a;
    p.b = b;
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    std::array<double, N> k{}, g{}, l{};
    auto add = [&](const std::array<double, N>& fv, double wk, double wg) {
        for (std::size_t i = 0; i < N; ++i) {
            k[i] += wk * fv[i];
            g[i] += wg * fv[i];
            l[i] += wk * std::abs(fv[i]);
        }
    };
    add(f(c), gk_wk[7], gk_wg[3]);
    for (int j = 0; j < 7; ++j) {
        const double dx = h * gk_x[j];
        const double wg = (j % 2 == 1) ? gk_wg[j / 2] : 0.0;
        add(f(c - dx), gk_wk[j], wg);
        add(f(c + dx), gk_wk[j], wg);
    }
    for (std::size_t i = 0; i < N; ++i) {
        p.val[i] = k[i] * h;
        p.err[i] = std::abs((k[i] - g[i]) * h);
        p.l1[i] = l[i] * std::abs(h);
        p.score = std::max(p.score, p.err[i]);
    }
    return p;
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) integration of a vector-valued
/// function over a list of panels. The worst panel is bisected until every
/// component satisfies err <= max(tol_abs, tol_rel*|value|) or the node budget
/// is spent. Errors never go below a roundoff floor of 50 eps times the L1 norm.
template <std::size_t N, class F>
VecIntegral<N> integrate_panels(F&& f, const std::vector<std::pair<double, double>>& panels,
                                double tol_abs, double tol_rel, std::size_t max_nodes = 4'000'000) {
    using P = detail::Panel<N>;
    std::priority_queue<P> heap;
    std::vector<P> done;
    VecIntegral<N> out;
    std::array<double, N> tv{}, te{}, tl{};
    auto account = [&](const P& p, double sign) {
        for (std::size_t i = 0; i < N; ++i) {
            tv[i] += sign * p.val[i];
            te[i] += sign * p.err[i];
            tl[i] += sign * p.l1[i];
        }
    };
    for (auto [a, b] : panels) {
        if (!(b > a)) continue;
        P p = detail::gk15<N>(f, a, b);
        out.nodes += 15;
        account(p, 1.0);
        heap.push(p);
    }
    constexpr double eps = std::numeric_limits<double>::epsilon();
    auto satisfied = [&]() {
        for (std::size_t i = 0; i < N; ++i) {
            const double target = std::max({tol_abs, tol_rel * std::abs(tv[i]), 50.0 * eps * tl[i]});
            if (te[i] > target) return false;
        }
        return true;
    };
    std::size_t iter = 0;
    while (!heap.empty() && !satisfied()) {
        if (out.nodes >= max_nodes) {
            out.converged = false;
            break;
        }
        P worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b) || (worst.b - worst.a) < 1e-15 * std::abs(mid)) {
            done.push_back(worst);
            continue;
        }
        account(worst, -1.0);
        P left = detail::gk15<N>(f, worst.a, mid);
        P right = detail::gk15<N>(f, mid, worst.b);
        out.nodes += 30;
        account(left, 1.0);
        account(right, 1.0);
        heap.push(left);
        heap.push(right);
        // periodic exact re-summation against drift of the running totals
        if (++iter % 4096 == 0) {
            tv = {};
            te = {};
            tl = {};
            auto tmp = heap;
            while (!tmp.empty()) {
                account(tmp.top(), 1.0);
                tmp.pop();
            }
            for (const auto& p : done) account(p, 1.0);
        }
    }
    out.value = {};
    out.err = {};
    out.l1 = {};
    auto collect = [&](const P& p) {
        for (std::size_t i = 0; i < N; ++i) {
            out.value[i] += p.val[i];
            out.err[i] += p.err[i];
            out.l1[i] += p.l1[i];
        }
    };
    while (!heap.empty()) {
        collect(heap.top());
        heap.pop();
    }
    for (const auto& p : done) collect(p);
    for (std::size_t i = 0; i < N; ++i)
        out.err[i] = std::max(out.err[i], 50.0 * eps * out.l1[i]);
    return out;
}

/// Panel layout for an oscillatory integrand on (0, T].
/// The singular piece (0, u0] is carried by the parameter t in [-1, 0] through
/// u = u0 * (1 + t)^m; the remaining [u0, T] is cut into panels spanning at most
/// one local period 2 pi / rate(u), where rate bounds the phase derivative.
struct OscLayout {
    double u0 = 1.0;
    int m = 1;
    double T = 1.0;
    std::vector<std::pair<double, double>> panels;
};

inline OscLayout make_osc_layout(double u0, int m, double T, const std::function<double(double, double)>& rate,
                                 std::size_t max_panels = 2'000'000) {
    OscLayout L;
    L.u0 = u0;
    L.m = m;
    L.T = T;
    for (int i = 0; i < 4; ++i) L.panels.emplace_back(-1.0 + 0.25 * i, -0.75 + 0.25 * i);
    const double dmax = (T - u0) / 16.0;
    double u = u0;
    while (u < T && L.panels.size() < max_panels) {
        const double probe = std::min(T, u + dmax);
        const double r = rate(u, probe);
        double d = dmax;
        if (r > 0.0) d = std::min(dmax, 2.0 * pi / r);
        const double next = (T - (u + d) < 0.25 * d) ? T : u + d;
        L.panels.emplace_back(u, next);
        u = next;
    }
    if (u < T) L.panels.emplace_back(u, T);
    return L;
}

/// Wraps an integrand g(u) on (0, inf) into the layout's parameter space.
template <class G>
auto osc_integrand(const OscLayout& L, G& g) {
    const double u0 = L.u0;
    const int m = L.m;
    return [u0, m, &g](double t) {
        if (t <= 0.0) {
            const double s = 1.0 + t;
            const double sm1 = std::pow(s, m - 1);
            const double u = u0 * sm1 * s;
            auto v = g(u);
            const double jac = m * u0 * sm1;
            for (auto& c : v) c *= jac;
            return v;
        }
        return g(t);
    };
}

/// Truncation point T such that e^{-b T^alpha} T^y / (alpha b T^{alpha-1}) < target.
inline double exp_power_truncation(double b, double alpha, double y, double target) {
    const double L0 = std::log(1.0 / target);
    double T = std::pow(std::max(L0, 1.0) / b, 1.0 / alpha);
    for (int i = 0; i < 30; ++i) {
        const double rhs = L0 + y * std::log(T) - std::log(alpha * b * std::pow(T, alpha - 1.0));
        const double Tn = std::pow(std::max(rhs, 1.0) / b, 1.0 / alpha);
        if (std::abs(Tn - T) < 1e-10 * T) {
            T = Tn;
            break;
        }
        T = Tn;
    }
    return T * 1.02;
}

/// Cosine/sine pair of H-family integrals for several exponents sharing one phase:
///   C(y) = int_0^inf e^{-b u^alpha} u^y cos(u x - c u^alpha) du,  S(y) likewise with sin.
/// Output component 2i is C(ys[i]), 2i+1 is S(ys[i]).
template <std::size_t K>
VecIntegral<2 * K> cs_family(const std::array<double, K>& ys, double x, double b, double c, double alpha,
                             double tol_abs, double tol_rel) {
    double ymin = 0.0, ymax = 0.0;
    for (double y : ys) {
        if (!(y > -1.0)) throw DomainError("H-family exponent must exceed -1 (integral diverges)");
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    const double scale = std::pow(b, -1.0 / alpha);
    const double T = exp_power_truncation(b, alpha, ymax, std::min(tol_abs, 1e-3) * 1e-3);
    const double xr = std::abs(x) + alpha * std::abs(c) * std::pow(scale, alpha - 1.0);
    const double u0 = std::min({scale, pi / std::max(xr, 1e-300), 0.5 * T});
    const int m = std::clamp(static_cast<int>(std::ceil(2.0 / (1.0 + ymin))), 2, 12);
    auto rate = [x, c, alpha](double u1, double u2) {
        return std::abs(x) + alpha * std::abs(c) * std::max(std::pow(u1, alpha - 1.0), std::pow(u2, alpha - 1.0));
    };
    const OscLayout L = make_osc_layout(u0, m, T, rate);
    auto g = [&](double u) {
        std::array<double, 2 * K> r{};
        const double ua = std::pow(u, alpha);
        const double lu = std::log(u);
        const double ph = u * x - c * ua;
        const double cp = std::cos(ph), sp = std::sin(ph);
        for (std::size_t i = 0; i < K; ++i) {
            const double w = std::exp(-b * ua + ys[i] * lu);
            r[2 * i] = w * cp;
            r[2 * i + 1] = w * sp;
        }
        return r;
    };
    auto f = osc_integrand(L, g);
    return integrate_panels<2 * K>(f, L.panels, tol_abs, tol_rel);
}

/// alpha = 1 family: Hc(n), Hs(n) for n = 0..K-1,
///   Hc(n) = int_0^inf e^{-s t} (1 + ln t)^n cos(t xt + k t ln t) dt,  k = (2/pi) s beta1.
/// Output component 2n is Hc(n), 2n+1 is Hs(n).
template <std::size_t K>
VecIntegral<2 * K> log_family(double xt, double sigma1, double beta1, double tol_abs, double tol_rel) {
    const double k = (2.0 / pi) * sigma1 * beta1;
    const double target = std::min(tol_abs, 1e-3) * 1e-3;
    const double L0 = std::max(std::log(1.0 / (target * sigma1)), 1.0);
    double T = L0 / sigma1;
    for (int i = 0; i < 20; ++i) {
        const double lg = std::max(1.0, std::abs(1.0 + std::log(T)));
        T = (L0 + (K - 1.0) * std::log(lg)) / sigma1;
    }
    T = std::max(T * 1.02, 10.0 / sigma1);
    const double u0 = std::min({1.0 / sigma1, pi / std::max(std::abs(xt) + std::abs(k), 1e-300), 0.5 * T});
    auto rate = [xt, k](double t1, double t2) {
        return std::abs(xt) + std::abs(k) * std::max(std::abs(1.0 + std::log(t1)), std::abs(1.0 + std::log(t2)));
    };
    const OscLayout L = make_osc_layout(u0, 3, T, rate);
    auto g = [&](double t) {
        std::array<double, 2 * K> r{};
        const double lt = std::log(t);
        const double ph = t * xt + k * t * lt;
        const double w = std::exp(-sigma1 * t);
        const double cp = w * std::cos(ph), sp = w * std::sin(ph);
        double pw = 1.0;
        for (std::size_t n = 0; n < K; ++n) {
            r[2 * n] = pw * cp;
            r[2 * n + 1] = pw * sp;
            pw *= (1.0 + lt);
        }
        return r;
    };
    auto f = osc_integrand(L, g);
    return integrate_panels<2 * K>(f, L.panels, tol_abs, tol_rel);
}

namespace detail {

inline void require_tol(double tol) {
    if (!(tol > 0.0)) throw ParameterError("tol must be positive");
}

inline void require_converged(bool ok, double v, double e) {
    if (!ok) throw NumericalError("quadrature did not converge within the node budget", v, e);
}

}  // namespace detail

/// H(y, theta; x) = int_0^inf e^{-s1a u^alpha} u^y (t1 cos(ux - a b1 s1a u^alpha) + t2 sin(...)) du.
/// alpha = 1 is accepted only with beta1 = 0, where the phase term vanishes.
inline QuadResult eval_H(double y, ThetaPair theta, double x, const BivariateConstants& k, double alpha, double tol) {
    detail::require_tol(tol);
    if (!(y > -1.0)) throw DomainError("H(y, theta; x) diverges for y <= -1");
    if (theta.t1 == 0.0 && theta.t2 == 0.0) return {0.0, 0.0, 0};
    double c = 0.0;
    if (alpha == 1.0) {
        if (k.beta1 != 0.0) throw DomainError("H-family requires alpha != 1 unless beta1 = 0");
    } else {
        c = tan_half_pi(alpha) * k.beta1 * k.sigma1_alpha;
    }
    const double mag = std::abs(theta.t1) + std::abs(theta.t2);
    const auto r = cs_family<1>({y}, x, k.sigma1_alpha, c, alpha, tol / mag, tol);
    const double v = theta.t1 * r.value[0] + theta.t2 * r.value[1];
    const double e = std::abs(theta.t1) * r.err[0] + std::abs(theta.t2) * r.err[1];
    detail::require_converged(r.converged, v, e);
    return {v, e, r.nodes};
}

/// (Hc(n), Hs(n)) at x for the alpha = 1 marginal S(1, beta1, sigma1, mu1).
struct HcsPair {
    QuadResult c;
    QuadResult s;
};

inline HcsPair eval_Hcs(int n, double x, const BivariateConstants& k, double tol) {
    detail::require_tol(tol);
    if (n < 0 || n > 2) throw DomainError("Hc/Hs implemented for n = 0, 1, 2");
    const double s1 = k.sigma1_alpha;
    const double xt = x - k.mu1.value_or(0.0);
    const auto r = log_family<3>(xt, s1, k.beta1, tol, tol);
    detail::require_converged(r.converged, r.value[2 * n], r.err[2 * n]);
    return {{r.value[2 * n], r.err[2 * n], r.nodes}, {r.value[2 * n + 1], r.err[2 * n + 1], r.nodes}};
}

/// U(x) = Hs(0), V(x) = Hc(1), W(x) = Hc(2) for the alpha = 1 formulas.
inline QuadResult eval_U(double x, const BivariateConstants& k, double tol) { return eval_Hcs(0, x, k, tol).s; }
inline QuadResult eval_V(double x, const BivariateConstants& k, double tol) { return eval_Hcs(1, x, k, tol).c; }
inline QuadResult eval_W(double x, const BivariateConstants& k, double tol) { return eval_Hcs(2, x, k, tol).c; }

/// x-dependent integrals reused across horizons:
/// C[n] = int e^{-b t^alpha} t^{n(alpha-1)} cos(tx - ct^alpha) dt, S[n] likewise,
/// so C[0] = pi f_X(x) and S[0] = H(x). Entries with n(alpha-1) <= -1 are NaN.
struct MomentBasis {
    std::array<double, 5> C{}, S{}, eC{}, eS{};
    std::size_t nodes_used = 0;
    double pif() const { return C[0]; }
    double H() const { return S[0]; }
    double f() const { return C[0] / pi; }
    Val c(int n) const { return {C[n], eC[n]}; }
    Val s(int n) const { return {S[n], eS[n]}; }
};

namespace detail {

struct BasisKey {
    double x, alpha, b, beta1, tol;
    bool operator==(const BasisKey& o) const {
        return std::memcmp(this, &o, sizeof(BasisKey)) == 0;
    }
};

struct BasisKeyHash {
    std::size_t operator()(const BasisKey& k) const {
        std::size_t h = 1469598103934665603ull;
        const double* p = &k.x;
        for (int i = 0; i < 5; ++i) {
            std::uint64_t bits;
            std::memcpy(&bits, p + i, sizeof bits);
            h ^= bits + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return h;
    }
};

}  // namespace detail

/// Thread-safe LRU memo of moment bases keyed by (x, alpha, sigma1^alpha, beta1, tol).
class BasisCache {
public:
    explicit BasisCache(std::size_t capacity = 8192) : capacity_(capacity) {}

    bool get(const detail::BasisKey& key, MomentBasis& out) {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = map_.find(key);
        if (it == map_.end()) return false;
        order_.splice(order_.begin(), order_, it->second.second);
        out = it->second.first;
        return true;
    }

    void put(const detail::BasisKey& key, const MomentBasis& b) {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = map_.find(key);
        if (it != map_.end()) {
            it->second.first = b;
            order_.splice(order_.begin(), order_, it->second.second);
            return;
        }
        order_.push_front(key);
        map_.emplace(key, std::make_pair(b, order_.begin()));
        while (map_.size() > capacity_) {
            map_.erase(order_.back());
            order_.pop_back();
        }
    }

    void set_capacity(std::size_t c) {
        std::lock_guard<std::mutex> lock(mu_);
        capacity_ = std::max<std::size_t>(c, 1);
        while (map_.size() > capacity_) {
            map_.erase(order_.back());
            order_.pop_back();
        }
    }

    void clear() {
        std::lock_guard<std::mutex> lock(mu_);
        map_.clear();
        order_.clear();
    }

    std::size_t size() {
        std::lock_guard<std::mutex> lock(mu_);
        return map_.size();
    }

    static BasisCache& global() {
        static BasisCache cache;
        return cache;
    }

private:
    using List = std::list<detail::BasisKey>;
    std::size_t capacity_;
    std::mutex mu_;
    List order_;
    std::unordered_map<detail::BasisKey, std::pair<MomentBasis, List::iterator>, detail::BasisKeyHash> map_;
};

/// Computes (or fetches) the basis C[n], S[n], n = 0..4, at x. `tol` is an
/// absolute tolerance on each integral. A cache hit reports nodes_used = 0.
inline MomentBasis moment_basis(double x, const BivariateConstants& k, double alpha, double tol,
                                BasisCache& cache = BasisCache::global()) {
    detail::require_tol(tol);
    if (alpha == 1.0) throw DomainError("moment basis requires alpha != 1");
    const detail::BasisKey key{x, alpha, k.sigma1_alpha, k.beta1, tol};
    MomentBasis out;
    if (cache.get(key, out)) {
        out.nodes_used = 0;
        return out;
    }
    const double b = k.sigma1_alpha;
    const double c = tan_half_pi(alpha) * k.beta1 * b;
    const double nan = std::nan("");
    out.C.fill(nan);
    out.S.fill(nan);
    out.eC.fill(nan);
    out.eS.fill(nan);
    int nmax = 0;
    while (nmax < 4 && (nmax + 1) * (alpha - 1.0) > -1.0) ++nmax;
    auto store = [&](const auto& r, int count) {
        for (int n = 0; n < count; ++n) {
            out.C[n] = r.value[2 * n];
            out.S[n] = r.value[2 * n + 1];
            out.eC[n] = r.err[2 * n];
            out.eS[n] = r.err[2 * n + 1];
        }
        out.nodes_used = r.nodes;
        detail::require_converged(r.converged, r.value[0], r.err[0]);
    };
    const double a1 = alpha - 1.0;
    switch (nmax) {
        case 0: store(cs_family<1>({0.0}, x, b, c, alpha, tol, 0.0), 1); break;
        case 1: store(cs_family<2>({0.0, a1}, x, b, c, alpha, tol, 0.0), 2); break;
        case 2: store(cs_family<3>({0.0, a1, 2 * a1}, x, b, c, alpha, tol, 0.0), 3); break;
        case 3: store(cs_family<4>({0.0, a1, 2 * a1, 3 * a1}, x, b, c, alpha, tol, 0.0), 4); break;
        default: store(cs_family<5>({0.0, a1, 2 * a1, 3 * a1, 4 * a1}, x, b, c, alpha, tol, 0.0), 5); break;
    }
    cache.put(key, out);
    return out;
}

}  // namespace sa

#pragma once

#include "stable_anticipate/common.hpp"
#include "stable_anticipate/quadrature.hpp"

#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace sa {

/// Univariate stable law S(alpha, beta, sigma, mu) with characteristic function
/// exp{-sigma^alpha |u|^alpha (1 - i beta sign(u) w(alpha,u)) + i u mu},
/// w = tan(pi alpha / 2) for alpha != 1 and w = -(2/pi) ln|u| for alpha = 1.
struct StableParams {
    double alpha = 1.5;
    double beta = 0.0;
    double sigma = 1.0;
    double mu = 0.0;
};

inline StableParams make_stable_params(double alpha, double beta, double sigma, double mu) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw ParameterError("alpha must lie in (0,2), got " + std::to_string(alpha));
    if (!(beta >= -1.0 && beta <= 1.0)) throw ParameterError("beta must lie in [-1,1], got " + std::to_string(beta));
    if (!(sigma > 0.0)) throw ParameterError("sigma must be positive, got " + std::to_string(sigma));
    if (!std::isfinite(mu)) throw ParameterError("mu must be finite");
    return {alpha, beta, sigma, mu};
}

inline std::complex<double> stable_char_fn(const StableParams& p, double u) {
    if (u == 0.0) return {1.0, 0.0};
    const double au = std::abs(u);
    const double sa = std::pow(p.sigma, p.alpha);
    const double w = (p.alpha == 1.0) ? -(2.0 / pi) * std::log(au) : tan_half_pi(p.alpha);
    const double re = -sa * std::pow(au, p.alpha);
    const double im = sa * std::pow(au, p.alpha) * p.beta * sgn(u) * w + u * p.mu;
    return std::exp(std::complex<double>(re, im));
}

namespace detail {

inline double phase_c(const StableParams& p) {
    return tan_half_pi(p.alpha) * p.beta * std::pow(p.sigma, p.alpha);
}

}  // namespace detail

/// Density via (1/pi) * int_0^inf Re[e^{-iux} phi(u)] du. `tol` bounds the absolute error.
inline MomentResult stable_pdf(const StableParams& p, double x, double tol = 1e-12) {
    detail::require_tol(tol);
    double v, e;
    bool ok;
    if (p.alpha == 1.0) {
        const auto r = log_family<1>(x - p.mu, p.sigma, p.beta, pi * tol, 0.0);
        v = r.value[0] / pi;
        e = r.err[0] / pi;
        ok = r.converged;
    } else {
        const auto r = cs_family<1>({0.0}, x - p.mu, std::pow(p.sigma, p.alpha), detail::phase_c(p), p.alpha,
                                    pi * tol, 0.0);
        v = r.value[0] / pi;
        e = r.err[0] / pi;
        ok = r.converged;
    }
    detail::require_converged(ok, v, e);
    return {std::max(v, 0.0), e, Regime::exact};
}

/// Distribution function by Gil-Pelaez inversion:
/// F(x) = 1/2 + (1/pi) int_0^inf Im[e^{-iux} phi(u)]^- / u du.
inline MomentResult stable_cdf(const StableParams& p, double x, double tol = 1e-12) {
    detail::require_tol(tol);
    const double z = x - p.mu;
    if (p.alpha == 1.0) {
        const double s = p.sigma, k = (2.0 / pi) * s * p.beta;
        const double T = std::max(std::log(1.0 / (tol * 1e-3 * s)) / s * 1.05, 10.0 / s);
        const double u0 = std::min({1.0 / s, pi / std::max(std::abs(z) + std::abs(k), 1e-300), 0.5 * T});
        auto rate = [z, k](double t1, double t2) {
            return std::abs(z) + std::abs(k) * std::max(std::abs(1.0 + std::log(t1)), std::abs(1.0 + std::log(t2)));
        };
        const OscLayout L = make_osc_layout(u0, 3, T, rate);
        auto g = [&](double t) {
            return std::array<double, 1>{std::exp(-s * t) * std::sin(t * z + k * t * std::log(t)) / t};
        };
        auto f = osc_integrand(L, g);
        const auto r = integrate_panels<1>(f, L.panels, pi * tol, 0.0);
        const double v = 0.5 + r.value[0] / pi;
        detail::require_converged(r.converged, v, r.err[0] / pi);
        return {std::clamp(v, 0.0, 1.0), r.err[0] / pi, Regime::exact};
    }
    const double b = std::pow(p.sigma, p.alpha), c = detail::phase_c(p), a = p.alpha;
    const double scale = std::pow(b, -1.0 / a);
    const double T = exp_power_truncation(b, a, -1.0, tol * 1e-3);
    const double xr = std::abs(z) + a * std::abs(c) * std::pow(scale, a - 1.0);
    const double u0 = std::min({scale, pi / std::max(xr, 1e-300), 0.5 * T});
    const int m = std::clamp(static_cast<int>(std::ceil(2.0 / a)), 2, 12);
    auto rate = [z, c, a](double u1, double u2) {
        return std::abs(z) + a * std::abs(c) * std::max(std::pow(u1, a - 1.0), std::pow(u2, a - 1.0));
    };
    const OscLayout L = make_osc_layout(u0, m, T, rate);
    auto g = [&](double u) {
        const double ua = std::pow(u, a);
        return std::array<double, 1>{std::exp(-b * ua) * std::sin(u * z - c * ua) / u};
    };
    auto f = osc_integrand(L, g);
    const auto r = integrate_panels<1>(f, L.panels, pi * tol, 0.0);
    const double v = 0.5 + r.value[0] / pi;
    detail::require_converged(r.converged, v, r.err[0] / pi);
    return {std::clamp(v, 0.0, 1.0), r.err[0] / pi, Regime::exact};
}

/// Quantile by bisection on stable_cdf.
inline double stable_quantile(const StableParams& p, double q, double tol = 1e-10) {
    if (!(q > 0.0 && q < 1.0)) throw ParameterError("quantile level must lie in (0,1)");
    double lo = p.mu - p.sigma, hi = p.mu + p.sigma;
    while (stable_cdf(p, lo, 1e-13).value > q) lo = p.mu - 2.0 * (p.mu - lo);
    while (stable_cdf(p, hi, 1e-13).value < q) hi = p.mu + 2.0 * (hi - p.mu);
    for (int i = 0; i < 200 && hi - lo > tol * std::max(1.0, std::abs(lo)); ++i) {
        const double mid = 0.5 * (lo + hi);
        (stable_cdf(p, mid, 1e-13).value < q ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Limit of x^{alpha+1} f(x) as x -> +inf (direction = +1) or of |x|^{alpha+1} f(x)
/// as x -> -inf (direction = -1).
inline double stable_tail_constant(const StableParams& p, int direction) {
    const double side = direction > 0 ? 1.0 + p.beta : 1.0 - p.beta;
    return std::pow(p.sigma, p.alpha) * side * std::sin(pi * p.alpha / 2.0) * std::tgamma(1.0 + p.alpha) / pi;
}

/// Asymptotic density in the light tail of a totally skewed law (|beta| = 1),
/// i.e. x -> +inf for beta = -1 and x -> -inf for beta = +1. Zolotarev's
/// expansion lives in his form-B coordinates: the unit form-B variable is
/// |cos(pi alpha/2)|^{1/alpha} Z (alpha > 1) or (pi/2) Z - ln(pi/2) (alpha = 1)
/// for Z ~ S(alpha, -1, 1, 0).
inline double skewed_tail_asymptote(const StableParams& p, double x) {
    if (std::abs(p.beta) != 1.0) throw DomainError("skewed tail asymptote requires |beta| = 1");
    if (p.alpha < 1.0) throw DomainError("for alpha < 1 the totally skewed law is supported on a half-line");
    double z = (x - p.mu);
    if (p.alpha == 1.0) z -= (2.0 / pi) * p.beta * p.sigma * std::log(p.sigma);
    z /= p.sigma;
    if (p.beta > 0) z = -z;
    if (!(z > 0.0)) throw DomainError("x lies outside the light-tail direction");
    const double a = p.alpha;
    double g;
    if (a == 1.0) {
        const double y = (pi / 2.0) * z - std::log(pi / 2.0);
        g = (pi / 2.0) * std::exp((y - 1.0) / 2.0 - std::exp(y - 1.0)) / std::sqrt(2.0 * pi);
    } else {
        const double sc = std::pow(std::abs(std::cos(pi * a / 2.0)), 1.0 / a);
        const double r = sc * z / a;
        g = sc * std::pow(r, (2.0 - a) / (2.0 * (a - 1.0))) / std::sqrt(2.0 * pi * a * std::abs(1.0 - a)) *
            std::exp(-std::abs(1.0 - a) * std::pow(r, a / (a - 1.0)));
    }
    return g / p.sigma;
}

// ---------------------------------------------------------------------------
// Random numbers

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// 64-bit Mersenne Twister with explicit, portable conversions to uniforms.
/// Stream splitting rule: stream (seed, index) is seeded with
/// splitmix64(seed ^ splitmix64(index)).
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}
    static Rng stream(std::uint64_t seed, std::uint64_t index) { return Rng(splitmix64(seed ^ splitmix64(index))); }

    /// Uniform on the open interval (0,1) with 53-bit resolution.
    double uniform() {
        for (;;) {
            const double u = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
            if (u > 0.0) return u;
        }
    }
    double exponential() { return -std::log(uniform()); }
    std::uint64_t bits() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

/// One Chambers-Mallows-Stuck draw from S(alpha, beta, sigma, mu).
inline double draw_stable(const StableParams& p, Rng& rng) {
    const double V = pi * (rng.uniform() - 0.5);
    const double W = rng.exponential();
    const double a = p.alpha, b = p.beta;
    if (a == 1.0) {
        const double h = pi / 2.0 + b * V;
        const double X = (2.0 / pi) * (h * std::tan(V) - b * std::log((pi / 2.0) * W * std::cos(V) / h));
        return p.sigma * X + (2.0 / pi) * b * p.sigma * std::log(p.sigma) + p.mu;
    }
    const double t = b * tan_half_pi(a);
    const double B = std::atan(t) / a;
    const double S = std::pow(1.0 + t * t, 1.0 / (2.0 * a));
    const double X = S * std::sin(a * (V + B)) / std::pow(std::cos(V), 1.0 / a) *
                     std::pow(std::cos(V - a * (V + B)) / W, (1.0 - a) / a);
    return p.sigma * X + p.mu;
}

inline std::vector<double> sample_stable(const StableParams& p, std::size_t n, Rng& rng) {
    if (n < 1) throw ParameterError("sample size must be at least 1");
    std::vector<double> out(n);
    for (auto& v : out) v = draw_stable(p, rng);
    return out;
}

}  // namespace sa

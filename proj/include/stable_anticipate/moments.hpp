#pragma once

#include "stable_anticipate/common.hpp"
#include "stable_anticipate/models.hpp"
#include "stable_anticipate/quadrature.hpp"
#include "stable_anticipate/spectral.hpp"
#include "stable_anticipate/stable_core.hpp"

#include <array>
#include <complex>
#include <cmath>
#include <optional>
#include <string>

namespace sa {

/// theta[i] holds the vector theta_{i+1} of the moment formulas.
struct ThetaSet {
    std::array<ThetaPair, 6> theta{};
    const ThetaPair& operator[](int i) const { return theta[i - 1]; }
};

/// The theta_1..theta_6 vectors of the second to fourth conditional moments (alpha != 1).
inline ThetaSet build_thetas(const BivariateConstants& c, double alpha) {
    if (alpha == 1.0) throw DomainError("theta vectors are defined for alpha != 1");
    const double a = tan_half_pi(alpha), a2 = a * a, b = c.beta1;
    const double k1 = c.k(1), k2 = c.k(2), k3 = c.k(3), k4 = c.k(4);
    const double l1 = c.l(1), l2 = c.l(2), l3 = c.l(3), l4 = c.l(4);
    const double ab = a * b, om = 1.0 - ab * ab;
    ThetaSet T;

    T.theta[0] = {k1 * k1 - a2 * l1 * l1 + a2 * b * l2 - k2, a * (l2 + b * k2) - 2.0 * a * l1 * k1};

    {  // third moment: K, L built from orders 1 and 2
        const double K = k1 * l2 + k2 * l1, L = k1 * k2 - a2 * l1 * l2;
        T.theta[1] = {3.0 * (L + a2 * b * l3 - k3), 3.0 * a * (l3 + b * k3 - K)};
        T.theta[2] = {a * (l3 * om + 2.0 * b * k3 + 2.0 * l1 * (3.0 * k1 * k1 - a2 * l1 * l1) - 3.0 * (K + b * L)),
                      k3 * om - 2.0 * a2 * b * l3 + 2.0 * (k1 * k1 * k1 - 3.0 * a2 * k1 * l1 * l1) + 3.0 * (a2 * b * K - L)};
    }

    {  // fourth moment, with z_k = kappa_k - i a lambda_k and w = 1 - i a beta1
        using cplx = std::complex<double>;
        const cplx I(0.0, 1.0), w(1.0, -ab);
        const cplx z1(k1, -a * l1), z2(k2, -a * l2), z3(k3, -a * l3), z4(k4, -a * l4);
        const double d = 2.0 * alpha - 3.0;
        const cplx m = 4.0 * (alpha - 2.0) * z1 * z3 + 3.0 * (alpha - 1.0) * z2 * z2;
        const cplx t4 = (m + (11.0 - 7.0 * alpha) * w * z4) / d;
        const cplx t5 = 12.0 * I * z1 * z1 * z2 - I * w * (5.0 * m - (11.0 * alpha - 19.0) * w * z4) / d;
        const cplx t6 = -3.0 * z1 * z1 * z1 * z1 + 6.0 * w * z1 * z1 * z2 - w * w * (m + (2.0 - alpha) * w * z4) / d;
        T.theta[3] = {t4.real(), t4.imag()};
        T.theta[4] = {t5.real(), t5.imag()};
        T.theta[5] = {t6.real(), t6.imag()};
    }
    return T;
}

/// Per-order existence ranges of the conditional moments.
inline bool moment_exists(int p, double alpha) {
    switch (p) {
        case 1: return alpha > 0.0 && alpha < 2.0;
        case 2: return alpha > 0.5 && alpha < 2.0;
        case 3: return alpha > 1.0 && alpha < 2.0;
        case 4: return alpha > 1.5 && alpha < 2.0;
        default: return false;
    }
}

inline void require_moment(int p, double alpha) {
    if (p < 1 || p > 4) throw DomainError("moment order must be 1..4");
    if (alpha == 1.0 && p > 2) throw Unsupported("alpha = 1 conditional moments are available only for p <= 2");
    if (!moment_exists(p, alpha)) {
        static const char* ranges[] = {"", "alpha in (0,2)", "alpha in (1/2,2)", "alpha in (1,2)", "alpha in (3/2,2)"};
        throw MomentNonexistence("conditional moment of order " + std::to_string(p) + " requires " + ranges[p]);
    }
}

/// Limit of x^{-p} E[X2^p | X1 = x] as x -> direction * infinity.
inline double limit_coefficient(int p, const BivariateConstants& c, int direction) {
    const double b = c.beta1;
    if (std::abs(b) == 1.0) {
        if (b * direction > 0) return c.k(p);
        throw NumericalError("no power-law limit in the light tail of a totally skewed marginal");
    }
    return direction > 0 ? (c.k(p) + c.l(p)) / (1.0 + b) : (c.k(p) - c.l(p)) / (1.0 - b);
}

struct MomentOptions {
    double tol = 1e-8;
    double f_switch = 1e-9;  // densities below this use the asymptotic regime
};

namespace detail {

// E[X2^p | X1 = x] for a zero-shift vector, alpha != 1, from a moment basis.
inline Val moment_from_basis(int p, double x, const BivariateConstants& c, double alpha, const MomentBasis& B,
                             const ThetaSet& T) {
    const double a = tan_half_pi(alpha), b1 = c.beta1, s = c.sigma1_alpha;
    const Val C0 = B.c(0), S0 = B.s(0);
    const Val Q = Val(a * b1 * x) + (Val(1.0) - Val(x) * S0) / C0;
    const double xp1 = std::pow(x, p - 1);
    Val corr = Val(c.k(p) * xp1 * x);
    const double lin = c.l(p) - b1 * c.k(p);
    if (lin != 0.0) corr = corr + Val(a * xp1 * lin / (1.0 + a * a * b1 * b1)) * Q;
    if (p == 1) return corr;
    auto H = [&](int n, const ThetaPair& th) { return Val(th.t1) * B.c(n) + Val(th.t2) * B.s(n); };
    const double pre = alpha * alpha * s * s;
    if (p == 2) return corr - Val(pre) * H(2, T[1]) / C0;
    if (p == 3) return corr - Val(pre / 2.0) * (Val(x) * H(2, T[2]) + Val(alpha * s) * H(3, T[3])) / C0;
    const Val inner = Val(x * x / 2.0) * H(2, T[4]) + Val(alpha * x * s / 6.0) * H(3, T[5]) +
                      Val(alpha * alpha * s * s / 3.0) * H(4, T[6]);
    return corr - Val(pre) * inner / C0;
}

// E[X2^p | X1 = x] for a zero-shift vector, alpha = 1, p <= 2.
inline Val moment_alpha1(int p, double x, const BivariateConstants& c, const VecIntegral<6>& I) {
    const double a = 2.0 / pi, s = c.sigma1_alpha, b = c.beta1;
    const double q = c.q0.value_or(0.0), m1 = c.mu1.value_or(0.0);
    const double k1 = c.k(1), k2 = c.k(2), l1 = c.l(1), l2 = c.l(2);
    const double d = x - m1;
    const Val pif{I.value[0], I.err[0]}, U{I.value[1], I.err[1]}, V{I.value[2], I.err[2]}, W{I.value[4], I.err[4]};
    if (p == 1) {
        const Val base = Val(-(2.0 * s / pi) * q + k1 * d);
        if (b != 0.0) return base + Val((l1 - b * k1) / b) * (Val(d) - Val(s) * U / pif);
        return base - Val((2.0 * s / pi) * l1) * V / pif;
    }
    if (b != 0.0) {
        const Val poly = Val(s * s * (a * a * q * q - k1 * k1) + (2.0 * s * l1 / b) * (s * k1 - a * q * d) +
                             (l2 / b) * (d * d - s * s));
        const Val t1 = Val((a * s * q * (l1 - b * k1) + (k1 * l1 - l2) * d) * 2.0 * s / b) * U / pif;
        const Val t2 = (Val(l2 + b * k2 - 2.0 * k1 * l1) + Val(a * a * s * b * (l1 * l1 - b * l2)) * W) * Val(s / b) / pif;
        return poly + t1 + t2;
    }
    // symmetric marginal: X1 is Cauchy, F - 1/2 = atan(d/s)/pi
    const Val poly = Val(s * s * (k2 + a * a * q * q - k1 * k1) - 2.0 * a * s * k1 * q * d + k2 * d * d);
    const Val cdf_term = Val(a * s * (l2 - 2.0 * l1 * k1) * std::atan(d / s)) / pif;
    const Val last = Val(a * s * l1) / pif * (Val(2.0 * (a * s * q - k1 * d)) * V + Val(a * s * l1) * W);
    return poly + cdf_term + last;
}

inline double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace detail

/// Raw conditional moments E[X2^j | X1 = x], j = 0..pmax, of the zero-shift vector.
/// `regime` reports whether the density fell below the switch threshold.
struct ShiftedMoments {
    std::array<Val, 5> m{};
    Regime regime = Regime::exact;
    double density = 0.0;
};

/// Conditional moments E[X2^j | X1 = xt] for j = 1..pmax of the vector with zero shift.
/// For alpha = 1 this is the "raw (shifted)" moment of X - mu0.
inline ShiftedMoments shifted_moments(int pmax, double xt, const BivariateConstants& c, double alpha,
                                      const MomentOptions& opt = {}) {
    for (int p = 1; p <= pmax; ++p) require_moment(p, alpha);
    if (!(opt.tol > 0.0)) throw ParameterError("tol must be positive");
    ShiftedMoments out;
    out.m[0] = Val(1.0);
    const double s1 = c.sigma1(alpha);
    if (alpha < 1.0 && std::abs(c.beta1) == 1.0 && !(c.beta1 * xt > 0.0))
        throw DomainError("for alpha < 1 and |beta1| = 1 the conditioning value must lie in the support half-line");

    auto asymptotic = [&]() {
        out.regime = Regime::asymptotic;
        const int dir = xt > 0 ? 1 : -1;
        for (int p = 1; p <= pmax; ++p) out.m[p] = Val(limit_coefficient(p, c, dir) * std::pow(xt, p));
        return out;
    };

    // far tail: the leading tail term decides without running the oscillatory quadrature
    const double xr = xt - c.mu1.value_or(0.0);
    if (std::abs(xr) > 20.0 * s1) {
        const StableParams law{alpha, c.beta1, s1, 0.0};
        const double ft = stable_tail_constant(law, xr > 0 ? 1 : -1) * std::pow(std::abs(xr), -alpha - 1.0);
        if (ft < opt.f_switch) return asymptotic();
    }

    if (alpha == 1.0) {
        const double scale = 1.0 / s1;
        double tq = std::min(opt.tol, 1e-10) * 1e-2 * scale;
        for (int attempt = 0; attempt < 3; ++attempt) {
            const auto I = log_family<3>(xt - c.mu1.value_or(0.0), s1, c.beta1, tq, 0.0);
            detail::require_converged(I.converged, I.value[0], I.err[0]);
            out.density = I.value[0] / pi;
            if (out.density < opt.f_switch) return asymptotic();
            bool ok = true;
            for (int p = 1; p <= pmax; ++p) {
                out.m[p] = detail::moment_alpha1(p, xt, c, I);
                if (out.m[p].e > opt.tol * std::max(1.0, std::abs(out.m[p].v))) ok = false;
            }
            if (ok || tq < 1e-15 * scale) break;
            tq *= 1e-2;
        }
        return out;
    }

    const ThetaSet T = build_thetas(c, alpha);
    const double scale = std::pow(c.sigma1_alpha, -1.0 / alpha);
    double tq = std::min(opt.tol, 1e-10) * 1e-2 * scale;
    for (int attempt = 0; attempt < 3; ++attempt) {
        const MomentBasis B = moment_basis(xt, c, alpha, tq);
        out.density = B.f();
        if (out.density < opt.f_switch) return asymptotic();
        bool ok = true;
        for (int p = 1; p <= pmax; ++p) {
            out.m[p] = detail::moment_from_basis(p, xt, c, alpha, B, T);
            if (out.m[p].e > opt.tol * std::max(1.0, std::abs(out.m[p].v))) ok = false;
        }
        if (ok || tq < 1e-15 * scale) break;
        tq *= 1e-2;
    }
    return out;
}

/// Maps zero-shift moments back through X = X~ + mu0:
/// E[X2^p | X1 = x] = sum_j C(p,j) (mu0_2)^{p-j} E[X~2^j | X~1 = x - mu0_1].
inline std::array<Val, 5> unshift(const ShiftedMoments& sm, int pmax, double mu2) {
    std::array<Val, 5> r{};
    r[0] = Val(1.0);
    for (int p = 1; p <= pmax; ++p) {
        Val acc;
        for (int j = 0; j <= p; ++j) acc += Val(detail::binom(p, j) * std::pow(mu2, p - j)) * sm.m[j];
        r[p] = acc;
    }
    return r;
}

/// E[X2^p | X1 = x] of a bivariate stable vector given its constants and shift vector.
inline MomentResult cond_moment(int p, double x, const BivariateConstants& c, double alpha,
                                const std::array<double, 2>& shift, const MomentOptions& opt = {}) {
    const auto sm = shifted_moments(p, x - shift[0], c, alpha, opt);
    const auto r = unshift(sm, p, shift[1]);
    return {r[p].v, r[p].e, sm.regime};
}

/// Shift vector of (X_t, X_{t+h}); zero unless alpha = 1.
inline std::array<double, 2> model_shift(const ProcessModel& model, double h) {
    if (model_alpha(model) != 1.0) return {0.0, 0.0};
    return spectral(model, h).shift;
}

inline BivariateConstants model_constants(const ProcessModel& model, double h) {
    if (std::holds_alternative<AR2>(model))
        throw Unsupported("conditional moments of the AR(2) have no closed form");
    return closed_form_constants(model, h);
}

/// E[X_{t+h}^p | X_t = x] for a process model.
inline MomentResult cond_moment(int p, double x, const ProcessModel& model, double h, double tol = 1e-8) {
    validate(model);
    validate_horizon(model, h);
    MomentOptions opt;
    opt.tol = tol;
    return cond_moment(p, x, model_constants(model, h), model_alpha(model), model_shift(model, h), opt);
}

struct Summary {
    MomentResult mu, sigma2, gamma1, gamma2;
};

namespace detail {

inline Val vsqrt(Val a) {
    const double s = std::sqrt(a.v);
    return {s, a.e / (2.0 * s)};
}

inline MomentResult undefined_result() { return {std::nan(""), 0.0, Regime::undefined}; }

}  // namespace detail

/// Conditional mean, variance, skewness and excess kurtosis assembled from raw moments.
inline Summary cond_summary(double x, const BivariateConstants& c, double alpha, const std::array<double, 2>& shift,
                            const MomentOptions& opt = {}) {
    int pmax = 0;
    while (pmax < 4 && moment_exists(pmax + 1, alpha) && !(alpha == 1.0 && pmax + 1 > 2)) ++pmax;
    Summary s{detail::undefined_result(), detail::undefined_result(), detail::undefined_result(),
              detail::undefined_result()};
    if (pmax == 0) return s;
    const auto sm = shifted_moments(pmax, x - shift[0], c, alpha, opt);
    const auto m = unshift(sm, pmax, shift[1]);
    const Regime reg = sm.regime;
    s.mu = {m[1].v, m[1].e, reg};
    if (pmax < 2) return s;
    const Val var = m[2] - m[1] * m[1];
    if (var.v < -std::max(var.e, 10.0 * opt.tol * std::max(1.0, std::abs(m[2].v))))
        throw NumericalError("negative conditional variance at x = " + std::to_string(x), var.v, var.e);
    s.sigma2 = {var.v, var.e, reg};
    if (pmax < 3 || !(var.v > 0.0)) return s;
    const Val sd = detail::vsqrt(var);
    const Val m1 = m[1];
    const Val c3 = m[3] - Val(3.0) * m1 * m[2] + Val(2.0) * m1 * m1 * m1;
    const Val g1 = c3 / (var * sd);
    s.gamma1 = {g1.v, g1.e, reg};
    if (pmax < 4) return s;
    const Val c4 = m[4] - Val(4.0) * m1 * m[3] + Val(6.0) * m1 * m1 * m[2] - Val(3.0) * m1 * m1 * m1 * m1;
    const Val g2 = c4 / (var * var) - Val(3.0);
    s.gamma2 = {g2.v, g2.e, reg};
    return s;
}

inline Summary cond_summary(double x, const ProcessModel& model, double h, double tol = 1e-8) {
    validate(model);
    validate_horizon(model, h);
    MomentOptions opt;
    opt.tol = tol;
    return cond_summary(x, model_constants(model, h), model_alpha(model), model_shift(model, h), opt);
}

struct AsymptoticMoments {
    std::optional<double> mu_coeff, sigma2_coeff, gamma1_limit, gamma2_limit;
};

/// Leading-order behaviour of the conditional moments as x -> direction * infinity:
/// mu ~ mu_coeff x, sigma^2 ~ sigma2_coeff x^2, and the finite skewness/kurtosis limits.
inline AsymptoticMoments asymptotic_moments(const BivariateConstants& c, double alpha, int direction) {
    AsymptoticMoments r;
    std::array<double, 5> m{1.0, 0, 0, 0, 0};
    int pmax = 0;
    while (pmax < 4 && moment_exists(pmax + 1, alpha) && !(alpha == 1.0 && pmax + 1 > 2)) {
        ++pmax;
        m[pmax] = limit_coefficient(pmax, c, direction);
    }
    if (pmax >= 1) r.mu_coeff = m[1];
    if (pmax >= 2) r.sigma2_coeff = m[2] - m[1] * m[1];
    const double dir = direction > 0 ? 1.0 : -1.0;
    if (pmax >= 3) {
        const double v = *r.sigma2_coeff;
        // x^3 normalisation carries the sign of x for odd central moments
        r.gamma1_limit = dir * (m[3] - 3.0 * m[1] * m[2] + 2.0 * m[1] * m[1] * m[1]) / std::pow(v, 1.5);
    }
    if (pmax >= 4) {
        const double v = *r.sigma2_coeff;
        r.gamma2_limit = (m[4] - 4.0 * m[1] * m[3] + 6.0 * m[1] * m[1] * m[2] - 3.0 * std::pow(m[1], 4)) / (v * v) - 3.0;
    }
    return r;
}

inline AsymptoticMoments asymptotic_moments(const ProcessModel& model, double h, int direction) {
    validate(model);
    validate_horizon(model, h);
    if (auto p = std::get_if<AR1>(&model); p && !(p->rho > 0.0))
        throw Unsupported("asymptotics-unsupported", "bubble asymptotics require rho > 0");
    return asymptotic_moments(model_constants(model, h), model_alpha(model), direction);
}

/// True iff E[X_{t+h} | X_t = x] is linear in x, i.e. lambda_1 = beta_1 kappa_1.
inline bool linearity_check(const ProcessModel& model, double h) {
    validate(model);
    validate_horizon(model, h);
    if (auto g = std::get_if<Aggregated>(&model)) {
        // Cov(B, K1) + E[B(|K1| - K1)] under the aggregation weights
        const auto w = aggregation_weights(*g);
        double eb = 0, ek = 0, ebk = 0, ebabs = 0;
        for (std::size_t j = 0; j < w.size(); ++j) {
            const auto& cj = g->components[j];
            const auto kj = closed_form_constants(AR1{g->alpha, cj.beta, cj.sigma, cj.rho}, h);
            eb += w[j] * kj.beta1;
            ek += w[j] * kj.k(1);
            ebk += w[j] * kj.beta1 * kj.k(1);
            ebabs += w[j] * kj.beta1 * std::abs(kj.k(1));
        }
        const double v = (ebk - eb * ek) + (ebabs - ebk);
        return std::abs(v) <= 1e-12 * std::max(1.0, std::abs(ek));
    }
    const auto c = std::holds_alternative<AR2>(model) ? bivariate_constants(spectral(model, h))
                                                      : closed_form_constants(model, h);
    return std::abs(c.l(1) - c.beta1 * c.k(1)) <= 1e-12 * std::max(1.0, std::abs(c.k(1)));
}

struct BernoulliSummary {
    double survival_prob;
    double explosion_level;
};

/// Two-point limit law of X_{t+h} given a large X_t = x.
inline BernoulliSummary bernoulli_summary(const ProcessModel& model, double h, double x) {
    validate(model);
    if (auto p = std::get_if<AR1>(&model)) {
        if (!(p->rho > 0.0)) throw Unsupported("asymptotics-unsupported", "bubble asymptotics require rho > 0");
        validate_horizon(model, h);
        return {std::pow(p->rho, p->alpha * h), std::pow(p->rho, -h) * x};
    }
    if (auto p = std::get_if<OU>(&model)) {
        if (!(h >= 0.0)) throw DomainError("horizon must be non-negative");
        return {std::exp(-p->alpha * p->lambda * h), std::exp(p->lambda * h) * x};
    }
    throw Unsupported("asymptotics-unsupported", "bubble summary is defined for the AR(1) and OU models");
}

/// Horizon minimising the OU excess-kurtosis limit.
inline double ou_kurtosis_h0(double alpha, double lambda_rate) { return std::log(2.0) / (alpha * lambda_rate); }

}  // namespace sa

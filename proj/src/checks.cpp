#include "stable_anticipate/checks.hpp"

#include "stable_anticipate/moments.hpp"
#include "stable_anticipate/oracles.hpp"
#include "stable_anticipate/quadrature.hpp"
#include "stable_anticipate/spectral.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

namespace sa {

double SuiteReport::worst_ratio() const {
    double w = 0.0;
    for (const auto& c : checks) w = std::max(w, c.limit > 0.0 ? c.deviation / c.limit : (c.pass ? 0.0 : INFINITY));
    return w;
}

namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

Check make_check(std::string name, double dev, double limit, std::string detail = {}) {
    return {std::move(name), dev <= limit, dev, limit, std::move(detail)};
}

Check failed_check(std::string name, const std::exception& e) {
    std::string code = "error";
    if (auto se = dynamic_cast<const Error*>(&e)) code = se->code();
    return {std::move(name), false, INFINITY, 0.0, code + ": " + e.what()};
}

template <class F>
SuiteReport timed(const char* suite, F&& body) {
    SuiteReport r;
    r.suite = suite;
    const auto t0 = Clock::now();
    body(r);
    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return r;
}

double rel_dev(double a, double b, double floor = 1e-15) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

std::string model_tag(const AR1& m) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "ar1(a=%g,b=%g,s=%g,rho=%g)", m.alpha, m.beta, m.sigma, m.rho);
    return buf;
}

// Worst relative deviation over sigma1^alpha, beta1, kappa_p, lambda_p (and q0, mu1).
double constants_deviation(const BivariateConstants& a, const BivariateConstants& b) {
    const double scale = std::max(1.0, std::abs(a.sigma1_alpha));
    double d = std::abs(a.sigma1_alpha - b.sigma1_alpha) / scale;
    d = std::max(d, std::abs(a.beta1 - b.beta1));
    for (int p = 0; p < 4; ++p) {
        const double ks = std::max(1.0, std::abs(a.kappa[p]));
        d = std::max(d, std::abs(a.kappa[p] - b.kappa[p]) / ks);
        d = std::max(d, std::abs(a.lambda[p] - b.lambda[p]) / ks);
    }
    if (a.q0 || b.q0) d = std::max(d, std::abs(a.q0.value_or(NAN) - b.q0.value_or(NAN)) / std::max(1.0, std::abs(*a.q0)));
    if (a.mu1 || b.mu1) d = std::max(d, std::abs(a.mu1.value_or(NAN) - b.mu1.value_or(NAN)) / std::max(1.0, std::abs(*a.mu1)));
    return std::isnan(d) ? INFINITY : d;
}

}  // namespace

SuiteReport suite_constants() {
    return timed("constants", [](SuiteReport& r) {
        std::vector<std::pair<std::string, ProcessModel>> cases;
        for (double a : {0.6, 1.0, 1.3, 1.7, 1.9})
            for (double b : {-1.0, -0.4, 0.0, 0.8, 1.0})
                for (double rho : {-0.9, -0.5, 0.3, 0.95})
                    for (double s : {0.1, 2.0}) cases.push_back({model_tag(AR1{a, b, s, rho}), AR1{a, b, s, rho}});
        for (double a : {0.6, 1.0, 1.3, 1.7, 1.9})
            for (double b : {-1.0, 0.0, 0.8})
                for (double lam : {0.1, 1.5}) cases.push_back({fmt("ou(a=%g", a) + fmt(",b=%g", b) + fmt(",lambda=%g)", lam), OU{a, b, lam}});
        for (double a : {0.6, 1.3, 1.7})
            cases.push_back({fmt("agg(a=%g)", a),
                             Aggregated{a, 1.0, {{0.3, 0.9, 1.0, 0.2}, {0.5, -0.6, -0.5, 1.0}, {0.2, 0.4, 0.3, 0.5}}}});
        for (const auto& [tag, model] : cases) {
            const bool ou = std::holds_alternative<OU>(model);
            const std::vector<double> horizons = ou ? std::vector<double>{0.5, 2.0, 7.25} : std::vector<double>{1, 2, 5};
            for (double h : horizons) {
                const std::string name = "constants " + tag + fmt(" h=%g", h);
                try {
                    const double d = constants_deviation(closed_form_constants(model, h), bivariate_constants(spectral(model, h)));
                    r.checks.push_back(make_check(name, d, 1e-12));
                } catch (const std::exception& e) {
                    r.checks.push_back(failed_check(name, e));
                }
            }
        }
    });
}

SuiteReport suite_quadrature(double tol) {
    return timed("quadrature", [tol](SuiteReport& r) {
        const double lim = 10.0 * tol;
        for (double alpha : {1.2, 1.55, 1.7, 1.9}) {
            BivariateConstants k;
            k.sigma1_alpha = 0.8;
            k.beta1 = 0.5;
            const double b = k.sigma1_alpha, a = tan_half_pi(alpha), c = a * k.beta1 * b;
            auto H = [&](double y, double t1, double t2, double x) { return eval_H(y, {t1, t2}, x, k, alpha, tol).value; };
            for (double x : {-5.0, 0.0, 5.0}) {
                const std::string at = fmt(" alpha=%g", alpha) + fmt(" x=%g", x);
                try {
                    auto C = [&](int n) { return H(n * (alpha - 1.0), 1, 0, x); };
                    auto S = [&](int n) { return H(n * (alpha - 1.0), 0, 1, x); };
                    double dF = 0.0, dG = 0.0;
                    for (int n = 1; n <= 3; ++n) {
                        const double q = n * (alpha - 1.0);
                        const double F = H(q - 1.0, 1, 0, x), G = H(q - 1.0, 0, 1, x);
                        const double Fr = (alpha * (b * C(n + 1) - c * S(n + 1)) + x * S(n)) / q;
                        const double Gr = (alpha * (c * C(n + 1) + b * S(n + 1)) - x * C(n)) / q;
                        dF = std::max(dF, std::abs(F - Fr));
                        dG = std::max(dG, std::abs(G - Gr));
                    }
                    r.checks.push_back(make_check("F_n recursion n=1..3" + at, dF, lim));
                    r.checks.push_back(make_check("G_n recursion n=1..3" + at, dG, lim));

                    const double pif = C(0), Hx = S(0), den = alpha * b * (1.0 + a * a * k.beta1 * k.beta1);
                    const double C1 = (a * k.beta1 * x * pif + 1.0 - x * Hx) / den;
                    const double S1 = (x * pif - a * k.beta1 * (1.0 - x * Hx)) / den;
                    r.checks.push_back(make_check("C_1 closed form" + at, std::abs(C(1) - C1), lim));
                    r.checks.push_back(make_check("S_1 closed form" + at, std::abs(S(1) - S1), lim));

                    if (alpha > 1.5) {
                        const double t1 = 0.7, t2 = -0.3, d = (2.0 * alpha - 3.0) * (alpha - 1.0);
                        const double lhs = H(2.0 * alpha - 4.0, t1, t2, x);
                        const double rhs =
                            alpha * alpha / (3.0 * d) *
                                (C(4) * (t1 * (b * b - c * c) + 2.0 * b * c * t2) + S(4) * (t2 * (b * b - c * c) - 2.0 * b * c * t1)) +
                            5.0 * alpha * x / (6.0 * d) * (C(3) * (c * t1 - b * t2) + S(3) * (b * t1 + c * t2)) -
                            x * x / (2.0 * d) * (t1 * C(2) + t2 * S(2));
                        r.checks.push_back(make_check("t^{2a-4} identity" + at, std::abs(lhs - rhs), lim));
                    }
                } catch (const std::exception& e) {
                    r.checks.push_back(failed_check("identities" + at, e));
                }
            }
        }
        BivariateConstants cau;
        cau.sigma1_alpha = 1.0;
        double worst = 0.0;
        try {
            for (int i = -10; i <= 10; ++i) {
                const double x = i;
                const double v = eval_H(0.0, {1.0, 0.0}, x, cau, 1.0, 1e-12).value / pi;
                worst = std::max(worst, std::abs(v - 1.0 / (pi * (1.0 + x * x))));
            }
            r.checks.push_back(make_check("H(0,(1,0))/pi vs Cauchy density at 21 points", worst, 1e-8));
        } catch (const std::exception& e) {
            r.checks.push_back(failed_check("H(0,(1,0))/pi vs Cauchy density", e));
        }
    });
}

SuiteReport suite_cauchy_variance() {
    return timed("cauchy-variance", [](SuiteReport& r) {
        const ProcessModel m = AR1{1.0, 0.0, 0.5, 0.5};
        for (int i = -5; i <= 5; ++i) {
            const double x = i;
            const std::string name = fmt("alpha=1 variance at x=%g", x);
            try {
                const auto s = cond_summary(x, m, 1.0, 1e-10);
                r.checks.push_back(make_check(name, std::abs(s.sigma2.value - (x * x + 1.0)), 1e-6));
            } catch (const std::exception& e) {
                r.checks.push_back(failed_check(name, e));
            }
        }
    });
}

SuiteReport suite_linearity() {
    return timed("linearity", [](SuiteReport& r) {
        const std::vector<AR1> models{{1.7, 0.8, 0.1, 0.95}, {1.3, -0.5, 1.0, 0.5}, {1.9, 0.9, 0.3, 0.8},
                                      {0.8, 0.3, 0.5, 0.7},  {1.0, 0.0, 0.5, 0.5}};
        for (const auto& m : models)
            for (int h : {1, 5, 20}) {
                const std::string name = "mean " + model_tag(m) + fmt(" h=%g", h);
                try {
                    double worst = 0.0;
                    const double k1 = std::pow(m.rho, m.alpha * h - h);
                    for (int i = -10; i <= 10; ++i) {
                        const double x = i;
                        const double mu = cond_moment(1, x, ProcessModel{m}, h, 1e-11).value;
                        worst = std::max(worst, std::abs(mu - k1 * x) / (1.0 + std::abs(x)));
                    }
                    r.checks.push_back(make_check(name, worst, 1e-8));
                } catch (const std::exception& e) {
                    r.checks.push_back(failed_check(name, e));
                }
            }
    });
}

SuiteReport suite_oracles(const OracleSuiteOptions& opt) {
    return timed("oracles", [&opt](SuiteReport& r) {
        const AR1 m{1.7, 0.8, 0.1, 0.95};
        const ProcessModel model = m;
        const auto c1 = closed_form_constants(model, 1.0);
        const StableParams marg{m.alpha, c1.beta1, c1.sigma1(m.alpha), 0.0};
        // 5-point Gauss-Legendre on each third of the bin for the density-weighted closed form
        const double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
        const double gw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                              0.2369268850561891};
        for (int h : {1, 5})
            for (double x : {-5.0, -1.0, 1.0, 5.0})
                for (int p : {1, 2}) {
                    const std::string at = fmt(" x=%g", x) + fmt(" h=%g", h) + fmt(" p=%g", p);
                    MomentResult cf;
                    try {
                        cf = cond_moment(p, x, model, h, 1e-10);
                        const auto o = cf_conditional_moment_oracle(model, p, x, h, opt.cf_tol);
                        r.checks.push_back(make_check("closed form vs cf-inversion (rel)" + at, rel_dev(cf.value, o.estimate), 1e-3,
                                                      fmt("closed=%.12g", cf.value) + fmt(" oracle=%.12g", o.estimate)));
                    } catch (const std::exception& e) {
                        r.checks.push_back(failed_check("closed form vs cf-inversion" + at, e));
                        continue;
                    }
                    const std::string name = "closed form vs monte carlo (combined se)" + at;
                    try {
                        // half-width aiming at ~4000 hits, capped relative to |x|
                        const double f0 = stable_pdf(marg, x).value;
                        const double delta = std::min(0.25 * (1.0 + std::abs(x)),
                                                      std::max(0.05 * (1.0 + std::abs(x)), 2000.0 / (opt.n_paths * f0)));
                        const auto mc = mc_conditional_moment(model, p, x, delta, h, opt.n_paths,
                                                              opt.seed + static_cast<std::uint64_t>(97 * h + 7 * (x + 5) + p));
                        // the estimator targets the bin average, not the value at x
                        double num = 0.0, den = 0.0, err = 0.0;
                        for (int j = 0; j < 3; ++j)
                            for (int i = 0; i < 5; ++i) {
                                const double u = x + delta * ((2 * j - 2) + gx[i]) / 3.0;
                                const double f = stable_pdf(marg, u).value;
                                const auto v = cond_moment(p, u, model, h, 1e-10);
                                num += gw[i] * f * v.value;
                                den += gw[i] * f;
                                err += gw[i] * f * v.err;
                            }
                        const double target = num / den;
                        const double se = std::sqrt(mc.stderr_ * mc.stderr_ + (err / den) * (err / den));
                        r.checks.push_back(make_check(name, std::abs(mc.estimate - target) / se, 3.0,
                                                      fmt("mc=%.6g", mc.estimate) + fmt(" se=%.3g", mc.stderr_) +
                                                          fmt(" bin_avg=%.6g", target) + fmt(" hits=%g", double(mc.n_hits)) + fmt(" half_width=%.3g", delta)));
                    } catch (const std::exception& e) {
                        r.checks.push_back(failed_check(name, e));
                    }
                }
    });
}

SuiteReport suite_asymptotics() {
    return timed("asymptotics", [](SuiteReport& r) {
        const AR1 m{1.7, 0.8, 0.1, 0.95};
        try {
            const double x = 1e4;
            const auto v = cond_moment(2, x, ProcessModel{m}, 1.0, 1e-10);
            const double lim = std::pow(m.rho, m.alpha - 2.0);
            r.checks.push_back(make_check("x^-2 E[X^2|x] at x=1e4 vs rho^(alpha h - 2h) (rel)", rel_dev(v.value / (x * x), lim), 0.01,
                                          std::string("regime=") + to_string(v.regime)));
        } catch (const std::exception& e) {
            r.checks.push_back(failed_check("x^-2 E[X^2|x] at x=1e4", e));
        }
        try {
            const auto am = asymptotic_moments(ProcessModel{m}, 1.0, +1);
            r.checks.push_back(make_check("gamma2 limit (rho,alpha,h)=(0.95,1.7,1) vs 7.06644", std::abs(am.gamma2_limit.value() - 7.06644), 1e-4,
                                          fmt("value=%.9g", *am.gamma2_limit)));
            const double q = std::pow(m.rho, m.alpha);
            const double two_point = 1.0 / q + 1.0 / (1.0 - q) - 6.0;
            r.checks.push_back(make_check("gamma2 limit vs two-point law", std::abs(*am.gamma2_limit - two_point), 1e-10));
        } catch (const std::exception& e) {
            r.checks.push_back(failed_check("gamma2 limit", e));
        }
        try {
            const OU ou{1.7, 0.8, 0.1};
            const double h0 = ou_kurtosis_h0(ou.alpha, ou.lambda);
            auto g2 = [&](double h) { return asymptotic_moments(ProcessModel{ou}, h, +1).gamma2_limit.value(); };
            r.checks.push_back(make_check("OU kurtosis limit at h0=ln2/(alpha lambda) vs -2", std::abs(g2(h0) + 2.0), 1e-9,
                                          fmt("h0=%.9g", h0)));
            const double dip = std::min(g2(h0 - 0.5), g2(h0 + 0.5)) - g2(h0);
            r.checks.push_back(make_check("OU kurtosis limit is minimal at h0", dip > 0.0 ? 0.0 : 1.0, 0.0, fmt("margin=%.3g", dip)));
        } catch (const std::exception& e) {
            r.checks.push_back(failed_check("OU kurtosis horizon", e));
        }
        const std::string name = "ar1 with rho<0 is rejected";
        try {
            asymptotic_moments(ProcessModel{AR1{1.7, 0.8, 0.1, -0.5}}, 1.0, +1);
            r.checks.push_back(make_check(name, 1.0, 0.0, "no error raised"));
        } catch (const Unsupported& e) {
            r.checks.push_back(make_check(name, e.code() == "asymptotics-unsupported" ? 0.0 : 1.0, 0.0, e.code()));
        } catch (const std::exception& e) {
            r.checks.push_back(failed_check(name, e));
        }
    });
}

SuiteReport suite_survival(const SurvivalSuiteOptions& opt) {
    return timed("survival", [&opt](SuiteReport& r) {
        const AR1 m{1.7, 0.8, 0.1, 0.95};
        try {
            const auto rep = survival_experiment(m, opt.run);
            for (const auto& s : rep.by_h)
                r.checks.push_back(make_check(fmt("P(duration >= %g) in binomial se", s.h), std::abs(s.empirical - s.expected) / s.stderr_,
                                              opt.n_se,
                                              fmt("empirical=%.4f", s.empirical) + fmt(" expected=%.4f", s.expected) +
                                                  fmt(" episodes=%g", double(s.n_episodes)) + fmt(" quantile=%g", opt.run.quantile) +
                                                  fmt(" threshold=%.4g", rep.threshold)));
        } catch (const std::exception& e) {
            r.checks.push_back(failed_check("survival experiment", e));
        }
    });
}

SuiteReport suite_ar2() {
    return timed("ar2", [](SuiteReport& r) {
        const std::vector<AR2> models{{1.7, 0.5, 1.0, 0.5, 0.3}, {1.5, -0.3, 0.5, 1.2, -0.35}, {0.9, 0.0, 1.0, 1.6, -0.64}};
        for (const auto& m : models)
            for (int h : {1, 3}) {
                char tag[128];
                std::snprintf(tag, sizeof tag, "ar2(a=%g,psi1=%g,psi2=%g) h=%d", m.alpha, m.psi1, m.psi2, h);
                try {
                    const auto [a1, a2] = ar2_roots(m.psi1, m.psi2);
                    const std::size_t K = ma_truncation(std::max(std::abs(a1), std::abs(a2)), m.alpha);
                    const auto r1 = ar2_spectral(m, h, K), r2 = ar2_spectral(m, h, 2 * K);
                    for (double nu : {0.0, 1.0, 2.0, 3.0}) {
                        const double v1 = nu_integral(r1, nu), v2 = nu_integral(r2, nu);
                        const double d = std::isfinite(v1) && std::isfinite(v2) ? rel_dev(v1, v2) : INFINITY;
                        r.checks.push_back(make_check(std::string("nu-integral ") + tag + fmt(" nu=%g", nu) + " under doubling K", d, 1e-8,
                                                      fmt("value=%.12g", v1)));
                    }
                } catch (const std::exception& e) {
                    r.checks.push_back(failed_check(std::string("nu-integral ") + tag, e));
                }
            }
    });
}

SuiteReport suite_ou_ar1() {
    return timed("ou-ar1", [](SuiteReport& r) {
        const double alpha = 1.7, beta = 0.8, lam = 0.2;
        const OU ou{alpha, beta, lam};
        const AR1 ar{alpha, beta, std::pow((1.0 - std::exp(-alpha * lam)) / (alpha * lam), 1.0 / alpha), std::exp(-lam)};
        for (int h : {1, 4})
            for (double x : {-3.0, -1.0, 0.5, 2.0, 6.0}) {
                const std::string name = fmt("matched moments p=1..4 at x=%g", x) + fmt(" h=%g", h);
                try {
                    double worst = 0.0;
                    for (int p = 1; p <= 4; ++p) {
                        const double a = cond_moment(p, x, ProcessModel{ou}, h, 1e-11).value;
                        const double b = cond_moment(p, x, ProcessModel{ar}, h, 1e-11).value;
                        worst = std::max(worst, rel_dev(a, b, 1.0));
                    }
                    r.checks.push_back(make_check(name, worst, 1e-8));
                } catch (const std::exception& e) {
                    r.checks.push_back(failed_check(name, e));
                }
            }
    });
}

}  // namespace sa
